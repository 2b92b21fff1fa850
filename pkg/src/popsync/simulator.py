"""Direct simulation of coupled oscillator populations in mean-field form.

Each oscillator obeys

    d(sigma_i)/dt = omega_i + sum_s' eta k[s, s'] r_s' sin(psi_s' - sigma_i - alpha[s, s'])

which equals the all-to-all pairwise sum but costs O(M N) per evaluation.
Integration is fixed-step classical RK4; phases are wrapped to [0, 2 pi)
after every step.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .distributions import RNG_ALGORITHM, SAMPLING_MODES, make_rng, sample_frequencies
from .model import OrderParameter, SystemConfig, validate

PHASE_MODES = ("random", "given")


@dataclass(frozen=True)
class EnsembleState:
    """Phases and natural frequencies, one array per population."""

    phases: tuple
    omegas: tuple
    t: float = 0.0

    def __post_init__(self):
        if len(self.phases) != len(self.omegas):
            raise ValueError("phases and omegas must have one array per population")
        ph = tuple(np.mod(np.asarray(p, dtype=float), 2 * math.pi) for p in self.phases)
        om = tuple(np.asarray(o, dtype=float) for o in self.omegas)
        for p, o in zip(ph, om):
            if p.shape != o.shape or p.ndim != 1:
                raise ValueError("phase and frequency arrays must be 1-d with matching lengths")
            p[p >= 2 * math.pi] = 0.0
        object.__setattr__(self, "phases", ph)
        object.__setattr__(self, "omegas", om)

    @property
    def sizes(self) -> list[int]:
        return [p.size for p in self.phases]


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.02
    t_transient: float = 200.0
    t_average: float = 200.0
    seed: int = 0
    sampling_mode: str = "deterministic"
    initial_phase_mode: str = "random"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_transient >= 0:
            raise ValueError("t_transient must be non-negative")
        if not self.t_average >= 10 * self.dt:
            raise ValueError("t_average must cover at least 10 steps")
        if self.sampling_mode not in SAMPLING_MODES:
            raise ValueError(f"sampling_mode must be one of {SAMPLING_MODES}")
        if self.initial_phase_mode not in PHASE_MODES:
            raise ValueError(f"initial_phase_mode must be one of {PHASE_MODES}")

    @property
    def n_transient(self) -> int:
        return int(round(self.t_transient / self.dt))

    @property
    def n_average(self) -> int:
        return int(round(self.t_average / self.dt))


class TrialResult(NamedTuple):
    r_mean: np.ndarray
    r_std: np.ndarray


@dataclass
class SweepResult:
    """Time-averaged order parameters over an eta grid.

    ``r_mean[m, j]`` is population m at ``eta_values[j]``.
    """

    eta_values: np.ndarray
    r_mean: np.ndarray
    r_std: np.ndarray
    sizes: list
    metadata: dict = field(default_factory=dict)


def _flatten(arrays: Sequence[np.ndarray]):
    sizes = [a.size for a in arrays]
    starts = np.zeros(len(sizes) + 1, dtype=np.int64)
    starts[1:] = np.cumsum(sizes)
    return np.concatenate(arrays).astype(float), starts


def _split(flat: np.ndarray, starts: np.ndarray) -> tuple:
    return tuple(flat[starts[m]:starts[m + 1]].copy() for m in range(starts.size - 1))


def _coupling_parts(config: SystemConfig):
    kbar = config.coupling.complex_coupling()
    return np.ascontiguousarray(kbar.real), np.ascontiguousarray(kbar.imag)


def _child_seed(seed: int, *path: int) -> int:
    ss = np.random.SeedSequence([int(seed), *path])
    return int(ss.generate_state(1, np.uint64)[0])


def compute_order_parameters(state: EnsembleState) -> list[OrderParameter]:
    """Polar form ``r exp(i psi)`` of each population's mean phasor."""
    out = []
    for ph in state.phases:
        z = np.mean(np.exp(1j * ph))
        out.append(OrderParameter(min(1.0, abs(z)), float(np.angle(z)) % (2 * math.pi)))
    return out


def derivative(state: EnsembleState, config: SystemConfig) -> list[np.ndarray]:
    if state.sizes != config.sizes:
        raise ValueError(f"state sizes {state.sizes} do not match config {config.sizes}")
    ph, starts = _flatten(state.phases)
    om, _ = _flatten(state.omegas)
    kr, ki = _coupling_parts(config)
    out = np.empty_like(ph)
    m = config.m
    _kernels.rhs(ph, om, starts, kr, ki, out, np.empty_like(ph), np.empty_like(ph),
                 np.empty(m), np.empty(m))
    return list(_split(out, starts))


def step_rk4(state: EnsembleState, config: SystemConfig, dt: float) -> EnsembleState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    ph, starts = _flatten(state.phases)
    om, _ = _flatten(state.omegas)
    kr, ki = _coupling_parts(config)
    m = config.m
    _kernels.rk4_step(ph, om, starts, kr, ki, float(dt), np.empty((7, ph.size)),
                      np.empty(m), np.empty(m))
    return EnsembleState(_split(ph, starts), state.omegas, state.t + dt)


def sample_population_frequencies(config: SystemConfig, params: SimParams) -> tuple:
    """Natural frequencies for every population, fixed by ``params.seed``."""
    return tuple(
        sample_frequencies(p.dist, p.n, params.sampling_mode, _child_seed(params.seed, 0, m))
        for m, p in enumerate(config.populations)
    )


def initial_state(config: SystemConfig, params: SimParams, omegas=None,
                  initial_phases=None, trial_index: int = 0) -> EnsembleState:
    if omegas is None:
        omegas = sample_population_frequencies(config, params)
    if params.initial_phase_mode == "given":
        if initial_phases is None:
            raise ValueError("initial_phase_mode='given' needs initial_phases")
        phases = tuple(np.asarray(p, dtype=float) for p in initial_phases)
    else:
        rng = make_rng(params.seed, 1, trial_index)
        phases = tuple(rng.uniform(0.0, 2 * math.pi, p.n) for p in config.populations)
    state = EnsembleState(phases, omegas)
    if state.sizes != config.sizes:
        raise ValueError(f"initial state sizes {state.sizes} do not match config {config.sizes}")
    return state


def run_trial(config: SystemConfig, params: SimParams, *, omegas=None,
              initial_phases=None, trial_index: int = 0) -> TrialResult:
    """Integrate one system at ``config.coupling.eta``.

    Discards ``t_transient`` of settling, then returns the mean and standard
    deviation of each r_s over ``t_average``, sampled every step.
    """
    validate(config)
    state = initial_state(config, params, omegas, initial_phases, trial_index)
    ph, starts = _flatten(state.phases)
    om, _ = _flatten(state.omegas)
    kr, ki = _coupling_parts(config)
    r = np.empty((params.n_average, config.m))
    _kernels.integrate(ph, om, starts, kr, ki, float(params.dt),
                       params.n_transient, params.n_average, r)
    return TrialResult(r.mean(axis=0), r.std(axis=0))


def sweep_eta(config: SystemConfig, eta_grid, params: SimParams,
              threads: Optional[int] = None) -> SweepResult:
    """Run one trial per eta value.

    Frequencies are drawn once for the whole sweep; each trial gets fresh
    initial phases derived from the seed and its grid index. Trials may run
    on ``threads`` workers; results are assembled in grid order.
    """
    validate(config)
    etas = np.asarray(eta_grid, dtype=float).ravel()
    if etas.size == 0 or not np.all(np.isfinite(etas)):
        raise ValueError("eta grid must be non-empty and finite")
    omegas = sample_population_frequencies(config, params)

    def one(j):
        return run_trial(config.with_eta(etas[j]), params, omegas=omegas, trial_index=j)

    threads = threads or os.cpu_count() or 1
    if threads > 1 and etas.size > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(etas.size)))
    else:
        results = [one(j) for j in range(etas.size)]

    from . import __version__

    meta = {
        "seed": params.seed,
        "dt": params.dt,
        "t_transient": params.t_transient,
        "t_average": params.t_average,
        "n": list(config.sizes),
        "sampling_mode": params.sampling_mode,
        "initial_phase_mode": params.initial_phase_mode,
        "rng": RNG_ALGORITHM,
        "version": f"popsync {__version__}",
    }
    return SweepResult(
        eta_values=etas,
        r_mean=np.array([res.r_mean for res in results]).T.reshape(config.m, etas.size),
        r_std=np.array([res.r_std for res in results]).T.reshape(config.m, etas.size),
        sizes=list(config.sizes),
        metadata=meta,
    )


def onset_threshold(n: int, c: float = 2.0, margin: float = 0.05) -> float:
    """Incoherence ceiling ``c / sqrt(n) + margin`` for a population of size n."""
    return c / math.sqrt(n) + margin


def detect_onset(result: SweepResult, population: int, c: float = 2.0,
                 margin: float = 0.05) -> list[float]:
    """Estimated onset couplings for one population.

    Scans outward from eta = 0 on each side and reports where the averaged
    r first exceeds the incoherence threshold, linearly interpolated between
    the bracketing grid points. Negative onset first, then positive.
    """
    if result.eta_values.size == 0:
        raise ValueError("empty sweep result")
    thr = onset_threshold(result.sizes[population], c, margin)
    eta = result.eta_values
    r = result.r_mean[population]
    onsets = []
    for side in (-1.0, 1.0):
        idx = np.nonzero(side * eta >= 0)[0]
        idx = idx[np.argsort(side * eta[idx], kind="stable")]
        prev = None
        for j in idx:
            if r[j] > thr:
                if prev is None:
                    onsets.append(float(eta[j]))
                else:
                    frac = (thr - r[prev]) / (r[j] - r[prev])
                    onsets.append(float(eta[prev] + frac * (eta[j] - eta[prev])))
                break
            prev = j
    # eta = 0 belongs to both sides; report it once
    return sorted(set(onsets))
