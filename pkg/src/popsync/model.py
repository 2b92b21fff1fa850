"""Shared domain types for multi-population phase-oscillator systems.

Coupling matrices are stored row = receiving population, column = sending
population, so ``k[s, t]`` scales the pull that population ``t`` exerts on
the oscillators of population ``s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a system description violates a structural invariant.

    ``kind`` is a short machine-readable tag: ``"dimension"``, ``"delta"``,
    ``"omega0"``, ``"n"``, ``"eta"`` or ``"value"``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class LorentzianSpec:
    """Cauchy-Lorentz natural-frequency distribution.

    omega0 is the centre frequency and delta the half-width at half-maximum,
    both in radians per unit time.
    """

    omega0: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "delta", float(self.delta))

    def c_at(self, v: float) -> complex:
        """Inverse response ``2 (delta + i (v + omega0))`` on the imaginary axis s = iv."""
        return 2.0 * complex(self.delta, v + self.omega0)


@dataclass(frozen=True)
class PopulationSpec:
    n: int
    dist: LorentzianSpec


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ConfigError("dimension", f"{name} must be a 2-d matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Connectivity ``k``, phase lags ``alpha`` and overall strength ``eta``.

    ``alpha`` defaults to the zero matrix.
    """

    k: np.ndarray
    alpha: Optional[np.ndarray] = None
    eta: float = 0.0

    def __post_init__(self):
        k = _as_matrix(self.k, "k")
        alpha = np.zeros_like(k) if self.alpha is None else _as_matrix(self.alpha, "alpha")
        alpha.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def m(self) -> int:
        return self.k.shape[0]

    def unit_coupling(self) -> np.ndarray:
        """``k * exp(-i alpha)``: the complex coupling at eta = 1."""
        if not np.any(self.alpha):
            return self.k.astype(complex)
        return self.k * np.exp(-1j * self.alpha)

    def complex_coupling(self) -> np.ndarray:
        """``eta * k * exp(-i alpha)`` elementwise."""
        return self.eta * self.unit_coupling()

    def with_eta(self, eta: float) -> "CouplingSpec":
        return CouplingSpec(self.k, self.alpha, eta)

    def __eq__(self, other):
        if not isinstance(other, CouplingSpec):
            return NotImplemented
        return (
            self.k.shape == other.k.shape
            and np.array_equal(self.k, other.k)
            and np.array_equal(self.alpha, other.alpha)
            and self.eta == other.eta
        )

    __hash__ = None


@dataclass(frozen=True)
class SystemConfig:
    populations: tuple
    coupling: CouplingSpec

    def __post_init__(self):
        object.__setattr__(self, "populations", tuple(self.populations))

    @property
    def m(self) -> int:
        return len(self.populations)

    @property
    def dists(self) -> list[LorentzianSpec]:
        return [p.dist for p in self.populations]

    @property
    def sizes(self) -> list[int]:
        return [p.n for p in self.populations]

    def with_eta(self, eta: float) -> "SystemConfig":
        return SystemConfig(self.populations, self.coupling.with_eta(eta))

    def to_dict(self) -> dict:
        return {
            "populations": [
                {"n": p.n, "delta": p.dist.delta, "omega0": p.dist.omega0}
                for p in self.populations
            ],
            "coupling": {
                "k": self.coupling.k.tolist(),
                "alpha": self.coupling.alpha.tolist(),
                "eta": self.coupling.eta,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        pops = [
            PopulationSpec(int(p["n"]), LorentzianSpec(p["omega0"], p["delta"]))
            for p in d["populations"]
        ]
        c = d["coupling"]
        config = cls(pops, CouplingSpec(c["k"], c.get("alpha"), c.get("eta", 0.0)))
        validate(config)
        return config


@dataclass(frozen=True)
class OrderParameter:
    r: float
    psi: float


@dataclass(frozen=True)
class GrowthPoint:
    """A candidate root ``eta`` of the dispersion polynomial at s = iv."""

    v: float
    eta: complex


@dataclass(frozen=True)
class CriticalSolution:
    eta_star: float
    v_star: float
    branch_id: int


@dataclass(frozen=True)
class CriticalSet:
    """Marginal-stability solutions plus the thresholds nearest zero coupling."""

    solutions: tuple = ()
    relevant_negative: Optional[float] = None
    relevant_positive: Optional[float] = None

    @classmethod
    def from_solutions(cls, solutions: Sequence[CriticalSolution]) -> "CriticalSet":
        sols = tuple(sorted(solutions, key=lambda s: (s.eta_star, s.v_star)))
        pos = [s.eta_star for s in sols if s.eta_star > 0]
        neg = [s.eta_star for s in sols if s.eta_star < 0]
        return cls(sols, max(neg) if neg else None, min(pos) if pos else None)

    @property
    def etas(self) -> list[float]:
        return [s.eta_star for s in self.solutions]

    @property
    def relevant(self) -> list[float]:
        return [e for e in (self.relevant_negative, self.relevant_positive) if e is not None]

    def is_relevant(self, sol: CriticalSolution) -> bool:
        return sol.eta_star in (self.relevant_negative, self.relevant_positive)

    def __len__(self):
        return len(self.solutions)


def validate(config: SystemConfig) -> None:
    """Check every structural invariant of ``config``.

    Raises ConfigError naming the first violation; returns None when the
    configuration is usable.
    """
    if not config.populations:
        raise ConfigError("dimension", "at least one population is required")
    for i, pop in enumerate(config.populations):
        if not isinstance(pop.n, (int, np.integer)) or isinstance(pop.n, bool) or pop.n < 1:
            raise ConfigError("n", f"population {i}: n must be a positive integer, got {pop.n!r}")
        if not math.isfinite(pop.dist.omega0):
            raise ConfigError("omega0", f"population {i}: omega0 must be finite")
        if not (pop.dist.delta > 0) or not math.isfinite(pop.dist.delta):
            raise ConfigError("delta", f"population {i}: delta must be positive, got {pop.dist.delta}")
    k, alpha = config.coupling.k, config.coupling.alpha
    if k.shape[0] != k.shape[1]:
        raise ConfigError("dimension", f"k must be square, got shape {k.shape}")
    if alpha.shape != k.shape:
        raise ConfigError("dimension", f"alpha shape {alpha.shape} does not match k shape {k.shape}")
    if k.shape[0] != config.m:
        raise ConfigError(
            "dimension",
            f"coupling is {k.shape[0]}x{k.shape[0]} but there are {config.m} populations",
        )
    if not (np.all(np.isfinite(k)) and np.all(np.isfinite(alpha))):
        raise ConfigError("value", "k and alpha entries must be finite")
    if not math.isfinite(config.coupling.eta):
        raise ConfigError("eta", "eta must be finite")
