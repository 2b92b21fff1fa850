"""Run configuration files.

A run is described by one YAML (or JSON) document::

    populations:                 # one entry per population, in matrix order
      - {n: 2000, delta: 1.0, omega0: 2.0}
      - {n: 2000, delta: 0.5, omega0: 4.0}
    coupling:
      k: [[-1, -1], [1, 2]]      # row = receiving population, column = sender
      alpha: [[0, 0], [0, 0]]    # optional phase lags, default zero
      eta: 0.5                   # optional, used by `simulate`
    sim:                         # optional section; defaults shown
      dt: 0.02
      t_transient: 200
      t_average: 200
      seed: 0
      sampling_mode: deterministic   # or random
      initial_phase_mode: random     # or given (then initial_phases: [[...], ...])
      eta_grid: {min: -4, max: 2, step: 0.125}   # or an explicit list
      onset_c: 2.0
      onset_margin: 0.05
    scan:                        # optional; window defaults to -omega0 +/- 20 delta
      v_min: -24
      v_max: 18
      n_points: 4001
      im_tolerance: 1.0e-8
      refine_tolerance: 1.0e-10
    verify:                      # optional
      rel_tol: 0.1
      abs_tol: 0.5
      near_zero: 1.0
    output_dir: out

Unknown keys anywhere are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .analyzer import ScanParams
from .model import ConfigError, SystemConfig, validate
from .simulator import SimParams

_TOP_KEYS = {"populations", "coupling", "sim", "scan", "verify", "output_dir"}
_POP_KEYS = {"n", "delta", "omega0"}
_COUPLING_KEYS = {"k", "alpha", "eta"}
_SIM_KEYS = {
    "dt", "t_transient", "t_average", "seed", "sampling_mode", "initial_phase_mode",
    "initial_phases", "eta_grid", "onset_c", "onset_margin",
}
_SCAN_KEYS = {"v_min", "v_max", "n_points", "im_tolerance", "refine_tolerance"}
_VERIFY_KEYS = {"rel_tol", "abs_tol", "near_zero"}


@dataclass(frozen=True)
class VerifyTolerance:
    rel_tol: float = 0.1
    abs_tol: float = 0.5
    near_zero: float = 1.0

    def allowed(self, eta_star: float) -> float:
        """Absolute error allowed when confirming ``eta_star``."""
        return self.abs_tol if abs(eta_star) < self.near_zero else self.rel_tol * abs(eta_star)


@dataclass
class RunConfig:
    system: SystemConfig
    sim: SimParams = field(default_factory=SimParams)
    eta_grid: Optional[np.ndarray] = None
    initial_phases: Optional[list] = None
    onset_c: float = 2.0
    onset_margin: float = 0.05
    scan: Optional[ScanParams] = None
    verify: VerifyTolerance = field(default_factory=VerifyTolerance)
    output_dir: Path = Path("out")

    def scan_params(self) -> ScanParams:
        return self.scan or ScanParams.default_for(self.system.dists)


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError("value", f"{where} must be a mapping")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError("value", f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def parse_eta_grid(spec) -> np.ndarray:
    """``{min, max, step}`` (inclusive) or an explicit list."""
    if isinstance(spec, dict):
        _check_keys(spec, {"min", "max", "step"}, "sim.eta_grid")
        lo, hi, step = float(spec["min"]), float(spec["max"]), float(spec["step"])
        if not step > 0 or hi < lo:
            raise ConfigError("value", "eta_grid needs step > 0 and max >= min")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return np.round(lo + step * np.arange(n), 12)
    grid = np.asarray(spec, dtype=float).ravel()
    if grid.size == 0 or not np.all(np.isfinite(grid)):
        raise ConfigError("value", "eta_grid must be a non-empty list of finite numbers")
    return grid


def parse_run_config(d: dict) -> RunConfig:
    _check_keys(d, _TOP_KEYS, "config")
    for key in ("populations", "coupling"):
        if key not in d:
            raise ConfigError("value", f"missing required section '{key}'")
    if not isinstance(d["populations"], list):
        raise ConfigError("value", "populations must be a list")
    for i, p in enumerate(d["populations"]):
        _check_keys(p, _POP_KEYS, f"populations[{i}]")
        missing = _POP_KEYS - set(p)
        if missing:
            raise ConfigError("value", f"populations[{i}] missing {', '.join(sorted(missing))}")
    _check_keys(d["coupling"], _COUPLING_KEYS, "coupling")
    if "k" not in d["coupling"]:
        raise ConfigError("value", "coupling.k is required")
    try:
        system = SystemConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("value", f"malformed system description: {exc}") from exc

    sim_d = dict(d.get("sim") or {})
    _check_keys(sim_d, _SIM_KEYS, "sim")
    grid = parse_eta_grid(sim_d.pop("eta_grid")) if "eta_grid" in sim_d else None
    initial_phases = sim_d.pop("initial_phases", None)
    onset_c = float(sim_d.pop("onset_c", 2.0))
    onset_margin = float(sim_d.pop("onset_margin", 0.05))
    try:
        sim = SimParams(**sim_d)
    except (TypeError, ValueError) as exc:
        raise ConfigError("value", f"sim: {exc}") from exc
    if sim.initial_phase_mode == "given":
        if initial_phases is None or len(initial_phases) != system.m:
            raise ConfigError("value", "initial_phase_mode 'given' needs one initial_phases list per population")
        for i, (ph, n) in enumerate(zip(initial_phases, system.sizes)):
            if len(ph) != n:
                raise ConfigError("dimension", f"initial_phases[{i}] has {len(ph)} entries, expected {n}")

    scan = None
    if d.get("scan"):
        scan_d = dict(d["scan"])
        _check_keys(scan_d, _SCAN_KEYS, "scan")
        default = ScanParams.default_for(system.dists)
        scan_d.setdefault("v_min", default.v_min)
        scan_d.setdefault("v_max", default.v_max)
        try:
            scan = ScanParams(**scan_d)
        except (TypeError, ValueError) as exc:
            raise ConfigError("value", f"scan: {exc}") from exc

    ver_d = d.get("verify") or {}
    _check_keys(ver_d, _VERIFY_KEYS, "verify")
    verify = VerifyTolerance(**{k: float(v) for k, v in ver_d.items()})

    return RunConfig(
        system=system,
        sim=sim,
        eta_grid=grid,
        initial_phases=initial_phases,
        onset_c=onset_c,
        onset_margin=onset_margin,
        scan=scan,
        verify=verify,
        output_dir=Path(d.get("output_dir", "out")),
    )


def load_run_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("value", f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("value", f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("value", f"config {path} must be a mapping at the top level")
    return parse_run_config(data)


def dump_system(system: SystemConfig, path) -> None:
    validate(system)
    Path(path).write_text(yaml.safe_dump(system.to_dict(), sort_keys=False))


def load_system(path) -> SystemConfig:
    data = yaml.safe_load(Path(path).read_text())
    _check_keys(data, {"populations", "coupling"}, "system")
    return SystemConfig.from_dict(data)
