"""Command-line front end.

    popsync analyze|simulate|sweep|verify --config run.yaml [--out DIR] [--seed N] [--threads N]

Exit codes: 0 success, 1 prediction not confirmed (verify only),
2 configuration error, 3 analyzer failure. Concurrent runs sharing one
output directory are not supported.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import warnings
from pathlib import Path

from .analyzer import AnalyzerError, analyze
from .config import RunConfig, load_run_config
from .model import ConfigError
from .reports import (
    compare,
    read_critical_csv,
    read_sweep_csv,
    write_critical_csv,
    write_sweep_csv,
    write_table,
    write_verify_csv,
)
from .simulator import run_trial, sweep_eta

log = logging.getLogger("popsync")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_ANALYZER = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(args) -> RunConfig:
    try:
        cfg = load_run_config(args.config)
        if args.seed is not None:
            cfg.sim = dataclasses.replace(cfg.sim, seed=args.seed)
    except (ConfigError, ValueError) as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from exc
    if args.out is not None:
        cfg.output_dir = Path(args.out)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg


def _fmt_eta(x):
    return "none" if x is None else f"{x:.6g}"


def cmd_analyze(cfg: RunConfig, args=None):
    system = cfg.system
    k, alpha = system.coupling.k, system.coupling.alpha
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cset, method = analyze(k, alpha, system.dists, cfg.scan_params())
    except AnalyzerError as exc:
        raise CliError(EXIT_ANALYZER, f"analyzer failure: {exc}") from exc
    for w in caught:
        log.warning("%s", w.message)
    path = cfg.output_dir / "critical.csv"
    write_critical_csv(path, cset, k, alpha, system.dists, method)
    if not cset.solutions:
        print("no synchronization for any coupling strength")
    else:
        print(f"critical couplings ({method}): " + ", ".join(f"{e:.6g}" for e in cset.etas))
        print(f"relevant thresholds: negative {_fmt_eta(cset.relevant_negative)}, "
              f"positive {_fmt_eta(cset.relevant_positive)}")
    print(f"wrote {path}")
    return cset


def cmd_simulate(cfg: RunConfig, args=None):
    res = run_trial(cfg.system, cfg.sim, initial_phases=cfg.initial_phases)
    path = cfg.output_dir / "simulate.csv"
    rows = [[m + 1, n, res.r_mean[m], res.r_std[m]] for m, n in enumerate(cfg.system.sizes)]
    meta = {"eta": repr(cfg.system.coupling.eta), "seed": cfg.sim.seed, "dt": cfg.sim.dt,
            "sampling_mode": cfg.sim.sampling_mode}
    write_table(path, meta, ["population", "n", "r_mean", "r_std"], rows)
    for m, r in enumerate(res.r_mean):
        print(f"population {m + 1}: r_mean={r:.4f} r_std={res.r_std[m]:.4f}")
    print(f"wrote {path}")
    return res


def cmd_sweep(cfg: RunConfig, args=None):
    if cfg.eta_grid is None:
        raise CliError(EXIT_CONFIG, "config error: sim.eta_grid is required for sweep")
    threads = getattr(args, "threads", None) or os.cpu_count() or 1
    result = sweep_eta(cfg.system, cfg.eta_grid, cfg.sim, threads=threads)
    path = cfg.output_dir / "sweep.csv"
    write_sweep_csv(path, result, cfg.onset_c, cfg.onset_margin)
    print(f"swept {result.eta_values.size} coupling values; wrote {path}")
    return result


def verify_from_artifacts(cfg: RunConfig):
    """Compare critical.csv against sweep.csv and write verify.csv."""
    rows = read_critical_csv(cfg.output_dir / "critical.csv")
    result, c, margin = read_sweep_csv(cfg.output_dir / "sweep.csv")
    report = compare(rows, result, c, margin, cfg.verify)
    write_verify_csv(cfg.output_dir / "verify.csv", report, cfg.verify)
    return report


def cmd_verify(cfg: RunConfig, args=None):
    cmd_analyze(cfg, args)
    cmd_sweep(cfg, args)
    report = verify_from_artifacts(cfg)
    for row in report.rows:
        side, pred, det, _, allowed, _, status = row
        print(f"{side:>8}: predicted {_fmt_eta(pred)}, detected {_fmt_eta(det)}, "
              f"allowed {_fmt_eta(allowed)} -> {status}")
    print("verify: " + ("PASS (vacuous)" if report.vacuous else "PASS" if report.passed else "FAIL"))
    return report


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="popsync",
        description="Predict and verify synchronization onset in coupled oscillator populations.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="run configuration (YAML or JSON)")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, default=None, help="override sim.seed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for eta sweeps (default: available cores)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    try:
        cfg = _load(args)
        out = COMMANDS[args.command](cfg, args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    if args.command == "verify" and not out.passed:
        return EXIT_MISMATCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
