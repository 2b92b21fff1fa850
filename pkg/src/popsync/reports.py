"""CSV artifacts: critical.csv, sweep.csv and verify.csv.

Numbers are written with Python's shortest round-trip repr. Lines starting
with ``#`` carry ``key=value`` metadata and are skipped by plain CSV readers
that honour comments.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analyzer import evaluate_determinant, residual_scale
from .config import VerifyTolerance
from .model import CriticalSet, LorentzianSpec
from .simulator import SweepResult, detect_onset

CRITICAL_COLUMNS = ["eta_star", "v_star", "branch_id", "residual", "is_relevant"]
VERIFY_COLUMNS = ["side", "eta_predicted", "eta_detected", "abs_error", "tolerance", "rel_error", "status"]
VERSION_LINE = f"# version=popsync {__version__}\n"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_table(path: Path, meta: dict, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    buf = io.StringIO()
    buf.write(VERSION_LINE)
    for key, val in meta.items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    Path(path).write_text(buf.getvalue())


def read_table(path: Path):
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        elif line.strip():
            lines.append(line)
    rows = list(csv.DictReader(lines))
    return meta, rows


def write_critical_csv(path, cset: CriticalSet, k, alpha, dists: Sequence[LorentzianSpec],
                       method: str) -> None:
    """One row per distinct eta*; ``residual`` is |det| / prod max(1, |c|).

    When several frequencies share an eta* (mirror pairs of identical
    populations) the one with the smallest v* is kept.
    """
    rows, seen = [], []
    for s in sorted(cset.solutions, key=lambda s: (s.eta_star, s.v_star)):
        if any(abs(s.eta_star - e) <= 1e-9 * max(1.0, abs(e)) for e in seen):
            continue
        seen.append(s.eta_star)
        res = abs(evaluate_determinant(k, alpha, dists, s.eta_star, s.v_star))
        rows.append([s.eta_star, s.v_star, s.branch_id, res / residual_scale(dists, s.v_star),
                     cset.is_relevant(s)])
    write_table(path, {"method": method}, CRITICAL_COLUMNS, rows)


def read_critical_csv(path) -> list[dict]:
    _, rows = read_table(path)
    return [
        {
            "eta_star": float(r["eta_star"]),
            "v_star": float(r["v_star"]),
            "branch_id": int(r["branch_id"]),
            "residual": float(r["residual"]),
            "is_relevant": r["is_relevant"] == "true",
        }
        for r in rows
    ]


def write_sweep_csv(path, result: SweepResult, onset_c: float = 2.0, onset_margin: float = 0.05) -> None:
    m = result.r_mean.shape[0]
    meta = {k: v for k, v in result.metadata.items() if k != "version"}
    meta["n"] = ";".join(str(n) for n in result.sizes)
    meta["onset_c"] = repr(float(onset_c))
    meta["onset_margin"] = repr(float(onset_margin))
    cols = ["eta"] + [f"r_mean_{i + 1}" for i in range(m)] + [f"r_std_{i + 1}" for i in range(m)]
    rows = [
        [result.eta_values[j], *result.r_mean[:, j], *result.r_std[:, j]]
        for j in range(result.eta_values.size)
    ]
    write_table(path, meta, cols, rows)


def read_sweep_csv(path):
    """Return ``(SweepResult, onset_c, onset_margin)``."""
    meta, rows = read_table(path)
    sizes = [int(x) for x in meta["n"].split(";")]
    m = len(sizes)
    eta = np.array([float(r["eta"]) for r in rows])
    r_mean = np.array([[float(r[f"r_mean_{i + 1}"]) for r in rows] for i in range(m)]).reshape(m, eta.size)
    r_std = np.array([[float(r[f"r_std_{i + 1}"]) for r in rows] for i in range(m)]).reshape(m, eta.size)
    result = SweepResult(eta, r_mean, r_std, sizes, metadata=meta)
    return result, float(meta.get("onset_c", 2.0)), float(meta.get("onset_margin", 0.05))


@dataclass
class VerifyReport:
    rows: list = field(default_factory=list)
    passed: bool = True
    vacuous: bool = False


def detected_onsets(result: SweepResult, c: float = 2.0, margin: float = 0.05) -> dict:
    """Per side, the onset closest to zero over all populations.

    Collective behaviour starts when the first population leaves incoherence.
    """
    out: dict[str, Optional[float]] = {"negative": None, "positive": None}
    for m in range(result.r_mean.shape[0]):
        for eta in detect_onset(result, m, c, margin):
            side = "negative" if eta < 0 else "positive"
            if out[side] is None or abs(eta) < abs(out[side]):
                out[side] = eta
    return out


def compare(critical_rows: list[dict], result: SweepResult, c: float, margin: float,
            tol: VerifyTolerance) -> VerifyReport:
    """Pair each relevant prediction with the detected onset on its side.

    A side fails if the prediction is unmatched, matched outside tolerance,
    or if an onset is detected where none is predicted.
    """
    predicted = {"negative": None, "positive": None}
    for row in critical_rows:
        if row["is_relevant"]:
            predicted["negative" if row["eta_star"] < 0 else "positive"] = row["eta_star"]
    detected = detected_onsets(result, c, margin)
    lo, hi = float(result.eta_values.min()), float(result.eta_values.max())

    report = VerifyReport()
    for side in ("negative", "positive"):
        pred, det = predicted[side], detected[side]
        if pred is None and det is None:
            continue
        if pred is None:
            report.rows.append([side, None, det, None, None, None, "unpredicted"])
            report.passed = False
            continue
        allowed = tol.allowed(pred)
        if det is None:
            status = "missed" if lo <= pred <= hi else "outside_grid"
            report.rows.append([side, pred, None, None, allowed, None, status])
            report.passed = False
            continue
        err = abs(det - pred)
        ok = err <= allowed
        report.rows.append([side, pred, det, err, allowed, err / abs(pred), "pass" if ok else "fail"])
        report.passed &= ok
    if not report.rows:
        report.vacuous = True
        report.rows.append(["none", None, None, None, None, None, "vacuous"])
    return report


def write_verify_csv(path, report: VerifyReport, tol: VerifyTolerance) -> None:
    meta = {
        "rel_tol": repr(tol.rel_tol),
        "abs_tol": repr(tol.abs_tol),
        "near_zero": repr(tol.near_zero),
        "vacuous": fmt(report.vacuous),
        "passed": fmt(report.passed),
    }
    write_table(path, meta, VERIFY_COLUMNS, report.rows)


def read_verify_csv(path):
    return read_table(path)
