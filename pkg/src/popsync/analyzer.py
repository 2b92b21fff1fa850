"""Critical couplings at which the incoherent state loses stability.

With Lorentzian populations the linearised consistency condition on the
imaginary axis s = iv reads

    det(eta * kbar - diag(c_s(v))) = 0,   c_s(v) = 2 (delta_s + i (v + omega0_s)),

with kbar = k exp(-i alpha) the unit-strength complex coupling. For each
real v this is a degree-M polynomial in eta. A critical coupling is a real
root: we follow each root as a continuous branch in v, locate the zeros of
its imaginary part, and read off the real part there.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .model import CriticalSet, CriticalSolution, LorentzianSpec


class AnalyzerError(RuntimeError):
    pass


class BranchDefectError(AnalyzerError):
    """The number of finite roots changed along the scan."""


class EdgeWarning(UserWarning):
    """A critical point lies within one grid cell of the scan window edge."""


@dataclass(frozen=True)
class ScanParams:
    v_min: float
    v_max: float
    n_points: int = 4001
    im_tolerance: float = 1e-8
    refine_tolerance: float = 1e-10

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")
        if self.n_points < 3:
            raise ValueError("n_points must be at least 3")
        if not (self.im_tolerance > 0 and self.refine_tolerance > 0):
            raise ValueError("tolerances must be positive")

    @classmethod
    def default_for(cls, dists: Sequence[LorentzianSpec], **kw) -> "ScanParams":
        """Window spanning every -omega0 by 20 of the widest half-widths."""
        centres = [-d.omega0 for d in dists]
        pad = 20.0 * max(d.delta for d in dists)
        return cls(min(centres) - pad, max(centres) + pad, **kw)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_points)


@dataclass(frozen=True, eq=False)
class IdenticalCaseInput:
    """Two populations sharing one Lorentzian; T and D derive from ``k``."""

    k: np.ndarray
    delta: float
    omega0: float = 0.0
    trace_T: float = field(init=False)
    det_D: float = field(init=False)

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        if k.shape != (2, 2):
            raise ValueError("identical-population closed form needs a 2x2 coupling matrix")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "trace_T", float(k[0, 0] + k[1, 1]))
        object.__setattr__(self, "det_D", float(k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]))


@dataclass
class BranchSet:
    """``roots[b, j]`` is branch b evaluated at ``v_grid[j]``."""

    v_grid: np.ndarray
    roots: np.ndarray

    @property
    def n_branches(self) -> int:
        return self.roots.shape[0]


def c_values(dists: Sequence[LorentzianSpec], v: float) -> np.ndarray:
    return np.array([d.c_at(v) for d in dists])


def residual_scale(dists: Sequence[LorentzianSpec], v: float) -> float:
    return float(np.prod(np.maximum(1.0, np.abs(c_values(dists, v)))))


def unit_coupling(k, alpha=None) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if alpha is None or not np.any(alpha):
        return k.astype(complex)
    return k * np.exp(-1j * np.asarray(alpha, dtype=float))


def growth_rate_at_zero_coupling(dists: Sequence[LorentzianSpec]) -> list[complex]:
    """Uncoupled perturbation rates ``-delta - i omega0``; all decay."""
    return [complex(-d.delta, -d.omega0) for d in dists]


def evaluate_determinant(k, alpha, dists: Sequence[LorentzianSpec], eta: float, v: float) -> complex:
    kbar = unit_coupling(k, alpha)
    return complex(np.linalg.det(eta * kbar - np.diag(c_values(dists, v))))


def dispersion_roots_at(kbar, dists: Sequence[LorentzianSpec], v: float) -> np.ndarray:
    """All finite eta with det(eta kbar - diag(c(v))) = 0.

    Solved as the generalized eigenproblem diag(c) x = eta kbar x. Infinite
    eigenvalues (singular kbar) are dropped, so fewer than M roots may be
    returned. Roots are sorted by real then imaginary part.
    """
    kbar = np.atleast_2d(np.asarray(kbar, dtype=complex))
    if kbar.shape != (len(dists), len(dists)):
        raise ValueError(f"coupling shape {kbar.shape} does not match {len(dists)} populations")
    c = np.diag(c_values(dists, v))
    try:
        ab = scipy.linalg.eig(c, kbar, right=False, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise AnalyzerError(f"generalized eigensolver failed at v={v}: {exc}") from exc
    a, b = ab
    finite = np.abs(b) > 1e-12 * np.abs(a)
    roots = a[finite] / b[finite]
    return roots[np.lexsort((roots.imag, roots.real))]


def two_pop_quadratic_roots(k, dists: Sequence[LorentzianSpec], v: float) -> np.ndarray:
    """Roots of D eta^2 - 2 eta (b k00 + a k11) + 4ab = 0.

    ``a`` and ``b`` are ``c/2`` of the first and second population. With
    D = 0 the single root of the remaining linear equation is returned.
    """
    k = np.asarray(k, dtype=float)
    a = 0.5 * dists[0].c_at(v)
    b = 0.5 * dists[1].c_at(v)
    qa = k[0, 0] * k[1, 1] - k[0, 1] * k[1, 0]
    qb = -2.0 * (b * k[0, 0] + a * k[1, 1])
    qc = 4.0 * a * b
    if qa == 0.0:
        if qb == 0:
            return np.array([], dtype=complex)
        return np.array([-qc / qb])
    sq = np.sqrt(qb * qb - 4.0 * qa * qc + 0j)
    # pick the sign that avoids cancellation, then use the product of roots
    if (qb.conjugate() * sq).real < 0:
        sq = -sq
    q = -0.5 * (qb + sq)
    if q == 0:
        return np.array([0j, 0j])
    return np.array([q / qa, qc / q])


def identical_critical(inp: IdenticalCaseInput) -> CriticalSet:
    """Closed-form critical couplings for two identical Lorentzian populations.

    Cases by trace T and determinant D of k:

    =================  =================================  ====================
    condition          v*                                 eta*
    =================  =================================  ====================
    T = 0, D < 0       -omega0                            +/- 2 delta/sqrt(-D)
    T = 0, D >= 0      none                               none
    D = 0              -omega0                            2 delta / T
    T^2 > 4D           -omega0                            delta (T +/- sqrt(T^2 - 4D)) / D
    T^2 <= 4D          -omega0 +/- delta sqrt(4D - T^2)/T 4 delta / T
    =================  =================================  ====================
    """
    T, D = inp.trace_T, inp.det_D
    delta, w = inp.delta, inp.omega0
    scale = max(1.0, float(np.max(np.abs(inp.k))))
    t_zero = abs(T) <= 1e-12 * scale
    d_zero = abs(D) <= 1e-12 * scale * scale
    sols = []
    if t_zero:
        if D < 0 and not d_zero:
            eta = 2.0 * delta / math.sqrt(-D)
            sols = [CriticalSolution(eta, -w, 0), CriticalSolution(-eta, -w, 1)]
    elif d_zero:
        sols = [CriticalSolution(2.0 * delta / T, -w, 0)]
    elif T * T > 4.0 * D:
        root = math.sqrt(T * T - 4.0 * D)
        big = T + math.copysign(root, T)
        # the two roots are delta*big/D and 4*delta/big; this avoids cancellation
        sols = [CriticalSolution(delta * big / D, -w, 0), CriticalSolution(4.0 * delta / big, -w, 1)]
    else:
        dv = delta / T * math.sqrt(4.0 * D - T * T)
        eta = 4.0 * delta / T
        sols = [CriticalSolution(eta, -w + dv, 0)]
        if dv != 0.0:
            sols.append(CriticalSolution(eta, -w - dv, 1))
    return CriticalSet.from_solutions(sols)


def _pair(prev: np.ndarray, roots: np.ndarray, v: float) -> np.ndarray:
    """Reorder ``roots`` so that roots[i] continues prev[i] (minimal total distance)."""
    if roots.size != prev.size:
        raise BranchDefectError(
            f"finite root count changed from {prev.size} to {roots.size} at v={v}"
        )
    if prev.size <= 1:
        return roots
    _, cols = linear_sum_assignment(np.abs(prev[:, None] - roots[None, :]))
    return roots[cols]


def build_branches(k, alpha, dists: Sequence[LorentzianSpec], scan: ScanParams) -> BranchSet:
    kbar = unit_coupling(k, alpha)
    v = scan.grid
    first = dispersion_roots_at(kbar, dists, v[0])
    roots = np.empty((first.size, v.size), dtype=complex)
    roots[:, 0] = first
    for j in range(1, v.size):
        roots[:, j] = _pair(roots[:, j - 1], dispersion_roots_at(kbar, dists, v[j]), v[j])
    return BranchSet(v, roots)


def _accept(eta: complex, scan: ScanParams) -> bool:
    return abs(eta.imag) <= scan.im_tolerance * max(1.0, abs(eta))


def _refine(kbar, dists, b, lo, hi, r_lo, scan):
    im_lo = r_lo[b].imag
    while hi - lo > scan.refine_tolerance:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        r_mid = _pair(r_lo, dispersion_roots_at(kbar, dists, mid), mid)
        im_mid = r_mid[b].imag
        if im_mid == 0.0:
            return mid, r_mid[b]
        if (im_mid > 0) == (im_lo > 0):
            lo, r_lo, im_lo = mid, r_mid, im_mid
        else:
            hi = mid
    v_star = 0.5 * (lo + hi)
    return v_star, _pair(r_lo, dispersion_roots_at(kbar, dists, v_star), v_star)[b]


def find_critical_couplings(k, alpha, dists: Sequence[LorentzianSpec],
                            scan: Optional[ScanParams] = None) -> CriticalSet:
    """Real roots of the dispersion polynomial found by branch tracking in v.

    Every sign change of Im(eta) along a branch is bisected (re-solving and
    re-pairing at each midpoint) down to ``refine_tolerance``. Brackets whose
    refined root is not real within ``im_tolerance`` are discarded; those come
    from pairing glitches, not genuine crossings.
    """
    if scan is None:
        scan = ScanParams.default_for(dists)
    kbar = unit_coupling(k, alpha)
    branches = build_branches(k, alpha, dists, scan)
    v = branches.v_grid
    found = []
    for b in range(branches.n_branches):
        im = branches.roots[b].imag
        for j in range(v.size):
            if im[j] == 0.0:
                eta = branches.roots[b, j]
                if _accept(eta, scan):
                    found.append(CriticalSolution(float(eta.real), float(v[j]), b))
                continue
            if j + 1 < v.size and im[j] * im[j + 1] < 0:
                v_star, eta = _refine(kbar, dists, b, v[j], v[j + 1], branches.roots[:, j], scan)
                if _accept(eta, scan):
                    found.append(CriticalSolution(float(eta.real), float(v_star), b))

    found.sort(key=lambda s: (s.eta_star, s.v_star))
    tol = 10.0 * scan.im_tolerance
    unique = []
    for s in found:
        if any(abs(s.eta_star - u.eta_star) <= tol * max(1.0, abs(u.eta_star))
               and abs(s.v_star - u.v_star) <= tol * max(1.0, abs(u.v_star)) for u in unique):
            continue
        unique.append(s)

    cell = (scan.v_max - scan.v_min) / (scan.n_points - 1)
    for s in unique:
        if s.v_star - scan.v_min < cell or scan.v_max - s.v_star < cell:
            warnings.warn(
                f"critical point eta*={s.eta_star:.6g} at v*={s.v_star:.6g} is at the scan "
                f"window edge [{scan.v_min}, {scan.v_max}]; roots outside may be missed",
                EdgeWarning,
                stacklevel=2,
            )
    return CriticalSet.from_solutions(unique)


def is_identical_pair(dists: Sequence[LorentzianSpec], alpha=None) -> bool:
    return (
        len(dists) == 2
        and dists[0] == dists[1]
        and (alpha is None or not np.any(alpha))
    )


def analyze(k, alpha, dists: Sequence[LorentzianSpec], scan: Optional[ScanParams] = None):
    """Predict critical couplings, preferring the closed form when it applies.

    Returns ``(critical_set, method)`` with method ``"closed_form"`` or
    ``"scan"``. When the closed form is used, the scan still runs and a
    disagreement is reported as a warning.
    """
    scanned = find_critical_couplings(k, alpha, dists, scan)
    if not is_identical_pair(dists, alpha):
        return scanned, "scan"
    closed = identical_critical(IdenticalCaseInput(k, dists[0].delta, dists[0].omega0))
    a = sorted(set(round(e, 6) for e in closed.etas))
    b = sorted(set(round(e, 6) for e in scanned.etas))
    if a != b:
        warnings.warn(f"closed form {a} and scan {b} disagree", RuntimeWarning, stacklevel=2)
    return closed, "closed_form"
