"""Cauchy-Lorentz frequency distributions.

Random draws use numpy's PCG64 bit generator seeded through SeedSequence,
which is portable and bit-reproducible across platforms.
"""
from __future__ import annotations

import math

import numpy as np

from .model import LorentzianSpec

RNG_ALGORITHM = "numpy.random.PCG64"

SAMPLING_MODES = ("deterministic", "random")


def make_rng(*seed_parts: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(s) for s in seed_parts])))


def lorentzian_pdf(spec: LorentzianSpec, omega):
    """Density ``(delta/pi) / ((omega - omega0)**2 + delta**2)``."""
    x = np.asarray(omega, dtype=float) - spec.omega0
    out = spec.delta / math.pi / (x * x + spec.delta**2)
    return float(out) if out.ndim == 0 else out


def lorentzian_cdf(spec: LorentzianSpec, omega):
    out = 0.5 + np.arctan((np.asarray(omega, dtype=float) - spec.omega0) / spec.delta) / math.pi
    return float(out) if out.ndim == 0 else out


def lorentzian_quantile(spec: LorentzianSpec, p):
    """Inverse CDF ``omega0 + delta * tan(pi (p - 1/2))`` for p in the open unit interval."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
        raise ValueError("quantile probability must lie strictly between 0 and 1")
    out = spec.omega0 + spec.delta * np.tan(math.pi * (p_arr - 0.5))
    return float(out) if out.ndim == 0 else out


def sample_frequencies(
    spec: LorentzianSpec, n: int, mode: str = "deterministic", seed: int = 0
) -> np.ndarray:
    """Draw ``n`` natural frequencies.

    ``deterministic`` returns the quantiles at ``(i - 1/2)/n``: sorted,
    symmetric about ``omega0`` and free of sampling noise. The extreme
    values sit near ``omega0 +/- 2 n delta / pi``; no further clipping is
    applied. ``random`` draws i.i.d. inverse-CDF samples from a PCG64
    generator seeded with ``seed``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if mode == "deterministic":
        p = (np.arange(1, n + 1) - 0.5) / n
    elif mode == "random":
        p = make_rng(seed).random(n)
        # Generator.random is on [0, 1); map an exact zero inside the domain
        p[p == 0.0] = 0.5 / n
    else:
        raise ValueError(f"unknown sampling mode {mode!r}; expected one of {SAMPLING_MODES}")
    return np.atleast_1d(lorentzian_quantile(spec, p))


def g_inverse_lorentzian(spec: LorentzianSpec, s: complex) -> complex:
    """Closed-form ``1/g(s) = 2 (s + delta + i omega0)`` for a Lorentzian population."""
    return 2.0 * (complex(s) + spec.delta + 1j * spec.omega0)
