import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from popsync.distributions import (
    g_inverse_lorentzian,
    lorentzian_pdf,
    lorentzian_quantile,
    sample_frequencies,
)
from popsync.model import LorentzianSpec

specs = st.builds(LorentzianSpec, st.floats(-20, 20), st.floats(0.01, 10))


@pytest.mark.parametrize(
    "omega0, delta, omega, expected",
    [(0, 1, 0, 1 / math.pi), (2, 1, 3, 1 / (2 * math.pi)), (4, 0.5, 4, 2 / math.pi)],
)
def test_pdf_values(omega0, delta, omega, expected):
    assert lorentzian_pdf(LorentzianSpec(omega0, delta), omega) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("spec", [LorentzianSpec(0, 1), LorentzianSpec(4, 0.5)])
def test_pdf_normalised(spec):
    total, _ = integrate.quad(lambda w: lorentzian_pdf(spec, w), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize(
    "omega0, delta, p, expected", [(2, 1, 0.5, 2.0), (2, 1, 0.75, 3.0), (4, 0.5, 0.25, 3.5)]
)
def test_quantile_values(omega0, delta, p, expected):
    assert lorentzian_quantile(LorentzianSpec(omega0, delta), p) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_quantile_domain(p):
    with pytest.raises(ValueError):
        lorentzian_quantile(LorentzianSpec(0, 1), p)


@pytest.mark.parametrize("p", np.linspace(0.02, 0.98, 13))
def test_quantile_inverts_integrated_pdf(p):
    spec = LorentzianSpec(2.0, 1.0)
    q = lorentzian_quantile(spec, p)
    mass, _ = integrate.quad(lambda w: lorentzian_pdf(spec, w), -np.inf, q)
    assert mass == pytest.approx(p, abs=1e-8)


@given(specs, st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_quantile_monotone(spec, p1, p2):
    lo, hi = sorted((p1, p2))
    assert lorentzian_quantile(spec, lo) <= lorentzian_quantile(spec, hi)


def test_deterministic_samples():
    np.testing.assert_allclose(sample_frequencies(LorentzianSpec(2, 1), 2), [1.0, 3.0], atol=1e-14)
    t = math.tan(math.pi / 3)
    np.testing.assert_allclose(sample_frequencies(LorentzianSpec(0, 1), 3), [-t, 0.0, t], atol=1e-14)


@given(specs, st.integers(1, 500))
def test_deterministic_samples_sorted_and_symmetric(spec, n):
    w = sample_frequencies(spec, n, "deterministic")
    assert w.size == n
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(w - spec.omega0, -(w[::-1] - spec.omega0),
                               atol=1e-9 * max(1.0, np.abs(w).max()))


def test_random_samples_median_and_reproducible():
    spec = LorentzianSpec(2.0, 1.0)
    w = sample_frequencies(spec, 10_000, "random", seed=7)
    assert abs(np.median(w) - 2.0) < 0.05
    assert np.array_equal(w, sample_frequencies(spec, 10_000, "random", seed=7))
    assert not np.array_equal(w, sample_frequencies(spec, 10_000, "random", seed=8))


def test_unknown_mode():
    with pytest.raises(ValueError):
        sample_frequencies(LorentzianSpec(0, 1), 4, "sobol")


@pytest.mark.parametrize(
    "omega0, delta, s, expected", [(2, 1, 0, 2 + 4j), (0, 1, 0j, 2), (4, 0.5, -4j, 1)]
)
def test_g_inverse(omega0, delta, s, expected):
    assert g_inverse_lorentzian(LorentzianSpec(omega0, delta), s) == pytest.approx(expected, abs=1e-15)


@given(specs, st.floats(-1e3, 1e3))
def test_g_inverse_real_part_on_imaginary_axis(spec, v):
    val = g_inverse_lorentzian(spec, 1j * v)
    assert val.real == pytest.approx(2 * spec.delta)
    assert val.real > 0
