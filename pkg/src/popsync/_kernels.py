"""Compiled inner loops for the population simulator.

Phases of all populations live in one flat array; population ``m`` owns the
slice ``starts[m]:starts[m+1]``. The complex coupling is passed split into
real and imaginary matrices because numba's complex matrix products would
allocate on every call.
"""
import math

import numba as nb
import numpy as np

TWO_PI = 2.0 * math.pi

# fdlibm three-part split of pi/2 for Cody-Waite reduction
_PIO2_1 = 1.57079632673412561417e00
_PIO2_2 = 6.07710050630396597660e-11
_PIO2_3 = 2.02226624871116645580e-21
_TWO_OVER_PI = 6.36619772367581382433e-01

# 'contract' lets LLVM fuse multiply-adds, which is what makes the polynomial
# loop vectorise; results stay within one ulp of libm.
_FM = {"contract", "nsz", "nnan", "ninf"}
_OPTS = dict(nogil=True, cache=True, error_model="numpy", fastmath=_FM)


@nb.njit(inline="always", **_OPTS)
def sincos(x):
    """Branch-free sin and cos, accurate to ~1 ulp for |x| < 1e5."""
    n = np.floor(x * _TWO_OVER_PI + 0.5)
    r = ((x - n * _PIO2_1) - n * _PIO2_2) - n * _PIO2_3
    r2 = r * r
    s = r * (1.0 + r2 * (-1.0 / 6 + r2 * (1.0 / 120 + r2 * (-1.0 / 5040 + r2 * (
        1.0 / 362880 + r2 * (-1.0 / 39916800 + r2 * (1.0 / 6227020800 + r2 * (
            -1.0 / 1307674368000))))))))
    c = 1.0 + r2 * (-0.5 + r2 * (1.0 / 24 + r2 * (-1.0 / 720 + r2 * (1.0 / 40320 + r2 * (
        -1.0 / 3628800 + r2 * (1.0 / 479001600 + r2 * (-1.0 / 87178291200 + r2 * (
            1.0 / 20922789888000))))))))
    q = n - 4.0 * np.floor(n * 0.25)
    odd = q - 2.0 * np.floor(q * 0.5)
    ss = odd * c + (1.0 - odd) * s
    cc = odd * s + (1.0 - odd) * c
    sgn_s = 1.0 - 2.0 * (q >= 2.0)
    sgn_c = 1.0 - 2.0 * ((q == 1.0) | (q == 2.0))
    return sgn_s * ss, sgn_c * cc


@nb.njit(**_OPTS)
def sincos_array(x, s, c):
    for i in range(x.size):
        a, b = sincos(x[i])
        s[i] = a
        c[i] = b


@nb.njit(**_OPTS)
def mean_field(ph, starts, cbuf, sbuf, zr, zi):
    """Fill cos/sin buffers and the per-population mean phasor (zr + i zi)."""
    sincos_array(ph, sbuf, cbuf)
    m_pops = starts.size - 1
    for m in range(m_pops):
        a = 0.0
        b = 0.0
        for i in range(starts[m], starts[m + 1]):
            a += cbuf[i]
            b += sbuf[i]
        n = starts[m + 1] - starts[m]
        zr[m] = a / n
        zi[m] = b / n


@nb.njit(**_OPTS)
def rhs(ph, om, starts, kr, ki, out, cbuf, sbuf, zr, zi):
    """d(phase)/dt = omega + Im(W_m exp(-i phase)), W = kbar @ Z."""
    mean_field(ph, starts, cbuf, sbuf, zr, zi)
    m_pops = starts.size - 1
    for m in range(m_pops):
        wr = 0.0
        wi = 0.0
        for q in range(m_pops):
            wr += kr[m, q] * zr[q] - ki[m, q] * zi[q]
            wi += kr[m, q] * zi[q] + ki[m, q] * zr[q]
        for i in range(starts[m], starts[m + 1]):
            out[i] = om[i] + wi * cbuf[i] - wr * sbuf[i]


@nb.njit(**_OPTS)
def wrap_phases(ph):
    for i in range(ph.size):
        x = ph[i] - TWO_PI * np.floor(ph[i] / TWO_PI)
        if x >= TWO_PI:
            x -= TWO_PI
        ph[i] = x


@nb.njit(**_OPTS)
def rk4_step(ph, om, starts, kr, ki, dt, work, zr, zi):
    """Advance ``ph`` in place by one classical RK4 step and wrap to [0, 2pi).

    ``work`` is a (7, N) scratch array. On return zr, zi hold the mean
    phasor of the state at the *start* of the step.
    """
    n = ph.size
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    tmp = work[4]
    cbuf = work[5]
    sbuf = work[6]
    m_pops = starts.size - 1
    z0r = np.empty(m_pops)
    z0i = np.empty(m_pops)
    rhs(ph, om, starts, kr, ki, k1, cbuf, sbuf, z0r, z0i)
    h2 = 0.5 * dt
    for i in range(n):
        tmp[i] = ph[i] + h2 * k1[i]
    rhs(tmp, om, starts, kr, ki, k2, cbuf, sbuf, zr, zi)
    for i in range(n):
        tmp[i] = ph[i] + h2 * k2[i]
    rhs(tmp, om, starts, kr, ki, k3, cbuf, sbuf, zr, zi)
    for i in range(n):
        tmp[i] = ph[i] + dt * k3[i]
    rhs(tmp, om, starts, kr, ki, k4, cbuf, sbuf, zr, zi)
    h6 = dt / 6.0
    for i in range(n):
        ph[i] = ph[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    wrap_phases(ph)
    for m in range(m_pops):
        zr[m] = z0r[m]
        zi[m] = z0i[m]


@nb.njit(**_OPTS)
def integrate(ph, om, starts, kr, ki, dt, n_transient, n_average, r_out):
    """Run ``n_transient`` unrecorded steps, then ``n_average`` recorded ones.

    ``r_out[j, m]`` is |Z_m| at the start of recorded step j, so the samples
    cover t_transient, ..., t_transient + (n_average - 1) dt.
    """
    work = np.empty((7, ph.size))
    m_pops = starts.size - 1
    zr = np.empty(m_pops)
    zi = np.empty(m_pops)
    for _ in range(n_transient):
        rk4_step(ph, om, starts, kr, ki, dt, work, zr, zi)
    for j in range(n_average):
        rk4_step(ph, om, starts, kr, ki, dt, work, zr, zi)
        for m in range(m_pops):
            r_out[j, m] = min(1.0, math.sqrt(zr[m] * zr[m] + zi[m] * zi[m]))
