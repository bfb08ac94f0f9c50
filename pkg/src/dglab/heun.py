"""Generalized eigenfunctions of the mode coupling via the three-term recursion.

For lambda != 0 the eigenvalue relation has a one-dimensional solution
space once eta_2 = 1 is fixed: row 1 pins eta_1 = A_2/lambda, row 2 pins
eta_3 (B_1 = 0 keeps eta_1 out of it), and each later row steps upward.
The companion function F with F_k = -eta_{k+1}/(k+1) solves

    z (z^2 - 1) F'' + (z^2 + 2 lambda z - 3) F' + 2 lambda F = 0,

second order with regular singular points -1, 0, 1, infinity, so the
series converges on the open unit disc and the interesting behavior sits
on the boundary.  On the imaginary axis lambda = is the edge exponents
force |eta_k| ~ k^{-2}, which is exactly slow enough that the order-3/2
energy sum k^3 |eta_k|^2 diverges like log K: the flow has no
square-summable eigenvector to converge to.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .linear_ops import tridiagonal_coeffs


@dataclass(frozen=True)
class EigenfunctionSeries:
    lam: complex
    entries: np.ndarray  # eta_k for k = 1..K

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.complex128)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def k_max(self) -> int:
        return len(self.entries)


def eigen_recursion(lam: complex, k_max: int) -> EigenfunctionSeries:
    """Solve the eigenvalue recursion upward with eta_2 = 1.

    lambda = 0 is rejected: row 1 then forces A_2 eta_2 = 0, which is the
    kernel direction, not a series of this family.
    """
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda = 0 is degenerate (kernel direction)")
    if k_max < 4:
        raise ValueError("need k_max >= 4")
    t = tridiagonal_coeffs("L", k_max + 1)
    eta = np.zeros(k_max, dtype=np.complex128)
    eta[0] = t.a[2] / lam
    eta[1] = 1.0
    # eta_{k+1} = (lam eta_k - B_{k-1} eta_{k-1}) / A_{k+1}; B_1 = 0 folds
    # the k = 2 row into the same loop
    a, b = t.a, t.b
    for k in range(2, k_max):
        eta[k] = (lam * eta[k - 1] - b[k - 1] * eta[k - 2]) / a[k + 1]
    return EigenfunctionSeries(lam, eta)


def companion_coefficients(series: EigenfunctionSeries) -> np.ndarray:
    """Taylor coefficients of F: F_k = -eta_{k+1}/(k+1) for k = 0..K-1."""
    ks = np.arange(1, series.k_max + 1, dtype=np.float64)
    return -series.entries / ks


def heun_residual(series: EigenfunctionSeries, z_samples) -> float:
    """Max ODE residual of the companion series over the given points.

    Truncation noise is the only contribution inside the disc; outside it
    the series diverges, so such samples are refused outright.
    """
    zs = np.atleast_1d(np.asarray(z_samples, dtype=np.complex128))
    if np.any(np.abs(zs) >= 1.0):
        raise ValueError("samples must satisfy |z| < 1")
    f = companion_coefficients(series)
    j = np.arange(len(f), dtype=np.float64)
    d1 = f[1:] * j[1:]            # F' coefficients, degree shifted by one
    d2 = d1[1:] * j[1:len(d1)]    # F'' likewise
    lam = series.lam
    worst = 0.0
    for z in zs:
        F = _horner(f, z)
        Fp = _horner(d1, z)
        Fpp = _horner(d2, z)
        r = z * (z * z - 1.0) * Fpp + (z * z + 2.0 * lam * z - 3.0) * Fp + 2.0 * lam * F
        worst = max(worst, abs(r))
    return worst


def _horner(c, z):
    acc = 0j
    for v in c[::-1]:
        acc = acc * z + v
    return acc


_INF = (math.inf, -math.inf)


@dataclass(frozen=True)
class IndicialData:
    point: complex | float
    exponents: tuple
    log_term: bool = False


def indicial_exponents(z0, lam: complex) -> IndicialData:
    """Frobenius exponent pair at one of the four singular points.

    Zero is always an exponent; the other is 2 -+ lambda at the boundary
    pair, -2 at the origin, and at infinity the root doubles, so the
    second solution picks up a logarithm.
    """
    lam = complex(lam)
    if z0 in _INF:
        return IndicialData(math.inf, (0.0, 0.0), log_term=True)
    if z0 == 1:
        return IndicialData(1.0, (0.0, 2.0 - lam))
    if z0 == -1:
        return IndicialData(-1.0, (0.0, 2.0 + lam))
    if z0 == 0:
        return IndicialData(0.0, (0.0, -2.0))
    raise ValueError(f"{z0!r} is not a singular point of the equation")


@dataclass(frozen=True)
class ConnectionFit:
    side: int
    a_hat: complex
    residual: float
    tail_exponent: float
    inconclusive: bool


def evaluate_series(series: EigenfunctionSeries, zs) -> np.ndarray:
    """sum_k eta_k z^{k-1} at each z, |z| < 1 (the function the fit samples)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    if np.any(np.abs(zs) >= 1.0):
        raise ValueError("samples must satisfy |z| < 1")
    out = np.empty(len(zs), dtype=np.complex128)
    for i, z in enumerate(zs):
        out[i] = _horner(series.entries, z)
    return out


def tail_exponent(series: EigenfunctionSeries) -> float:
    """Power p in |eta_k| ~ C k^p, fitted over the top octave k >= K/2.

    For lambda on the imaginary axis the two boundary branches interfere:
    the symmetry laws force eta_k to alternate real/imaginary, and the
    modulus carries the beat 2|a| k^{-2} |cos(s log k + phase)| whose
    nulls wreck a log-log fit on raw |eta_k|.  Consecutive entries are
    the cos and sin of the same slowly-turning phase, so the pair modulus
    sqrt(|eta_k|^2 + |eta_{k+1}|^2) is beat-free up to O(1/k).
    """
    k_max = series.k_max
    e2 = np.abs(series.entries) ** 2
    m = np.sqrt(e2[:-1] + e2[1:])
    ks = np.arange(1, k_max, dtype=np.float64)
    sel = ks >= k_max // 2
    return float(np.polyfit(np.log(ks[sel]), np.log(m[sel]), 1)[0])


def fit_connection(s: float, side: int = 1, m_lo: int = 4, m_hi: int = 14,
                   residual_cut: float = 1e-2) -> ConnectionFit:
    """Amplitude of the singular branch at the boundary point side = +-1.

    Samples the series on the radial approach z = side (1 - delta),
    delta = 2^{-m}, and least-squares fits

        c0 + c1 delta + A delta^{1 - side * i s}

    (the linear term belongs to the analytic part; dropping it biases A at
    the coarse end of the ladder).  The series is truncated at K = 8 *
    2^{m_hi}, putting e^{-8} on the neglected tail at the innermost
    sample.  Fitted A is only defined up to the analytic part's constant,
    so cross-checks should compare |A| and the residual.  A relative
    residual above residual_cut marks the fit inconclusive rather than
    inventing an amplitude.
    """
    if s == 0:
        raise ValueError("s = 0 is the degenerate parameter")
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    k_max = 8 * (1 << m_hi)
    series = eigen_recursion(1j * s, k_max)
    deltas = 2.0 ** -np.arange(m_lo, m_hi + 1, dtype=np.float64)
    zs = side * (1.0 - deltas)
    vals = evaluate_series(series, zs)
    expo = 1.0 - side * 1j * s
    cols = np.stack([np.ones_like(deltas, dtype=np.complex128),
                     deltas.astype(np.complex128),
                     np.exp(expo * np.log(deltas))], axis=1)
    sol, *_ = np.linalg.lstsq(cols, vals, rcond=None)
    resid = float(np.linalg.norm(vals - cols @ sol) / np.linalg.norm(vals))
    return ConnectionFit(side, complex(sol[2]), resid, tail_exponent(series),
                         inconclusive=resid > residual_cut)
