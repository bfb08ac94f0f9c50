"""Mode-space linear operators around the sine equilibrium.

States live in the holomorphic sector: eta_k for k = 1..K, with the real
field recovered as eta_k e^{ikt} + conjugate mirror.  The linearization L
and the multiplier-side operator M are tridiagonal couplings

    (T eta)_k = B_{k-1} eta_{k-1} + A_{k+1} eta_{k+1},   eta_0 = eta_{K+1} = 0,

with L: A_k = (k+1)(1 - 1/k)/2, B_k = (1-k)(1 - 1/k)/2 (A_0 = B_0 = 1/2)
and M: A_k = k/2, B_k = -k/2.  The truncation at K is a hard zero: the top
row simply loses its A_{K+1} term, which keeps the quadratic invariant
sum c_k |eta_k|^2, c_k = (k-1)^2 (k+1), exactly conserved.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .dynamics import exact_pushforward
from .spectral import (
    MeanZero,
    RealCircleField,
    biot_savart,
    derivative,
    evaluate,
    from_samples,
    GridSamples,
    mean_value,
    quotient_y0_norm,
    to_samples,
)


# ---------------------------------------------------------------------------
# coefficients and mode vectors


@dataclass(frozen=True)
class TridiagonalCoeffs:
    name: str
    a: np.ndarray  # A_k for k = 0..K+1
    b: np.ndarray  # B_k for k = 0..K+1

    @property
    def k_max(self) -> int:
        return len(self.a) - 2


def tridiagonal_coeffs(name: str, k_max: int) -> TridiagonalCoeffs:
    k = np.arange(k_max + 2, dtype=np.float64)
    if name == "L":
        with np.errstate(divide="ignore", invalid="ignore"):
            damp = 1.0 - 1.0 / np.where(k > 0, k, 1.0)
        a = 0.5 * (k + 1.0) * damp
        b = 0.5 * (1.0 - k) * damp
        a[0] = b[0] = 0.5
        a[1] = b[1] = 0.0
    elif name == "M":
        a = 0.5 * k
        b = -0.5 * k
    else:
        raise ValueError(f"unknown operator {name!r}, want 'L' or 'M'")
    a.setflags(write=False)
    b.setflags(write=False)
    return TridiagonalCoeffs(name, a, b)


@dataclass(frozen=True)
class ModeVector:
    """Holomorphic-sector coefficients, entry i holds mode k = i + 1."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.complex128)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def k_max(self) -> int:
        return len(self.entries)

    def mode(self, k: int) -> complex:
        if not 1 <= k <= self.k_max:
            return 0j
        return complex(self.entries[k - 1])

    def __add__(self, other):
        return ModeVector(self.entries + other.entries)

    def __sub__(self, other):
        return ModeVector(self.entries - other.entries)

    def __rmul__(self, a):
        return ModeVector(a * self.entries)

    __mul__ = __rmul__


def mode_vector(pairs: dict[int, complex], k_max: int) -> ModeVector:
    e = np.zeros(k_max, dtype=np.complex128)
    for k, v in pairs.items():
        if not 1 <= k <= k_max:
            raise ValueError(f"mode {k} outside 1..{k_max}")
        e[k - 1] = v
    return ModeVector(e)


def field_from_modes(eta: ModeVector) -> RealCircleField:
    """Real field with the given holomorphic part and zero mean."""
    k = eta.k_max
    c = np.zeros(2 * k + 1, dtype=np.complex128)
    c[k + 1:] = eta.entries
    c[:k] = np.conj(eta.entries[::-1])
    return RealCircleField(c)


def modes_from_field(w: RealCircleField) -> ModeVector:
    if abs(mean_value(w)) > 1e-12 * max(1.0, float(np.abs(w.coeffs).max())):
        raise ValueError("sector projection needs a zero-mean field")
    n = w.max_mode
    return ModeVector(w.coeffs[n + 1:])


def apply_tridiagonal(coeffs: TridiagonalCoeffs, eta: ModeVector) -> ModeVector:
    k = eta.k_max
    if coeffs.k_max < k:
        raise ValueError("coefficient table shorter than the state")
    e = eta.entries
    out = np.zeros_like(e)
    # B_{k-1} eta_{k-1}: contributes for k = 2..K
    out[1:] = coeffs.b[1:k] * e[:-1]
    # A_{k+1} eta_{k+1}: contributes for k = 1..K-1; eta_{K+1} = 0
    out[:-1] += coeffs.a[2:k + 1] * e[1:]
    return ModeVector(out)


def energy_weights(k_max: int) -> np.ndarray:
    k = np.arange(1, k_max + 1, dtype=np.float64)
    return (k - 1.0) ** 2 * (k + 1.0)


def conserved_energy(eta: ModeVector) -> float:
    """sum_k c_k |eta_k|^2 with c_k = (k-1)^2 (k+1); exactly flat under L."""
    return float(np.sum(energy_weights(eta.k_max) * np.abs(eta.entries) ** 2))


# ---------------------------------------------------------------------------
# physical-space forms


def apply_L_physical(w: RealCircleField, allow_mean: bool = False) -> RealCircleField:
    """cos(t) (w + v) - sin(t) (w + v)_t with v the recovered velocity.

    The output band is one wider than the input.  With allow_mean the
    formula extends to constants (the velocity sees only the zero-mean
    part), e.g. the constant 1 maps to cos(t).
    """
    mean = mean_value(w)
    if not allow_mean and abs(mean) > 1e-12 * max(1.0, float(np.abs(w.coeffs).max())):
        raise ValueError("nonzero mean; pass allow_mean=True for the extended operator")
    n = w.max_mode
    w0 = w - mean * _const_field(n)
    v = biot_savart(w0, MeanZero())
    g = w + v  # the mean rides along in w
    m = _even_grid(2 * (n + 2) + 1)
    th = -np.pi + 2.0 * np.pi * np.arange(m) / m
    gs = to_samples(g, m).values
    dgs = to_samples(derivative(g), m).values
    vals = np.cos(th) * gs - np.sin(th) * dgs
    return from_samples(GridSamples(vals), n + 1)


def _const_field(n):
    c = np.zeros(2 * n + 1, dtype=np.complex128)
    c[n] = 1.0
    return RealCircleField(c)


def _even_grid(min_size):
    m = int(min_size)
    return m + (m % 2)


def apply_M_physical(w: RealCircleField) -> RealCircleField:
    """-sin(t) w_t, computed exactly on a padded grid."""
    n = w.max_mode
    m = _even_grid(2 * (n + 2) + 1)
    th = -np.pi + 2.0 * np.pi * np.arange(m) / m
    dws = to_samples(derivative(w), m).values
    return from_samples(GridSamples(-np.sin(th) * dws), n + 1)


def apply_K(w: RealCircleField) -> RealCircleField:
    """cos(t) * biot_savart(w): the compact remainder L - L0 acts through this.

    The mean part is inert (its Hilbert transform vanishes, so it drives
    no velocity), which is what sends the constant 1 to zero.
    """
    v = biot_savart(w - mean_value(w) * _const_field(w.max_mode), MeanZero())
    n = v.max_mode
    m = _even_grid(2 * (n + 2) + 1)
    th = -np.pi + 2.0 * np.pi * np.arange(m) / m
    vs = to_samples(v, m).values
    return from_samples(GridSamples(np.cos(th) * vs), n + 1)


# ---------------------------------------------------------------------------
# evolution


@dataclass(frozen=True)
class LinearTrajectory:
    times: np.ndarray
    states: list  # ModeVector at each recorded time


def _velocity_at_zero(e: np.ndarray) -> float:
    ks = np.arange(1, len(e) + 1, dtype=np.float64)
    return -2.0 * float(np.sum((e / ks).real))


def _linear_rhs(coeffs, e, gauge_term):
    k = len(e)
    out = np.empty_like(e)
    out[1:] = coeffs.b[1:k] * e[:-1]
    out[0] = 0.0
    out[:-1] += coeffs.a[2:k + 1] * e[1:]
    if gauge_term:
        out[0] -= 0.5 * _velocity_at_zero(e)
    return out


def evolve_linear(eta0: ModeVector, t_final: float, dt: float,
                  coeffs: TridiagonalCoeffs | None = None,
                  gauge_term: bool = False, method: str = "rk4",
                  record_every: int = 1) -> LinearTrajectory:
    """March d eta/dt = T eta (default T = L) and record the trajectory.

    method "rk4" is the default integrator; "trapezoid" is the A-stable
    midpoint-averaged step that conserves the quadratic invariant to
    rounding at any dt (useful for long horizons at large K, where the
    rk4 stability limit dt ~ 2.8/K is out of reach).  A tail-energy
    fraction beyond 0.9 K above 1e-10 triggers a resolution warning.
    """
    if coeffs is None:
        coeffs = tridiagonal_coeffs("L", eta0.k_max)
    if coeffs.k_max < eta0.k_max:
        raise ValueError("coefficient table shorter than the state")
    k = eta0.k_max
    steps = max(1, round(t_final / dt)) if t_final > 0 else 0
    e = eta0.entries.copy()

    times = [0.0]
    states = [ModeVector(e.copy())]

    if method == "rk4":
        stepper = _make_rk4_step(coeffs, gauge_term, dt)
    elif method == "trapezoid":
        if gauge_term:
            raise NotImplementedError("trapezoid stepping is plain-L only")
        # real data stays real under the real-coefficient coupling, and the
        # real solve moves half the memory of the complex one
        if not e.imag.any():
            e = e.real.copy()
        stepper = _make_trapezoid_step(coeffs, k, dt, e.dtype)
    else:
        raise ValueError(f"unknown method {method!r}")

    t = 0.0
    for i in range(steps):
        e = stepper(e)
        t += dt
        if (i + 1) % record_every == 0 or i == steps - 1:
            times.append(t)
            states.append(ModeVector(e.copy()))

    _tail_check(states[-1])
    return LinearTrajectory(np.array(times), states)


def _make_rk4_step(coeffs, gauge_term, dt):
    def step(e):
        k1 = _linear_rhs(coeffs, e, gauge_term)
        k2 = _linear_rhs(coeffs, e + 0.5 * dt * k1, gauge_term)
        k3 = _linear_rhs(coeffs, e + 0.5 * dt * k2, gauge_term)
        k4 = _linear_rhs(coeffs, e + dt * k3, gauge_term)
        return e + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return step


def _make_trapezoid_step(coeffs, k, dt, dtype=np.complex128):
    # I - dt/2 T is the same tridiagonal matrix every step, so factor it
    # once (gttrf) and back-substitute per step (gttrs); T has superdiag
    # A_{k+1} and subdiag B_{k-1}
    half = 0.5 * dt
    a_hi = half * coeffs.a[2:k + 1].astype(dtype)
    b_lo = half * coeffs.b[1:k].astype(dtype)
    gttrf, gttrs = get_lapack_funcs(("gttrf", "gttrs"), dtype=dtype)
    dl, d, du, du2, ipiv, info = gttrf(-b_lo, np.ones(k, dtype=dtype), -a_hi)
    if info != 0:
        raise np.linalg.LinAlgError(f"trapezoid matrix factorization failed (info={info})")

    def step(e):
        rhs = e.copy()
        rhs[1:] += b_lo * e[:-1]
        rhs[:-1] += a_hi * e[1:]
        x, info = gttrs(dl, d, du, du2, ipiv, rhs, overwrite_b=True)
        return x

    return step


def taper_modes(eta: ModeVector, k_lo: int, k_hi: int) -> ModeVector:
    """Restrict to modes below k_hi with a cosine shoulder from k_lo up.

    A hard band cut leaves a spurious standing edge in the lift, the same
    defect the truncation wall itself creates; the smooth shoulder keeps
    the outgoing-wave phase cancellation intact, so weighted norms of the
    restriction track the full state until reflected content actually
    comes back down to k_hi.
    """
    if not 1 <= k_lo < k_hi:
        raise ValueError("need 1 <= k_lo < k_hi")
    k_hi = min(k_hi, eta.k_max)
    k = np.arange(1, k_hi + 1)
    w = np.ones(k_hi)
    ramp = k >= k_lo
    w[ramp] = 0.5 * (1.0 + np.cos(np.pi * (k[ramp] - k_lo) / (k_hi - k_lo)))
    return ModeVector(eta.entries[:k_hi] * w)


def quotient_norm_series(traj: LinearTrajectory, gamma: float = 1.75,
                         window: tuple[int, int] | None = None) -> np.ndarray:
    """Quotient-space Y0 norm of each recorded state's lift.

    window = (k_lo, k_hi) applies taper_modes first; without it the full
    state is lifted, which is only trustworthy before the band edge fills.
    """
    out = np.empty(len(traj.times))
    for i, eta in enumerate(traj.states):
        if window is not None:
            eta = taper_modes(eta, *window)
        out[i] = quotient_y0_norm(field_from_modes(eta), gamma)
    return out


def _tail_check(eta: ModeVector) -> None:
    k = eta.k_max
    if k < 16:
        return
    wts = energy_weights(k)
    e2 = wts * np.abs(eta.entries) ** 2
    total = e2.sum()
    tail = e2[int(0.9 * k):].sum()
    if total > 0 and tail > 1e-10 * total:
        warnings.warn(f"band edge carries {tail/total:.2e} of the invariant; "
                      "the truncation wall is in play", RuntimeWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# transport semigroup and composition flow


def exact_evolve_L0(xi0: RealCircleField, t: float, n_out: int | None = None) -> RealCircleField:
    """Solution of xi_t + sin(t) xi_th - cos(t) xi = 0: the weighted pushforward."""
    return exact_pushforward(xi0, t, n_out)


def mobius_compose(w: RealCircleField, t: float, n_out: int | None = None) -> RealCircleField:
    """w composed with the backward Mobius circle flow (no weight).

    Plain composition is the flow of the advection part alone; it is an
    isometry of the half-order Sobolev seminorm (conformal invariance of
    the Dirichlet energy).
    """
    from .dynamics import _mobius_pullback

    n = n_out if n_out is not None else max(8 * w.max_mode, 64)
    m = 2 * n + 2
    th = -np.pi + 2.0 * np.pi * np.arange(m) / m
    y, _ = _mobius_pullback(th, t)
    vals, _ = evaluate(w, y)
    return from_samples(GridSamples(vals), n)


# ---------------------------------------------------------------------------
# decay analysis


def decay_rate_fit(times, values):
    """(beta_hat, r_squared) from a log-linear fit on the last half window.

    values must be positive; needs at least 10 samples in the fit window.
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if len(t) != len(v) or len(t) < 10:
        raise ValueError("need at least 10 samples")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("values must be positive and finite")
    cut = 0.5 * (t[0] + t[-1])
    sel = t >= cut
    if sel.sum() < 10:
        raise ValueError("fewer than 10 samples in the fit window")
    x = t[sel]
    y = np.log(v[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -float(slope), r2


def windowed_mode_average(traj: LinearTrajectory, k: int, t_lo: float, t_hi: float) -> float:
    """Time average of |eta_k| over [t_lo, t_hi]."""
    sel = (traj.times >= t_lo) & (traj.times <= t_hi)
    if not np.any(sel):
        raise ValueError("empty window")
    vals = np.array([abs(s.mode(k)) for s, m in zip(traj.states, sel) if m])
    return float(vals.mean())


# ---------------------------------------------------------------------------
# strip-side energy identity


def mobius_power_coeffs(s: float, k_max: int) -> np.ndarray:
    """Taylor coefficients of ((1-z)/(1+z))^{is} at 0, k = 0..k_max.

    Recursion from the ODE (1-z^2) g' = -2is g:
    (k+1) h_{k+1} = (k-1) h_{k-1} - 2is h_k.
    """
    h = np.zeros(k_max + 1, dtype=np.complex128)
    h[0] = 1.0
    if k_max >= 1:
        h[1] = -2j * s
    for k in range(1, k_max):
        h[k + 1] = ((k - 1.0) * h[k - 1] - 2j * s * h[k]) / (k + 1.0)
    return h


def _gauss_panel(lo, hi, n):
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


def strip_side_energy(phi, s_lo: float, s_hi: float, n_s: int = 200) -> float:
    """2 pi int |phi(s)|^2 s sinh(pi s) ds over [s_lo, s_hi]."""
    x, w = _gauss_panel(s_lo, s_hi, n_s)
    vals = np.abs(np.asarray(phi(x), dtype=np.complex128)) ** 2
    return float(2.0 * np.pi * np.sum(w * vals * x * np.sinh(np.pi * x)))


def dirichlet_energy_via_strip(phi, s_lo: float, s_hi: float,
                               u_half_width: float = 60.0, n_u_per_unit: int = 8,
                               n_v: int = 48, n_s: int = 96) -> float:
    """Dirichlet energy of f(z) = int phi(s) ((1-z)/(1+z))^{is} ds over the disc.

    In the strip coordinate w = log((1-z)/(1+z)) the integrand collapses to
    |F(w)|^2 with F(w) = int i s phi(s) e^{i s w} ds, because the conformal
    factors cancel against f'(z) dz/dw.  The double integral is taken with
    Gauss nodes: u on [-U, U], v across the strip.  Summing the same energy
    from Taylor coefficients converges only logarithmically, which is what
    this routine exists to avoid.
    """
    su, wu = _gauss_panel(-u_half_width, u_half_width, int(2 * u_half_width * n_u_per_unit))
    sv, wv = _gauss_panel(-0.5 * np.pi, 0.5 * np.pi, n_v)
    ss, ws = _gauss_panel(s_lo, s_hi, n_s)
    amp = 1j * ss * np.asarray(phi(ss), dtype=np.complex128) * ws
    # F(u + iv) = sum_s amp_s e^{i s u} e^{-s v}
    eu = np.exp(1j * np.outer(ss, su))       # (n_s, n_u)
    ev = np.exp(-np.outer(ss, sv))           # (n_s, n_v)
    total = 0.0
    for j in range(len(sv)):
        f = (amp * ev[:, j]) @ eu            # (n_u,)
        total += wv[j] * float(np.sum(wu * np.abs(f) ** 2))
    return total


def taylor_energy_partial(phi, s_lo: float, s_hi: float, k_max: int, n_s: int = 96) -> float:
    """pi sum_{k<=K} k |f_k|^2 with f_k = int phi(s) h_k(s) ds; grows like log K."""
    ss, ws = _gauss_panel(s_lo, s_hi, n_s)
    amp = np.asarray(phi(ss), dtype=np.complex128) * ws
    h_prev = np.ones_like(ss, dtype=np.complex128)
    h_cur = -2j * ss
    total = 0.0
    for k in range(1, k_max + 1):
        fk = np.sum(amp * h_cur)
        total += np.pi * k * abs(fk) ** 2
        h_next = ((k - 1.0) * h_prev - 2j * ss * h_cur) / (k + 1.0)
        h_prev, h_cur = h_cur, h_next
    return float(total)
