"""Model right-hand sides, RK4 stepping, exact reference solutions.

Models on the circle, all with the convention w_t = rhs(w):

  CLM          w_t = 2 w Hw
  DeGregorio   w_t = (Hw) w - u w_theta,  u = biot_savart(w, gauge)
  DeGregorioMean    adds + c * Hw
  Transport(b) w_t = b_theta w - b w_theta   (pushforward along the flow of b)

The CLM factor 2 is the time normalization under which f = w + iHw solves
df/dt = -i f^2, so the closed form in clm_exact is the exact solution and
w0 = cos blows up at t = 1 (see clm_blowup_time).

Products are formed pointwise on a padded grid; with dealiasing on the grid
holds at least 3N+1 points so the retained band is alias-free, with it off
the grid is the minimal 2N+2 and aliasing folds back in (the classical
collocation behavior).  Either way the k = 0 product mode is exact, so the
mean is conserved to rounding for the transport models.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import invariants as inv
from .spectral import (
    GridSamples,
    MeanZero,
    RealCircleField,
    _padded,
    biot_savart,
    circle_field,
    derivative,
    evaluate,
    from_samples,
    hilbert,
    m_multiplier_norm,
    mean_value,
    sobolev_norm,
    to_samples,
    y0_norm,
)


class BlowUpError(RuntimeError):
    """Sup norm crossed the ceiling (or went non-finite) during a run."""

    def __init__(self, msg, t, records):
        super().__init__(msg)
        self.t = t
        self.records = records


class StabilityError(RuntimeError):
    """Step size violates the transport stability guard."""

    def __init__(self, msg, t, records):
        super().__init__(msg)
        self.t = t
        self.records = records


class NotNearEquilibriumError(ValueError):
    """Input lacks the two simple zeros the normalization needs."""


# ---------------------------------------------------------------------------
# model specs


@dataclass(frozen=True)
class CLM:
    pass


@dataclass(frozen=True)
class DeGregorio:
    gauge: object = MeanZero()


@dataclass(frozen=True)
class DeGregorioMean:
    c: float
    gauge: object = MeanZero()


@dataclass(frozen=True, eq=False)
class Transport:
    b: RealCircleField


def _product_grid(n: int, dealias: bool) -> int:
    if dealias:
        m = 1 << max(3, (3 * n).bit_length())
        while m < 3 * n + 1:
            m *= 2
        return m
    return max(2 * n + 2, 8)


@dataclass(frozen=True)
class RhsDiagnostics:
    sup_w: float
    sup_velocity: float | None  # transport speed, None for CLM


def _require_zero_mean(w):
    if abs(mean_value(w)) > 1e-10:
        raise ValueError(f"model needs zero-mean data, mean = {mean_value(w):.3e}")


def rhs_with_diagnostics(model, w: RealCircleField, dealias: bool = True):
    n = w.max_mode
    m = _product_grid(n, dealias)
    if isinstance(model, CLM):
        ws = to_samples(w, m).values
        hs = to_samples(hilbert(w), m).values
        out = from_samples(GridSamples(2.0 * ws * hs), n)
        return out, RhsDiagnostics(float(np.abs(ws).max()), None)
    if isinstance(model, (DeGregorio, DeGregorioMean)):
        _require_zero_mean(w)
        u = biot_savart(w, model.gauge)
        ws = to_samples(w, m).values
        hs = to_samples(hilbert(w), m).values
        us = to_samples(u, m).values
        dws = to_samples(derivative(w), m).values
        out = from_samples(GridSamples(hs * ws - us * dws), n)
        if isinstance(model, DeGregorioMean):
            out = out + model.c * hilbert(w)
        return out, RhsDiagnostics(float(np.abs(ws).max()), float(np.abs(us).max()))
    if isinstance(model, Transport):
        nb = model.b.max_mode
        m = _product_grid(max(n, nb), dealias)
        ws = to_samples(w, m).values
        dws = to_samples(derivative(w), m).values
        bs = to_samples(model.b, m).values
        dbs = to_samples(derivative(model.b), m).values
        out = from_samples(GridSamples(dbs * ws - bs * dws), n)
        return out, RhsDiagnostics(float(np.abs(ws).max()), float(np.abs(bs).max()))
    raise TypeError(f"unknown model {model!r}")


def rhs(model, w: RealCircleField, dealias: bool = True) -> RealCircleField:
    out, _ = rhs_with_diagnostics(model, w, dealias)
    return out


def step_rk4(model, w: RealCircleField, dt: float, dealias: bool = True,
             with_diagnostics: bool = False):
    """One classical RK4 step.  dt = 0 returns the state unchanged."""
    k1, diag = rhs_with_diagnostics(model, w, dealias)
    k2 = rhs(model, w + (0.5 * dt) * k1, dealias)
    k3 = rhs(model, w + (0.5 * dt) * k2, dealias)
    k4 = rhs(model, w + dt * k3, dealias)
    out = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if with_diagnostics:
        return out, diag
    return out


# ---------------------------------------------------------------------------
# simulation loop


@dataclass(frozen=True)
class SimConfig:
    model: object
    t_final: float
    dt: float
    record_every: int = 50
    dealias: bool = True
    max_mode: int | None = None      # resample the initial data when set
    gamma: float = 1.75
    sobolev_orders: tuple = (0.5, 1.0, 1.5, 2.0)
    sup_ceiling: float = 1e8
    guard: bool = True
    track_invariants: bool = False
    record_weighted: bool = True     # the two weighted norms cost real time


@dataclass(frozen=True)
class TimeRecord:
    t: float
    sobolev: tuple
    y0: float
    m_mult: float
    sup: float
    bkm: float
    mean: float
    pv: float
    zeros: tuple | None = None


@dataclass(frozen=True)
class SimResult:
    records: list
    final: RealCircleField
    steps: int


def _resample(w: RealCircleField, n: int) -> RealCircleField:
    if n == w.max_mode:
        return w
    if n > w.max_mode:
        return RealCircleField(_padded(w, n))
    k = w.max_mode - n
    return RealCircleField(w.coeffs[k:-k])


def _sup_norm(w: RealCircleField) -> float:
    return float(np.abs(to_samples(w, _product_grid(w.max_mode, False)).values).max())


def _make_record(w, t, bkm, sup, cfg) -> TimeRecord:
    sob = tuple(sobolev_norm(w, s) for s in cfg.sobolev_orders)
    # the plain weighted norm is +inf whenever w(0) or w'(0) is nonzero,
    # which is the generic moving state; recording the flag is the contract
    ynorm = y0_norm(w, cfg.gamma) if cfg.record_weighted else math.nan
    mm = m_multiplier_norm(w)
    pv = math.nan
    zeros = None
    if cfg.track_invariants:
        try:
            oi = inv.orbit_invariants(w)
            pv = oi.pv_integral
            zeros = oi.zeros
        except (inv.DegenerateZeroError, RuntimeError):
            pass
    return TimeRecord(t, sob, ynorm, mm, sup, bkm, mean_value(w), pv, zeros)


def simulate(w0: RealCircleField, cfg: SimConfig) -> SimResult:
    """March the model, recording diagnostics; raises on blow-up or guard trip.

    The BKM accumulator integrates sup|w| by the trapezoid rule at step
    resolution.  Partial records ride along on the raised error.
    """
    w = _resample(w0, cfg.max_mode) if cfg.max_mode is not None else w0
    n = w.max_mode
    dt = float(cfg.dt)
    if dt <= 0 or cfg.t_final < 0:
        raise ValueError("need dt > 0 and t_final >= 0")
    steps = max(1, math.ceil(cfg.t_final / dt - 1e-12)) if cfg.t_final > 0 else 0

    sup_prev = _sup_norm(w)
    bkm = 0.0
    records = [_make_record(w, 0.0, bkm, sup_prev, cfg)]
    t = 0.0
    for i in range(steps):
        step_dt = min(dt, cfg.t_final - t)
        w, diag = step_rk4(cfg.model, w, step_dt, cfg.dealias, with_diagnostics=True)
        t += step_dt
        if cfg.guard and diag.sup_velocity is not None:
            dt_max = 0.5 / (max(1.0, diag.sup_velocity) * n)
            if step_dt > dt_max:
                raise StabilityError(
                    f"dt = {step_dt:.3e} above guard {dt_max:.3e} at t = {t:.4f}",
                    t, records)
        sup_now = _sup_norm(w)
        bkm += 0.5 * step_dt * (sup_prev + sup_now)
        sup_prev = sup_now
        if not np.isfinite(sup_now) or sup_now > cfg.sup_ceiling:
            if np.isfinite(sup_now):
                records.append(_make_record(w, t, bkm, sup_now, cfg))
            raise BlowUpError(f"sup = {sup_now:.3e} at t = {t:.6f}", t, records)
        if (i + 1) % cfg.record_every == 0 or i == steps - 1:
            records.append(_make_record(w, t, bkm, sup_now, cfg))
    return SimResult(records, w, steps)


# ---------------------------------------------------------------------------
# exact solutions


def clm_exact(w0: RealCircleField, t: float, n_out: int | None = None) -> RealCircleField:
    """Closed-form CLM solution through the holomorphic boundary trace.

    With f = w + iHw, the evolution is f(t) = f0 / (1 + i t f0); the real
    part at time t is the solution.  Valid strictly before blow-up.
    """
    n = n_out if n_out is not None else max(8 * w0.max_mode, 64)
    m = 2 * n + 2
    ws = to_samples(w0, m).values
    hs = to_samples(hilbert(w0), m).values
    f0 = ws + 1j * hs
    den = 1.0 + 1j * t * f0
    if _denominator_min(w0, t, den) < 1e-7:
        raise ValueError(f"t = {t} is at or beyond the blow-up time")
    f = f0 / den
    out = from_samples(GridSamples(f.real), n)
    _warn_if_under_resolved(out, "clm_exact")
    return out


def _denominator_min(w0, t, den_on_grid):
    """Minimum of |1 + i t f0| over the circle, refined off the grid.

    The grid minimum misses a root landing between nodes, so the argmin is
    polished by a bounded scalar minimization of |den|^2.
    """
    m = len(den_on_grid)
    j = int(np.argmin(np.abs(den_on_grid)))
    th_j = -np.pi + 2.0 * np.pi * j / m
    h = 2.0 * np.pi / m
    hw = hilbert(w0)

    def den_abs2(th):
        v, _ = evaluate(w0, th)
        u, _ = evaluate(hw, th)
        d = 1.0 + 1j * t * (v + 1j * u)
        return abs(d) ** 2

    from scipy.optimize import minimize_scalar

    res = minimize_scalar(den_abs2, bounds=(th_j - h, th_j + h), method="bounded",
                          options={"xatol": 1e-14})
    return math.sqrt(max(min(res.fun, float(np.abs(den_on_grid).min()) ** 2), 0.0))


def clm_blowup_time(w0: RealCircleField) -> float:
    """First blow-up time: min over zeros z of w0 with Hw0(z) > 0 of 1/Hw0(z)."""
    zeros = inv.find_zeros(w0)
    h = hilbert(w0)
    best = math.inf
    for z in zeros:
        val, _ = evaluate(h, z.theta)
        if val > 1e-14:
            best = min(best, 1.0 / val)
    return best


def _mobius_pullback(thetas, t):
    """Backward flow map of sin(theta) on the circle and its angular derivative."""
    tau = math.tanh(0.5 * t)
    z = np.exp(1j * thetas)
    zin = (z + tau) / (1.0 + tau * z)
    y = np.angle(zin)
    jac = (1.0 - tau * tau) / np.abs(1.0 - tau * zin) ** 2
    return y, jac


def exact_pushforward(xi0: RealCircleField, t: float, n_out: int | None = None) -> RealCircleField:
    """Pushforward of xi0 by the time-t flow of b = sin(theta).

    Solves xi_t = b_theta xi - b xi_theta exactly: xi(t) = (phi_t)_* xi0 with
    phi_t the Mobius circle map, weighted by the angular derivative.
    """
    n = n_out if n_out is not None else max(4 * xi0.max_mode, 32)
    m = 2 * n + 2
    th = -np.pi + 2.0 * np.pi * np.arange(m) / m
    y, jac = _mobius_pullback(th, t)
    vals, _ = evaluate(xi0, y)
    out = from_samples(GridSamples(jac * vals), n)
    _warn_if_under_resolved(out, "exact_pushforward")
    return out


def _warn_if_under_resolved(w: RealCircleField, who: str) -> None:
    n = w.max_mode
    if n < 8:
        return
    e = np.abs(w.coeffs) ** 2
    total = e.sum()
    k = max(1, n // 10)
    tail = e[:k].sum() + e[-k:].sum()
    if total > 0 and tail > 1e-16 * total:
        warnings.warn(f"{who}: output band looks saturated (tail fraction {tail/total:.1e})",
                      RuntimeWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# near-equilibrium helpers


@dataclass(frozen=True)
class NormalizationRecord:
    amplitude: float
    shift: float
    time_scale: float


def normalize_initial_data(w0: RealCircleField):
    """Move the negative-slope zero to 0 and rescale its slope to -1.

    Returns (normalized field, record).  One unit of normalized time equals
    1/amplitude units of original time; the record keeps that factor.
    """
    zeros = inv.find_zeros(w0)
    if len(zeros) != 2:
        raise NotNearEquilibriumError(f"need exactly 2 zeros, found {len(zeros)}")
    neg = [z for z in zeros if z.slope < 0]
    if len(neg) != 1:
        raise NotNearEquilibriumError("need exactly one negative-slope zero")
    x2 = neg[0].theta
    amp = -neg[0].slope
    n = w0.max_mode
    ks = np.arange(-n, n + 1)
    shifted = w0.coeffs * np.exp(1j * ks * x2)
    return RealCircleField(shifted / amp), NormalizationRecord(amp, x2, amp)


def predict_amplitudes(w0: RealCircleField):
    """Final slopes the equilibrium selection predicts: (-w'(x2), w'(x1))."""
    zeros = inv.find_zeros(w0)
    if len(zeros) != 2:
        raise NotNearEquilibriumError(f"need exactly 2 zeros, found {len(zeros)}")
    neg = [z for z in zeros if z.slope < 0]
    pos = [z for z in zeros if z.slope > 0]
    if len(neg) != 1 or len(pos) != 1:
        raise NotNearEquilibriumError("need one zero of each slope sign")
    return -neg[0].slope, pos[0].slope


@dataclass(frozen=True)
class EquilibriumFit:
    amplitude: float
    shift: float
    residual: float


def fit_equilibrium(w: RealCircleField, s: float = 1.0) -> EquilibriumFit:
    """Best A sin(t - t0) from the first harmonic, residual in the order-s norm."""
    c1 = w.coeff(1)
    amp = 2.0 * abs(c1)
    if amp == 0.0:
        return EquilibriumFit(0.0, 0.0, sobolev_norm(w, s))
    shift = -np.angle(2j * c1)
    eq = circle_field(sin={1: amp * math.cos(shift)}, cos={1: -amp * math.sin(shift)})
    return EquilibriumFit(amp, shift, sobolev_norm(w - eq, s))
