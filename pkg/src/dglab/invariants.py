"""Transported quantities of the circle models: zeros, slopes, the p.v. integral.

For a field with simple zeros z_j the conserved data is the zero count, the
multiset of slopes w'(z_j), and b = p.v. int dt / w(t).  The p.v. integral is
computed by subtracting the local cot singularities, which leaves a periodic
analytic integrand that a uniform midpoint rule resolves spectrally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import RealCircleField, derivative, evaluate, evaluate_on_uniform, to_samples

DEGENERACY_TOL = 1e-8


class DegenerateZeroError(RuntimeError):
    """A zero with |w'| below tolerance (or a tangential touch)."""


class TopologyChangeError(RuntimeError):
    """Zero count changed or a zero jumped too far between snapshots."""


@dataclass(frozen=True)
class ZeroInfo:
    theta: float
    slope: float


@dataclass(frozen=True)
class OrbitInvariants:
    zeros: tuple[ZeroInfo, ...]
    pv_integral: float

    @property
    def pair_count(self) -> int:
        return len(self.zeros) // 2


def _wrap(t):
    return math.remainder(t, 2.0 * math.pi)


def find_zeros(field: RealCircleField, scan_factor: int = 4) -> list[ZeroInfo]:
    """Simple zeros, sorted by angle.  Raises on a degenerate zero.

    Sign changes on a scan grid locate the simple zeros; tangential zeros
    produce no sign change, so extrema of the field are checked against the
    value tolerance as well.
    """
    n = field.max_mode
    scale = max(1.0, float(np.abs(field.coeffs).sum()))
    m = max(128, scan_factor * max(n, 1))
    s = to_samples(field, m)
    v = s.values
    th = s.thetas
    h = 2.0 * np.pi / m

    zeros = []
    vn = np.roll(v, -1)
    for i in np.nonzero((v * vn < 0) | (v == 0))[0]:
        lo, hi = th[i], th[i] + h
        flo = v[i]
        if flo == 0.0:
            root = lo
        else:
            # a few bisections to shrink the bracket, then Newton
            fhi = vn[i]
            for _ in range(10):
                mid = 0.5 * (lo + hi)
                fm, _ = evaluate(field, mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
            for _ in range(40):
                fv, fd = evaluate(field, root)
                if fd == 0.0 or abs(fv) < 1e-14 * scale:
                    break
                step = fv / fd
                root -= step
                if abs(step) < 1e-15:
                    break
        _, slope = evaluate(field, root)
        if abs(slope) < DEGENERACY_TOL:
            raise DegenerateZeroError(f"zero at {root:.6f} with slope {slope:.3e}")
        zeros.append(ZeroInfo(_wrap(root), slope))

    # tangential zeros: refine each extremum and test its value, since a
    # touch point produces no sign change on any grid
    dv = to_samples(derivative(field), m).values
    vscale = max(1.0, float(np.abs(v).max()))
    dvn = np.roll(dv, -1)
    for i in np.nonzero(dv * dvn < 0)[0]:
        lo, hi = th[i], th[i] + h
        flo = dv[i]
        for _ in range(45):
            mid = 0.5 * (lo + hi)
            _, fm = evaluate(field, mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        ext = 0.5 * (lo + hi)
        val, _ = evaluate(field, ext)
        if abs(val) < DEGENERACY_TOL * vscale:
            near = min((abs(_wrap(ext - z.theta)) for z in zeros), default=math.inf)
            if near > 2 * h:
                raise DegenerateZeroError(f"tangential zero near {ext:.6f}")

    zeros.sort(key=lambda z: z.theta)
    # merge duplicates from a zero landing exactly on a node
    out = []
    for z in zeros:
        if out and abs(_wrap(z.theta - out[-1].theta)) < 0.5 * h:
            continue
        out.append(z)
    if out and abs(_wrap(out[0].theta - out[-1].theta)) < 0.5 * h and len(out) > 1:
        out.pop()
    return out


def _pv_on_grid(field, zeros, m):
    """Midpoint rule after cot subtraction, grid shifted away from the zeros."""
    h = 2.0 * np.pi / m
    zs = np.array([z.theta for z in zeros])
    slopes = np.array([z.slope for z in zeros])
    best_s, best_d = 0.0, -1.0
    for s in np.linspace(0.0, 1.0, 17, endpoint=False):
        t0 = -np.pi + (0.5 + s) * h
        if len(zs) == 0:
            best_s = s
            break
        # distance of each zero to its nearest node, in units of h
        frac = np.abs(((zs - t0) / h) - np.round((zs - t0) / h))
        d = frac.min()
        if d > best_d:
            best_d, best_s = d, s
    t0 = -np.pi + (0.5 + best_s) * h
    vals = evaluate_on_uniform(field, t0, h, m)
    th = t0 + h * np.arange(m)
    g = 1.0 / vals
    for z, a in zip(zs, slopes):
        g -= (0.5 / a) / np.tan(0.5 * (th - z))
    return float(g.sum() * h)


def pv_integral(field: RealCircleField, zeros=None, rel_tol: float = 1e-8) -> float:
    """b = p.v. int dt/w, refined until two grids agree."""
    if zeros is None:
        zeros = find_zeros(field)
    m = max(256, 4 * field.max_mode)
    prev = _pv_on_grid(field, zeros, m)
    while m <= (1 << 17):
        m *= 2
        cur = _pv_on_grid(field, zeros, m)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise RuntimeError("p.v. quadrature did not stabilize")


def orbit_invariants(field: RealCircleField, rel_tol: float = 1e-8) -> OrbitInvariants:
    zeros = find_zeros(field)
    b = pv_integral(field, zeros, rel_tol)
    return OrbitInvariants(tuple(zeros), b)


MAX_ZERO_JUMP = math.pi / 4


def match_zeros(prev: OrbitInvariants, cur: OrbitInvariants):
    """Index of the zero in cur continuing each zero of prev.

    Raises TopologyChangeError when the count changes or a zero moved more
    than pi/4 between snapshots.
    """
    if len(prev.zeros) != len(cur.zeros):
        raise TopologyChangeError(
            f"zero count {len(prev.zeros)} -> {len(cur.zeros)}")
    perm = []
    for z in prev.zeros:
        dists = [abs(_wrap(z.theta - w.theta)) for w in cur.zeros]
        j = int(np.argmin(dists))
        if dists[j] > MAX_ZERO_JUMP:
            raise TopologyChangeError(f"zero at {z.theta:.4f} jumped {dists[j]:.4f}")
        perm.append(j)
    if len(set(perm)) != len(perm):
        raise TopologyChangeError("two zeros collapsed onto one continuation")
    return perm


@dataclass(frozen=True)
class DriftReport:
    max_slope_drift_rel: float
    max_pv_drift_abs: float
    topology_changed: bool
    first_topology_index: int | None = None


def drift_report(history: list[OrbitInvariants]) -> DriftReport:
    """Drift of the transported data along a snapshot chain.

    Zeros are identified between consecutive snapshots (they move, their
    slopes should not), then slopes are compared with the chained original.
    """
    if not history:
        raise ValueError("empty history")
    base = history[0]
    ident = list(range(len(base.zeros)))
    chain = ident[:]
    slope_drift = 0.0
    pv_drift = 0.0
    for idx in range(1, len(history)):
        try:
            perm = match_zeros(history[idx - 1], history[idx])
        except TopologyChangeError:
            return DriftReport(slope_drift, pv_drift, True, idx)
        chain = [perm[j] for j in chain]
        for j0, j1 in enumerate(chain):
            a0 = base.zeros[j0].slope
            a1 = history[idx].zeros[j1].slope
            slope_drift = max(slope_drift, abs(a1 - a0) / max(abs(a0), 1e-300))
        pv_drift = max(pv_drift, abs(history[idx].pv_integral - base.pv_integral))
    return DriftReport(slope_drift, pv_drift, False, None)
