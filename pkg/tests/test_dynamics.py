import math

import numpy as np
import pytest

from dglab.dynamics import (
    CLM,
    BlowUpError,
    DeGregorio,
    DeGregorioMean,
    NotNearEquilibriumError,
    SimConfig,
    StabilityError,
    Transport,
    clm_blowup_time,
    clm_exact,
    exact_pushforward,
    fit_equilibrium,
    normalize_initial_data,
    predict_amplitudes,
    rhs,
    simulate,
    step_rk4,
)
from dglab.dynamics import _resample
from dglab.spectral import (
    MeanZero,
    PointZero,
    circle_field,
    evaluate,
    hilbert,
    mean_value,
    sobolev_norm,
)
from conftest import random_field


class TestRhs:
    def test_clm_on_cos(self):
        # 2 w Hw at w = cos is 2 cos sin = sin 2t; the state band must be
        # wide enough to hold the product mode
        r = rhs(CLM(), _resample(circle_field(cos={1: 1.0}), 8))
        want = _resample(circle_field(sin={2: 1.0}), 8)
        assert np.abs((r - want).coeffs).max() < 1e-14

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_dg_equilibria(self, m):
        # every A sin(m t - p) is a steady state
        w = circle_field(sin={m: 0.8}, cos={m: -0.6})
        assert np.abs(rhs(DeGregorio(), w).coeffs).max() < 1e-14

    def test_dg_gauge_changes_frame_only(self):
        # gauges differ by a constant velocity, so rhs differs by c * w_theta
        w = circle_field(sin={1: -1.0}, cos={2: 0.1})
        r0 = rhs(DeGregorio(MeanZero()), w)
        r1 = rhs(DeGregorio(PointZero(0.0)), w)
        diff = r0 - r1
        # difference must be a multiple of w_theta
        from dglab.spectral import derivative
        d = derivative(w)
        ratio = diff.coeff(1) / d.coeff(1)
        assert np.abs(diff.coeffs - ratio.real * d.coeffs).max() < 1e-13

    def test_dg_requires_zero_mean(self):
        with pytest.raises(ValueError):
            rhs(DeGregorio(), circle_field(sin={1: 1.0}, mean=0.3))

    def test_dg_mean_traveling_wave(self):
        # on the equilibrium family the extra term is the whole rhs: c Hw
        a, p, c = 1.3, 0.4, 0.25
        w = circle_field(sin={1: a * math.cos(p)}, cos={1: -a * math.sin(p)})
        r = rhs(DeGregorioMean(c=c), w)
        want = circle_field(cos={1: -c * a * math.cos(p)}, sin={1: -c * a * math.sin(p)})
        assert np.abs((r - want).coeffs).max() < 1e-14

    def test_transport_self_advection_is_steady(self):
        w = circle_field(sin={1: 1.0})
        assert np.abs(rhs(Transport(w), w).coeffs).max() < 1e-15

    def test_step_dt_zero_identity(self):
        w = circle_field(sin={1: -1.0}, cos={3: 0.2})
        out = step_rk4(DeGregorio(), w, 0.0)
        assert np.abs((out - w).coeffs).max() == 0.0

    def test_mean_conserved_under_products(self, rng):
        # the k = 0 product mode is exact on both grids
        w = random_field(rng, 32, scale=0.1, zero_mean=True)
        for dealias in (True, False):
            cur = w
            for _ in range(50):
                cur = step_rk4(DeGregorio(), cur, 1e-3, dealias=dealias)
            assert abs(mean_value(cur)) < 1e-13

    def test_dealias_setting_changes_solution(self, rng):
        # both settings run; they need not agree (aliased grid folds back)
        w = random_field(rng, 16, scale=0.5, zero_mean=True)
        a = step_rk4(DeGregorio(), w, 1e-2, dealias=True)
        b = step_rk4(DeGregorio(), w, 1e-2, dealias=False)
        assert np.all(np.isfinite(a.coeffs.view(np.float64)))
        assert np.all(np.isfinite(b.coeffs.view(np.float64)))


class TestExactSolutions:
    def test_clm_exact_values(self):
        w0 = circle_field(cos={1: 1.0})
        ex = clm_exact(w0, 0.5, n_out=128)
        v0, _ = evaluate(ex, 0.0)
        v1, _ = evaluate(ex, 1.0)
        # w(0, t) = 1/(1+t^2); the second value comes from the same formula
        assert abs(v0 - 0.8) < 1e-12
        assert abs(v1 - 1.3225555242730365) < 1e-12

    def test_clm_exact_t0_identity(self):
        w0 = circle_field(cos={1: 1.0}, sin={2: -0.3})
        ex = clm_exact(w0, 0.0, n_out=32)
        assert np.abs(_resample(ex, w0.max_mode).coeffs - w0.coeffs).max() < 1e-13

    def test_clm_exact_rejects_blowup_time(self):
        with pytest.raises(ValueError):
            clm_exact(circle_field(cos={1: 1.0}), 1.0)

    def test_clm_rk4_matches_exact_fourth_order(self):
        w0 = _resample(circle_field(cos={1: 1.0}), 64)
        ex = clm_exact(w0, 0.5, n_out=256)
        th = np.linspace(-np.pi, np.pi, 257)
        ref, _ = evaluate(ex, th)
        errs = []
        for dt in (0.02, 0.01):
            w = w0
            for _ in range(round(0.5 / dt)):
                w = step_rk4(CLM(), w, dt)
            got, _ = evaluate(w, th)
            errs.append(np.abs(got - ref).max())
        assert errs[1] < 1e-6
        assert math.log2(errs[0] / errs[1]) > 3.8

    def test_blowup_time_cos(self):
        assert abs(clm_blowup_time(circle_field(cos={1: 1.0})) - 1.0) < 1e-9

    def test_blowup_time_none(self):
        # no zero crossing of w0 means the denominator never vanishes
        assert clm_blowup_time(circle_field(sin={1: 1.0}, mean=2.0)) == math.inf

    def test_blowup_time_negative_sine(self):
        # zeros at 0 and pi; H(-sin) = cos is positive only at 0
        assert abs(clm_blowup_time(circle_field(sin={1: -1.0})) - 1.0) < 1e-9

    def test_pushforward_identity_and_invariant(self):
        s = circle_field(sin={1: 1.0})
        out = exact_pushforward(s, 1.3, n_out=64)
        assert np.abs((_resample(out, 1) - s).coeffs).max() < 1e-14
        out0 = exact_pushforward(circle_field(cos={2: 0.7}), 0.0, n_out=32)
        assert np.abs(_resample(out0, 2).coeffs - circle_field(cos={2: 0.7}).coeffs).max() < 1e-13

    def test_pushforward_mobius_value(self):
        # frozen from an independent complex-arithmetic oracle, itself checked
        # against integrating the characteristics with an ODE solver
        pf = exact_pushforward(circle_field(cos={1: 1.0}), 0.7, n_out=64)
        v, _ = evaluate(pf, np.pi / 2)
        assert abs(v - 0.7585837018395336) < 1e-11

    def test_transport_rk4_matches_pushforward(self):
        xi0 = _resample(circle_field(sin={2: 1.0}), 128)
        w = xi0
        for _ in range(2000):
            w = step_rk4(Transport(circle_field(sin={1: 1.0})), w, 1e-3)
        ref = exact_pushforward(circle_field(sin={2: 1.0}), 2.0, n_out=256)
        th = np.linspace(-np.pi, np.pi, 301)
        va, _ = evaluate(w, th)
        vb, _ = evaluate(ref, th)
        assert np.abs(va - vb).max() < 1e-8


class TestSimulate:
    def test_record_cadence_and_final_time(self):
        w0 = _resample(circle_field(sin={1: -1.0}), 32)
        cfg = SimConfig(model=DeGregorio(), t_final=0.1, dt=1e-3, record_every=20,
                        record_weighted=False)
        res = simulate(w0, cfg)
        assert res.records[0].t == 0.0
        assert abs(res.records[-1].t - 0.1) < 1e-12
        assert res.steps == 100

    def test_blowup_raises_with_partial_records(self):
        w0 = _resample(circle_field(cos={1: 1.0}), 128)
        cfg = SimConfig(model=CLM(), t_final=1.5, dt=2e-4, record_every=500,
                        sup_ceiling=1e6, record_weighted=False)
        with pytest.raises(BlowUpError) as ei:
            simulate(w0, cfg)
        assert 1.0 < ei.value.t < 1.2
        assert len(ei.value.records) > 3
        sups = [r.sup for r in ei.value.records]
        assert sups[-1] > 1e6
        assert sups[-1] > sups[0]

    def test_guard_trips_on_big_step(self):
        w0 = _resample(circle_field(sin={1: -1.0}), 64)
        cfg = SimConfig(model=DeGregorio(), t_final=1.0, dt=0.05, record_every=1)
        with pytest.raises(StabilityError):
            simulate(w0, cfg)

    def test_bkm_matches_record_trapezoid(self):
        w0 = _resample(circle_field(cos={1: 1.0}), 64)
        cfg = SimConfig(model=CLM(), t_final=0.5, dt=1e-3, record_every=25,
                        record_weighted=False)
        res = simulate(w0, cfg)
        ts = np.array([r.t for r in res.records])
        sups = np.array([r.sup for r in res.records])
        coarse = np.trapezoid(sups, ts)
        assert abs(res.records[-1].bkm - coarse) < 0.02 * coarse

    def test_mean_column_flat(self, rng):
        w0 = random_field(rng, 32, scale=0.2, zero_mean=True)
        cfg = SimConfig(model=DeGregorio(), t_final=0.2, dt=1e-3, record_every=50,
                        record_weighted=False)
        res = simulate(w0, cfg)
        assert max(abs(r.mean) for r in res.records) < 1e-13


class TestEquilibriumHelpers:
    def test_normalize_scales_and_shifts(self):
        w0 = circle_field(sin={1: -2.0 * math.cos(0.3)}, cos={1: 2.0 * math.sin(0.3)})
        # that is -2 sin(t - 0.3): zeros at 0.3 (slope -2) and 0.3 + pi (slope 2)
        norm, rec = normalize_initial_data(w0)
        assert abs(rec.amplitude - 2.0) < 1e-10
        assert abs(rec.shift - 0.3) < 1e-10
        assert abs(rec.time_scale - 2.0) < 1e-10
        want = circle_field(sin={1: -1.0})
        assert np.abs((norm - want).coeffs).max() < 1e-10

    def test_normalize_needs_two_zeros(self):
        with pytest.raises(NotNearEquilibriumError):
            normalize_initial_data(circle_field(sin={2: 1.0}))  # four zeros

    def test_predict_amplitudes(self):
        w0 = circle_field(sin={1: -2.0})
        ap, am = predict_amplitudes(w0)
        assert abs(ap - 2.0) < 1e-10 and abs(am - 2.0) < 1e-10

    def test_fit_equilibrium_exact(self):
        w = circle_field(sin={1: 1.4 * math.cos(0.5)}, cos={1: -1.4 * math.sin(0.5)})
        fit = fit_equilibrium(w)
        assert abs(fit.amplitude - 1.4) < 1e-12
        assert abs(fit.shift - 0.5) < 1e-12
        assert fit.residual < 1e-12

    def test_fit_equilibrium_residual_value(self):
        # residual of 0.01 sin 5t in the order-1 norm is 0.01 * 5 * sqrt(1/2)
        w = circle_field(sin={1: 1.0, 5: 0.01})
        fit = fit_equilibrium(w, s=1.0)
        assert abs(fit.amplitude - 1.0) < 1e-9
        assert abs(fit.residual - 0.05 * math.sqrt(0.5)) < 1e-9

    def test_fit_equilibrium_zero_field(self):
        fit = fit_equilibrium(circle_field(sin={3: 0.2}))
        assert fit.amplitude == 0.0
        assert abs(fit.residual - sobolev_norm(circle_field(sin={3: 0.2}), 1.0)) < 1e-14
