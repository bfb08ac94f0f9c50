import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dglab.spectral import (
    AliasingError,
    GridSamples,
    MeanZero,
    MMultiplier,
    PointZero,
    QuotientY,
    RealCircleField,
    Sobolev,
    Y0,
    biot_savart,
    circle_field,
    derivative,
    evaluate,
    evaluate_on_uniform,
    field_from_coeffs,
    from_samples,
    hilbert,
    l2_norm,
    mean_value,
    norm,
    project_p0,
    quotient_y0_norm,
    sobolev_norm,
    to_samples,
    y0_norm,
    zero_field,
)
from conftest import random_field


class TestTransforms:
    def test_round_trip_random(self, rng):
        f = random_field(rng, 16)
        g = from_samples(to_samples(f, 64), 16)
        assert np.abs(g.coeffs - f.coeffs).max() < 1e-12

    def test_round_trip_minimal_grid(self, rng):
        # M = 2N+1 is the smallest grid that can hold the band
        f = random_field(rng, 7)
        g = from_samples(to_samples(f, 15), 7)
        assert np.abs(g.coeffs - f.coeffs).max() < 1e-12

    def test_aliasing_rejected(self):
        f = circle_field(sin={3: 1.0})
        with pytest.raises(AliasingError):
            to_samples(f, 4)
        with pytest.raises(AliasingError):
            from_samples(GridSamples(np.zeros(4)), 3)

    def test_samples_match_evaluate(self, rng):
        f = random_field(rng, 9)
        s = to_samples(f, 32)
        v, _ = evaluate(f, s.thetas)
        assert np.abs(s.values - v).max() < 1e-12

    def test_uniform_evaluation_matches_direct(self, rng):
        f = random_field(rng, 23)
        v, d = evaluate(f, -0.4 + 0.013 * np.arange(50))
        vu, du = evaluate_on_uniform(f, -0.4, 0.013, 50, want_derivative=True)
        assert np.abs(v - vu).max() < 1e-11
        assert np.abs(d - du).max() < 1e-10

    @given(n=st.integers(1, 12), seed=st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, n, seed):
        f = random_field(np.random.default_rng(seed), n)
        g = from_samples(to_samples(f, 2 * n + 1), n)
        assert np.abs(g.coeffs - f.coeffs).max() < 1e-11

    def test_parseval(self, rng):
        f = random_field(rng, 11)
        s = to_samples(f, 64)
        grid = math.sqrt(np.sum(s.values**2) * 2 * np.pi / 64)
        assert abs(grid - l2_norm(f)) < 1e-12

    def test_hermitian_enforced(self):
        c = np.zeros(5, complex)
        c[4] = 1.0  # mode +2 without its mirror
        with pytest.raises(ValueError):
            RealCircleField(c)


class TestOperators:
    def test_hilbert_on_harmonics(self):
        # H sin = -cos, H cos = sin, H const = 0
        assert np.abs(hilbert(circle_field(sin={1: 1.0})).coeffs - circle_field(cos={1: -1.0}).coeffs).max() == 0
        assert np.abs(hilbert(circle_field(cos={1: 1.0})).coeffs - circle_field(sin={1: 1.0}).coeffs).max() == 0
        assert np.abs(hilbert(circle_field(mean=3.0)).coeffs).max() == 0

    def test_hilbert_squared(self, rng):
        # H^2 = -(identity minus mean)
        f = random_field(rng, 10)
        g = hilbert(hilbert(f))
        h = -1.0 * f + mean_value(f) * circle_field(mean=1.0, max_mode=10)
        assert np.abs(g.coeffs - h.coeffs).max() < 1e-14

    def test_hilbert_derivative_is_abs_k(self, rng):
        # H d/dt acts as |k| on coefficients
        f = random_field(rng, 8)
        g = hilbert(derivative(f))
        ks = np.abs(np.arange(-8, 9))
        assert np.abs(g.coeffs - ks * f.coeffs).max() < 1e-13

    def test_biot_savart_mode_formula(self):
        # u_k = -w_k / |k|, so sin 2t maps to -sin(2t)/2
        u = biot_savart(circle_field(sin={2: 1.0}), MeanZero())
        assert np.abs(u.coeffs - circle_field(sin={2: -0.5}).coeffs).max() < 1e-15

    def test_biot_savart_derivative_property(self, rng):
        f = random_field(rng, 12, zero_mean=True)
        u = biot_savart(f, MeanZero())
        assert np.abs(derivative(u).coeffs - hilbert(f).coeffs).max() < 1e-13

    def test_biot_savart_gauges(self, rng):
        f = random_field(rng, 12, zero_mean=True)
        assert mean_value(biot_savart(f, MeanZero())) == 0.0
        u = biot_savart(f, PointZero(0.7))
        val, _ = evaluate(u, 0.7)
        assert abs(val) < 1e-13

    def test_biot_savart_needs_zero_mean(self):
        with pytest.raises(ValueError):
            biot_savart(circle_field(sin={1: 1.0}, mean=0.5))

    def test_project_p0(self, rng):
        f = random_field(rng, 9)
        g = project_p0(f)
        v, d = evaluate(g, 0.0)
        assert abs(v) < 1e-13 and abs(d) < 1e-13
        # idempotent
        assert np.abs(project_p0(g).coeffs - g.coeffs).max() < 1e-13

    def test_project_p0_on_span(self):
        assert np.abs(project_p0(circle_field(sin={1: 2.0})).coeffs).max() < 1e-15
        assert np.abs(project_p0(circle_field(mean=1.0)).coeffs).max() < 1e-15
        g = project_p0(circle_field(cos={1: 1.0}))
        want = circle_field(cos={1: 1.0}, mean=-1.0)
        assert np.abs(g.coeffs - want.coeffs).max() < 1e-15


class TestNorms:
    def test_sobolev_of_sine(self):
        # coefficients +-i/2 at k = +-1: sum |k|^{2s} |c|^2 = 1/2 for every s
        for s in (0.5, 1.0, 1.5, 2.0):
            assert abs(sobolev_norm(circle_field(sin={1: 1.0}), s) - math.sqrt(0.5)) < 1e-15

    def test_m_multiplier_kills_first_harmonics(self):
        f = circle_field(sin={1: 3.0}, cos={1: -2.0}, mean=5.0)
        assert norm(f, MMultiplier()) == 0.0
        g = circle_field(sin={2: 1.0})
        # (k^2-1)(|k|+1) = 9 at k = 2, coefficient mass 1/2
        assert abs(norm(g, MMultiplier()) - math.sqrt(4.5)) < 1e-14

    def test_y0_one_minus_cos(self):
        # closed form: norm^2 = 16 (sqrt(pi)/2) Gamma(3/4)/Gamma(5/4)
        f = circle_field(cos={1: -1.0}, mean=1.0)
        assert abs(y0_norm(f, 1.75) - 4.378383692159638) < 1e-7

    def test_y0_divergence_flagged(self):
        assert y0_norm(circle_field(sin={1: 1.0}), 1.75) == math.inf
        assert y0_norm(circle_field(cos={1: 1.0}), 1.75) == math.inf
        assert y0_norm(circle_field(mean=1.0, max_mode=1), 1.75) == math.inf

    def test_y0_gamma_range(self):
        with pytest.raises(ValueError):
            y0_norm(circle_field(sin={1: 1.0}), 2.5)

    def test_quotient_vanishes_on_span(self):
        f = circle_field(sin={1: 0.3}, cos={1: -1.2}, mean=0.7)
        assert quotient_y0_norm(f, 1.75) < 1e-9

    def test_quotient_invariance(self, rng):
        f = random_field(rng, 6, zero_mean=True)
        base = quotient_y0_norm(f, 1.75)
        g = f + circle_field(sin={1: -0.8}, cos={1: 0.45}, mean=2.0, max_mode=6)
        assert abs(quotient_y0_norm(g, 1.75) - base) < 1e-7 * max(1.0, base)

    def test_quotient_below_y0(self, rng):
        # quotient minimizes over the span, so it can only be smaller
        f = random_field(rng, 6, zero_mean=True)
        g = project_p0(f)
        qy = quotient_y0_norm(g, 1.75)
        yy = y0_norm(g, 1.75)
        assert qy <= yy + 1e-10

    def test_norm_dispatcher(self):
        f = circle_field(sin={1: 1.0})
        assert norm(f, Sobolev(1.0)) == sobolev_norm(f, 1.0)
        assert norm(f, Y0(1.75)) == math.inf
        assert norm(f, QuotientY(1.75)) < 1e-9
        with pytest.raises(TypeError):
            norm(f, "h1")


class TestFieldAlgebra:
    def test_arithmetic_aligns_bands(self):
        f = circle_field(sin={1: 1.0})
        g = circle_field(cos={3: 2.0})
        h = f + g
        assert h.max_mode == 3
        assert abs(h.coeff(1) - f.coeff(1)) < 1e-15
        assert abs((2.0 * f).coeff(1) - 2 * f.coeff(1)) < 1e-15

    def test_coeff_out_of_band_is_zero(self):
        assert circle_field(sin={1: 1.0}).coeff(5) == 0j

    def test_zero_field(self):
        assert l2_norm(zero_field(4)) == 0.0

    def test_field_from_coeffs_mirrors(self):
        f = field_from_coeffs({2: 0.5 - 0.25j})
        assert f.coeff(-2) == 0.5 + 0.25j
