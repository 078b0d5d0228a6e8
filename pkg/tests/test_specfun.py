import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hybridcov.exceptions import UnderflowWarning
from hybridcov.specfun import (
    QuadratureSettings,
    bessel_k,
    gamma_fn,
    gen_inc_gamma,
    reg_gen_inc_gamma,
    reg_lower_gamma,
    reg_upper_gamma,
)

# Independent arbitrary-precision values (mpmath, 40 digits), frozen before the
# implementation existed.
GAMMA_3_4 = 1.2254167024651776451290983034  # mp.gamma(0.75)
GIG_15_02_03 = 0.61609177722637152643  # quad of t^0.5 exp(-t - 0.3/t) on [0.2, inf)


class TestGammaFn:
    def test_at_one(self):
        assert gamma_fn(1.0) == 1.0

    def test_at_half(self):
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)

    def test_against_high_precision_oracle(self):
        assert gamma_fn(0.75) == pytest.approx(GAMMA_3_4, rel=1e-12)

    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5])
    def test_domain_error(self, bad):
        with pytest.raises(ValueError):
            gamma_fn(bad)

    def test_overflow_signaled(self):
        with pytest.raises(OverflowError):
            gamma_fn(200.0)

    def test_accuracy_across_range(self):
        # relative error <= 1e-12 on (0, 170]
        for a in [1e-3, 0.1, 2.5, 17.0, 170.0]:
            via_lgamma = math.exp(math.lgamma(a))
            assert gamma_fn(a) == pytest.approx(via_lgamma, rel=1e-12)


class TestRegLowerGamma:
    def test_exponential_case(self):
        # P(1, x) = 1 - e^-x, so x = ln 2 gives exactly one half
        assert reg_lower_gamma(1.0, math.log(2.0)) == pytest.approx(0.5, abs=1e-14)

    def test_empty_integral(self):
        assert reg_lower_gamma(2.0, 0.0) == 0.0

    def test_against_quadrature_oracle(self):
        # substitution t = s^4 removes the t^(a-1) endpoint singularity
        a, x = 0.375, 1.25
        oracle, err = quad(
            lambda s: 4.0 * s ** (4.0 * a - 1.0) * math.exp(-(s**4)),
            0.0,
            x**0.25,
            epsabs=1e-14,
        )
        assert err < 1e-12
        assert reg_lower_gamma(a, x) == pytest.approx(oracle / gamma_fn(a), rel=1e-12)

    def test_monotone_and_limit(self):
        xs = np.geomspace(1e-3, 60.0, 40)
        vals = reg_lower_gamma(1.7, xs)
        assert np.all(np.diff(vals) >= 0)
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)

    def test_unregularized_recovery(self):
        a, x = 2.25, 0.8
        oracle, _ = quad(lambda t: t ** (a - 1.0) * math.exp(-t), 0.0, x, epsabs=1e-14)
        assert reg_lower_gamma(a, x) * gamma_fn(a) == pytest.approx(oracle, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            reg_lower_gamma(-1.0, 1.0)
        with pytest.raises(ValueError):
            reg_lower_gamma(1.0, -0.1)


class TestGenIncGamma:
    def test_total_exponential_mass(self):
        assert gen_inc_gamma(1.0, 0.0, 0.0) == pytest.approx(1.0, rel=1e-14)

    def test_bessel_identity_point(self):
        # G(nu; 0; c) = 2 c^(nu/2) K_nu(2 sqrt(c))
        nu, c = 0.75, 1.0
        lhs = gen_inc_gamma(nu, 0.0, c)
        rhs = 2.0 * c ** (nu / 2.0) * bessel_k(nu, 2.0 * math.sqrt(c))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_dual_quadrature_cross_check(self):
        # primary adaptive Gauss-Kronrod route vs the Gauss-Legendre panel
        # route (different node family), plus the frozen mpmath value
        a, b, c = 1.5, 0.2, 0.3
        kronrod = gen_inc_gamma(a, b, c)
        legendre = reg_gen_inc_gamma(a + 0.2, b, c)  # force the non-half-integer panel path
        legendre_same = reg_gen_inc_gamma(a, b, np.array([c, 2 * c]))[0] * gamma_fn(a)
        assert kronrod == pytest.approx(GIG_15_02_03, rel=1e-12)
        assert legendre_same == pytest.approx(kronrod, rel=1e-9)
        assert legendre == pytest.approx(gen_inc_gamma(a + 0.2, b, c) / gamma_fn(a + 0.2), rel=1e-9)

    def test_c_zero_reduces_to_upper_incomplete(self):
        a, b = 1.9, 0.7
        assert gen_inc_gamma(a, b, 0.0) == reg_upper_gamma(a, b) * gamma_fn(a)

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.floats(0.3, 4.0),
        b=st.floats(0.01, 3.0),
        c=st.floats(0.01, 10.0),
        bump=st.floats(0.05, 2.0),
    )
    def test_strictly_decreasing_in_b_and_c(self, a, b, c, bump):
        base = gen_inc_gamma(a, b, c)
        # skip cases where the removed mass sits below quadrature resolution
        mid = b + 0.5 * bump
        removed_b = bump * mid ** (a - 1.0) * math.exp(-mid - c / mid)
        assume(removed_b > 1e-11 * max(base, 1.0))
        assert gen_inc_gamma(a, b + bump, c) < base
        peak = max(b, math.sqrt(c))
        removed_c = bump / peak * base
        assume(removed_c > 1e-11 * max(base, 1.0))
        assert gen_inc_gamma(a, b, c + bump) < base

    def test_domain_error(self):
        with pytest.raises(ValueError):
            gen_inc_gamma(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            gen_inc_gamma(1.0, -1.0, 1.0)

    def test_pure(self):
        args = (1.3, 0.4, 2.2)
        assert gen_inc_gamma(*args) == gen_inc_gamma(*args)


class TestRegGenIncGamma:
    # scalar route accuracy is max(abs_tol, rel_tol * value); mirror that floor
    @pytest.mark.parametrize("a", [0.5, 1.5, 2.5, 4.5])
    def test_half_integer_ladder_vs_scalar_quadrature(self, a):
        b = 0.31
        cs = np.geomspace(1e-6, 900.0, 12)
        fast = reg_gen_inc_gamma(a, b, cs)
        slow = np.array([gen_inc_gamma(a, b, float(c)) / gamma_fn(a) for c in cs])
        np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=5e-14)

    @pytest.mark.parametrize("a", [0.35, 1.2, 3.8])
    def test_general_order_panels_vs_scalar_quadrature(self, a):
        b = 1.7
        cs = np.geomspace(1e-4, 200.0, 8)
        fast = reg_gen_inc_gamma(a, b, cs)
        slow = np.array([gen_inc_gamma(a, b, float(c)) / gamma_fn(a) for c in cs])
        np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=5e-14)

    def test_c_zero_entries(self):
        out = reg_gen_inc_gamma(1.5, 0.8, np.array([0.0, 1.0]))
        assert out[0] == reg_upper_gamma(1.5, 0.8)

    def test_scalar_in_scalar_out(self):
        assert isinstance(reg_gen_inc_gamma(0.5, 0.1, 0.5), float)


class TestBesselK:
    def test_half_order_closed_form(self):
        x = 2.0
        assert bessel_k(0.5, x) == pytest.approx(
            math.sqrt(math.pi / (2.0 * x)) * math.exp(-x), rel=1e-13
        )

    def test_three_halves_closed_form(self):
        x = 1.0
        expected = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) * (1.0 + 1.0 / x)
        assert bessel_k(1.5, x) == pytest.approx(expected, rel=1e-13)

    def test_identity_roundtrip_with_gen_inc_gamma(self):
        nu, x = 0.75, 0.3
        c = (x / 2.0) ** 2
        via_integral = gen_inc_gamma(nu, 0.0, c) / (2.0 * c ** (nu / 2.0))
        assert bessel_k(nu, x) == pytest.approx(via_integral, rel=1e-9)

    def test_negative_order_is_magnitude(self):
        assert bessel_k(-0.75, 1.3) == bessel_k(0.75, 1.3)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            bessel_k(0.5, 0.0)
        with pytest.raises(ValueError):
            bessel_k(0.5, -1.0)

    def test_underflow_signaled(self):
        with pytest.warns(UnderflowWarning):
            out = bessel_k(0.5, 800.0)
        assert out == 0.0

    def test_accuracy_range(self):
        # spot checks across the promised range against the exact half-integer form
        for x in [1e-6, 1e-2, 1.0, 50.0, 700.0]:
            expected = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x)
            assert bessel_k(0.5, x) == pytest.approx(expected, rel=1e-10)


class TestInvariants:
    @pytest.mark.parametrize("a", [0.4, 1.0, 2.7, 6.0])
    def test_lower_plus_upper_is_one(self, a):
        for x in np.geomspace(1e-4, 50.0, 12):
            total = reg_lower_gamma(a, x) + gen_inc_gamma(a, x, 0.0) / gamma_fn(a)
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_bessel_gamma_identity_grid(self):
        for nu in (0.25, 0.75, 1.5, 3.0):
            for c in np.geomspace(1e-3, 25.0, 20):
                lhs = gen_inc_gamma(nu, 0.0, float(c))
                rhs = 2.0 * c ** (nu / 2.0) * bessel_k(nu, 2.0 * math.sqrt(c))
                assert lhs == pytest.approx(rhs, rel=1e-9)


class TestQuadratureSettings:
    def test_defaults(self):
        s = QuadratureSettings()
        assert s.rel_tol == 1e-10 and s.abs_tol == 1e-14 and s.max_subdivisions == 200

    @pytest.mark.parametrize(
        "kwargs",
        [dict(rel_tol=0.0), dict(abs_tol=-1e-3), dict(max_subdivisions=0)],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureSettings(**kwargs)
