import math

import mpmath
import numpy as np
import pytest
import scipy.integrate
from hypothesis import given
from hypothesis import strategies as st

from gausscardinal import reference_oracles as ro
from gausscardinal import theta_multiplier as tm
from gausscardinal.errors import DomainError, ParameterError

SPACINGS = [1.0, 0.5, 0.25]


class TestContext:
    def test_series_radius(self):
        assert tm.MultiplierContext(1.0).K == 3
        assert tm.MultiplierContext(0.5).K == 2
        assert tm.MultiplierContext(0.01).K == 2

    def test_period(self):
        assert tm.MultiplierContext(0.5).period == pytest.approx(4 * math.pi)

    @pytest.mark.parametrize("h", [0.0, -1.0, math.inf, math.nan])
    def test_bad_spacing(self, h):
        with pytest.raises(ParameterError):
            tm.MultiplierContext(h)

    def test_bad_tolerance(self):
        with pytest.raises(ParameterError):
            tm.MultiplierContext(1.0, rel_tol=1e-3)

    def test_non_finite_argument(self):
        with pytest.raises(DomainError):
            tm.m(tm.MultiplierContext(1.0), math.nan)


class TestAgainstOracle:
    @pytest.mark.parametrize("h", SPACINGS)
    def test_log_m_matches_extended_sum(self, h):
        ctx = tm.MultiplierContext(h)
        xi = np.linspace(0.0, 8 * math.pi / h, 61)
        got = np.asarray(tm.log_m(ctx, xi))
        with mpmath.workdps(40):
            ref = np.array([float(mpmath.log(ro.oracle_m(h, x))) for x in xi])
        # the absolute error of log m is the relative error of m
        assert np.all(np.abs(got - ref) <= 1e-12 * np.maximum(1.0, np.abs(ref)))
        live = ref > math.log(np.finfo(float).tiny)
        np.testing.assert_allclose(np.exp(got[live]), np.exp(ref[live]), rtol=1e-12, atol=0)

    def test_golden_value_at_origin(self):
        cfg = ro.OracleConfig(precision_mode="compensated", K_oracle=10)
        ref = ro.oracle_m(1.0, 0.0, cfg)
        assert ref == pytest.approx(0.9998966, abs=1e-7)
        assert tm.m(tm.MultiplierContext(1.0), 0.0) == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("h", SPACINGS)
    def test_d0_matches_cosh_series(self, h):
        ctx = tm.MultiplierContext(h)
        for xi in (0.0, 0.7, 2.0 / h, 5.0 / h):
            ref = float(ro.oracle_d0(h, xi, K=12))
            assert tm.d0(ctx, xi) == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("h", [1.0, 0.5])
    def test_d1_d2_match_series_derivatives(self, h):
        ctx = tm.MultiplierContext(h)
        for xi in (0.3, 1.5 / h, 4.0 / h):
            with mpmath.workdps(50):
                f = lambda t: ro.oracle_d0(h, t, K=12, dps=150)  # noqa: E731
                r1 = float(mpmath.diff(f, xi, 1))
                r2 = float(mpmath.diff(f, xi, 2))
            assert tm.d1(ctx, xi) == pytest.approx(r1, rel=1e-10)
            assert tm.d2(ctx, xi) == pytest.approx(r2, rel=1e-10)

    @pytest.mark.parametrize("h", [1.0, 0.5, 0.25])
    @pytest.mark.parametrize("frac", [0.05, 0.3, 0.5, 0.9, 1.7])
    def test_derivatives_match_finite_differences(self, h, frac):
        ctx = tm.MultiplierContext(h)
        xi = frac * 2 * math.pi / h
        cfg = ro.OracleConfig(dps=150)
        r1 = float(ro.oracle_m_derivative(h, xi, 1, cfg))
        r2 = float(ro.oracle_m_derivative(h, xi, 2, cfg))
        assert tm.m_prime(ctx, xi) == pytest.approx(r1, rel=1e-6)
        assert tm.m_second(ctx, xi) == pytest.approx(r2, rel=1e-6)


    @pytest.mark.parametrize("h", [0.125, 2.0**-6])
    def test_derivatives_finite_below_lattice_centres(self, h):
        # in-cell offsets r < 0 used to overflow the first moment
        ctx = tm.MultiplierContext(h)
        xi = np.linspace(-2 * math.pi * (ctx.K + 2) / h, 2 * math.pi * (ctx.K + 2) / h, 4001)
        d = np.asarray(tm.m_prime(ctx, xi))
        assert np.all(np.isfinite(d))
        np.testing.assert_allclose(d, -d[::-1], atol=1e-12)
        x0 = 0.55 * 2 * math.pi / h
        r1 = float(ro.oracle_m_derivative(h, x0, 1, ro.OracleConfig(dps=150)))
        assert tm.m_prime(ctx, x0) == pytest.approx(r1, rel=1e-6)


class TestShape:
    @pytest.mark.parametrize("h", SPACINGS)
    def test_positive_even_monotone(self, h):
        ctx = tm.MultiplierContext(h)
        xi = np.linspace(0.0, 8 * math.pi / h, 10_000)
        v = np.asarray(tm.m(ctx, xi))
        lm = np.asarray(tm.log_m(ctx, xi))
        assert np.all(v[lm > math.log(np.finfo(float).tiny)] > 0)
        assert np.all(v >= 0)
        assert np.all(v <= v[0]) and v[0] <= 1.0
        assert np.all(np.diff(lm) < 0)
        np.testing.assert_array_equal(tm.m(ctx, -xi), v)

    def test_underflow_contract(self):
        ctx = tm.MultiplierContext(0.25)
        assert tm.m(ctx, 1e4) == 0.0
        assert math.isfinite(tm.log_m(ctx, 1e4))
        assert tm.log_m(ctx, 1e4) < math.log(np.finfo(float).tiny)

    @given(st.sampled_from([1.0, 0.5, 0.25, 0.125]),
           st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False))
    def test_partition_of_unity(self, h, xi):
        ctx = tm.MultiplierContext(h)
        assert abs(tm.alias_sum(ctx, xi) - 1.0) < 1e-10

    def test_alias_radius_too_small(self):
        with pytest.raises(ParameterError):
            tm.alias_sum(tm.MultiplierContext(1.0), 0.0, shift_radius=1)

    def test_tensor_is_product(self):
        ctx = tm.MultiplierContext(0.5, dim=2)
        pts = np.array([[0.0, 1.0], [3.0, -7.0], [20.0, 0.5]])
        one = tm.MultiplierContext(0.5)
        ref = np.asarray(tm.m(one, pts[:, 0])) * np.asarray(tm.m(one, pts[:, 1]))
        np.testing.assert_allclose(tm.m_tensor(ctx, pts), ref, rtol=1e-14)


class TestDerivativeBounds:
    @pytest.mark.parametrize("h", SPACINGS)
    def test_derivative_mass(self, h):
        ctx = tm.MultiplierContext(h)
        top = 2 * math.pi * (ctx.K + 1) / h
        half, _ = scipy.integrate.quad(lambda x: abs(tm.m_prime(ctx, x)), 0.0, top,
                                       limit=400, epsabs=0, epsrel=1e-12)
        m0 = tm.m(ctx, 0.0)
        assert 2 * half == pytest.approx(2 * m0, rel=1e-6)
        assert 2 * half < 2

    def test_cell_bound_constant_is_stable(self):
        fitted = []
        for h in SPACINGS:
            ctx = tm.MultiplierContext(h)
            worst = 0.0
            for k in range(1, 7):
                xi = np.linspace(2 * math.pi * (k - 1) / h, 2 * math.pi * k / h, 2001)
                ratio = np.abs(np.asarray(tm.m_second_ratio(ctx, xi)))
                worst = max(worst, float(ratio.max()) * h * h / k**2)
            fitted.append(worst)
        assert max(fitted) / min(fitted) < 2

    @pytest.mark.parametrize("h", SPACINGS)
    def test_second_ratio_consistent(self, h):
        ctx = tm.MultiplierContext(h)
        xi = np.linspace(0.1, 3 * math.pi / h, 50)
        np.testing.assert_allclose(np.asarray(tm.m_second(ctx, xi)),
                                   np.asarray(tm.m_second_ratio(ctx, xi)) * np.asarray(tm.m(ctx, xi)),
                                   rtol=1e-14, atol=0)
