import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gausscardinal import interpolator as ip
from gausscardinal import lagrange_kernel as lk
from gausscardinal import theta_multiplier as tm
from gausscardinal.errors import (
    AccuracyWarning,
    ConditioningError,
    DomainError,
    ExtrapolationError,
    ParameterError,
)
from gausscardinal.experiments import targets
from gausscardinal.experiments.runs import RunConfig, interpolation_error


def random_field(h, n_inner, pad=4, seed=0, dim=1):
    rng = np.random.default_rng(seed)
    side = n_inner + 2 * pad
    v = np.zeros((side,) * dim)
    v[(slice(pad, -pad),) * dim] = rng.standard_normal((n_inner,) * dim)
    return ip.SampledField(h, v)


class TestSampledField:
    def test_shell_must_be_negligible(self):
        with pytest.raises(DomainError):
            ip.SampledField(1.0, np.ones(5))

    def test_shell_unchecked_without_flag(self):
        assert ip.SampledField(1.0, np.ones(5), decay_flag=False).radius == 2

    def test_even_side_rejected(self):
        with pytest.raises(DomainError):
            ip.SampledField(1.0, np.zeros(4))

    def test_from_function(self):
        f = ip.SampledField.from_function(lambda x: np.exp(-x * x), 0.5, 6.0)
        assert f.radius == 12
        np.testing.assert_allclose(f.nodes, 0.5 * np.arange(-12, 13))

    def test_from_function_2d(self):
        f = ip.SampledField.from_function(lambda x: np.exp(-(x**2).sum(-1)), 0.5, 6.0, dim=2)
        assert f.values.shape == (25, 25) and f.values[12, 12] == 1.0


class TestSpectralRoute:
    @pytest.mark.parametrize("h", [0.5, 0.125])
    def test_interpolates_at_nodes(self, h):
        field = random_field(h, 41, seed=1)
        M = 4
        nodes, v = ip.interpolate_grid_spectral(field, tm.MultiplierContext(h), M)
        np.testing.assert_allclose(v[::M], field.values, atol=1e-8)

    @pytest.mark.parametrize("h", [1.0, 0.5, 0.25])
    def test_delta_data_reproduce_lagrange_table(self, h):
        M = 8
        table = lk.chi_table(lk.GridSpec(h, coeff_radius=32, eval_radius=16 * h), M,
                             with_coeffs=False)
        nodes, v = ip.interpolate_grid_spectral(ip.SampledField.delta(h, 32), tm.MultiplierContext(h),
                                                M, out_radius=16 * h)
        np.testing.assert_allclose(v, table.samples, atol=1e-10)

    def test_route_equivalence(self):
        h, M = 0.5, 4
        field = random_field(h, 25, seed=2)
        nodes, grid = ip.interpolate_grid_spectral(field, tm.MultiplierContext(h), M)
        table = lk.chi_table(lk.GridSpec(h, coeff_radius=lk.recommended_coeff_radius(h)))
        inner = np.abs(nodes) <= 4.0
        point = ip.interpolate_point(field, table, nodes[inner])
        np.testing.assert_allclose(point, grid[inner], atol=1e-6)

    def test_two_dimensional_separable(self):
        h, M = 0.5, 2
        a = random_field(h, 9, seed=3).values
        b = random_field(h, 9, seed=4).values
        ctx = tm.MultiplierContext(h)
        _, va = ip.interpolate_grid_spectral(ip.SampledField(h, a), ctx, M)
        _, vb = ip.interpolate_grid_spectral(ip.SampledField(h, b), ctx, M)
        _, v2 = ip.interpolate_grid_spectral(ip.SampledField(h, np.outer(a, b)), ctx, M)
        np.testing.assert_allclose(v2, np.outer(va, vb), atol=1e-13)

    def test_two_dimensional_point_route(self):
        h, M = 1.0, 2
        field = random_field(h, 5, pad=3, seed=5, dim=2)
        nodes, grid = ip.interpolate_grid_spectral(field, tm.MultiplierContext(h), M)
        table = lk.chi_table(lk.GridSpec(h, dim=2, coeff_radius=32))
        pts = np.array([[0.5, -1.0], [2.5, 1.5], [0.0, 0.0]])
        idx = np.rint(pts * M).astype(int) + len(nodes) // 2
        got = ip.interpolate_point(field, table, pts)
        np.testing.assert_allclose(got, grid[idx[:, 0], idx[:, 1]], atol=1e-6)

    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**16))
    def test_linearity(self, s, t, seed):
        h = 0.5
        a = random_field(h, 11, seed=seed).values
        b = random_field(h, 11, seed=seed + 1).values
        ctx = tm.MultiplierContext(h)
        run = lambda v: ip.interpolate_grid_spectral(ip.SampledField(h, v), ctx, 2)[1]  # noqa: E731
        np.testing.assert_allclose(run(s * a + t * b), s * run(a) + t * run(b), atol=1e-12)

    @given(st.integers(1, 3), st.integers(0, 2**16))
    def test_lattice_shift(self, shift, seed):
        h, M = 0.5, 4
        a = random_field(h, 13, pad=5, seed=seed).values
        ctx = tm.MultiplierContext(h)
        v0 = ip.interpolate_grid_spectral(ip.SampledField(h, a), ctx, M)[1]
        v1 = ip.interpolate_grid_spectral(ip.SampledField(h, np.roll(a, shift)), ctx, M)[1]
        np.testing.assert_allclose(v1[shift * M:], v0[:-shift * M], atol=1e-12)

    def test_truncated_spectrum_warns(self):
        field = random_field(1.0, 5)
        with pytest.warns(AccuracyWarning):
            ip.interpolate_grid_spectral(field, tm.MultiplierContext(1.0), 4, beta_radius=1)

    def test_requires_decay(self):
        field = ip.SampledField(1.0, np.ones(5), decay_flag=False)
        with pytest.raises(DomainError):
            ip.interpolate_grid_spectral(field, tm.MultiplierContext(1.0))

    def test_spacing_mismatch(self):
        with pytest.raises(ParameterError):
            ip.interpolate_grid_spectral(random_field(0.5, 5), tm.MultiplierContext(1.0))

    def test_fold_matches_direct_sum(self):
        h, P, M, B = 0.5, 12, 3, 2
        w = ip.folded_weights(lambda xi: np.exp(-xi * xi / 50), h, P, M, B)
        q = np.arange(-((2 * B + 1) * P // 2), (2 * B + 1) * P // 2 + 1)
        ref = np.zeros(M * P)
        np.add.at(ref, q % (M * P), np.exp(-((2 * math.pi * q / (P * h)) ** 2) / 50))
        np.testing.assert_allclose(w.real, ref, rtol=1e-14)


class TestPointRoute:
    def test_outside_data_box(self):
        field = random_field(1.0, 5)
        table = lk.chi_table(lk.GridSpec(1.0))
        with pytest.raises(ExtrapolationError):
            ip.interpolate_point(field, table, 10.0)

    def test_small_spacing_refused(self):
        h = 0.25
        field = random_field(h, 9)
        table = lk.chi_table(lk.GridSpec(h, coeff_radius=lk.recommended_coeff_radius(h)))
        with pytest.raises(ConditioningError):
            ip.interpolate_point(field, table, 0.1)


class TestNorms:
    def test_lp_norm_of_constant(self):
        assert ip.lp_norm(np.full(100, 2.0), 2, 0.01) == pytest.approx(2.0)
        assert ip.lp_norm(np.full(100, 2.0), 1, 0.01) == pytest.approx(2.0)
        assert ip.lp_norm(np.array([1.0, -3.0]), "inf", 1.0) == 3.0

    def test_lp_norm_zero_and_tiny(self):
        assert ip.lp_norm(np.zeros(10), 2, 1.0) == 0.0
        assert ip.lp_norm(np.full(4, 1e-200), 4, 1.0) == pytest.approx(1e-200 * 4**0.25)

    def test_spectral_derivative_of_sine(self):
        x = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        d = ip.spectral_derivative(np.sin(3 * x), (2,), x[1])
        np.testing.assert_allclose(d, -9 * np.sin(3 * x), atol=1e-10)

    def test_seminorm_of_gaussian(self):
        x = np.linspace(-12, 12, 2401)
        v = np.exp(-x * x)
        # ||(e^{-x^2})'||_2^2 = sqrt(pi/2)
        assert ip.sobolev_seminorm(v, 1, 2, x[1] - x[0]) == pytest.approx((math.pi / 2) ** 0.25, rel=1e-10)

    def test_seminorm_edge_warning(self):
        with pytest.warns(AccuracyWarning):
            ip.sobolev_seminorm(np.linspace(0, 1, 33), 1, 2, 0.1)


class TestRefinement:
    """Error against the fine factor M at fixed h."""

    @pytest.mark.parametrize("h", [0.25, 0.0625])
    def test_l2_error_non_increasing(self, h):
        t = targets.bspline(3)
        e = [interpolation_error(t, h, 2, RunConfig(fine_factor=M)) for M in (2, 4, 8, 16)]
        assert all(b <= a + 1e-10 for a, b in zip(e, e[1:]))

    def test_sup_error_settles(self):
        # nested grids can only raise a sampled maximum; the values settle instead
        t = targets.bspline(3)
        e = [interpolation_error(t, 0.0625, "inf", RunConfig(fine_factor=M)) for M in (2, 4, 8, 16)]
        assert all(b >= a - 1e-15 for a, b in zip(e, e[1:]))
        assert e[-1] / e[0] - 1 < 0.02
