import numpy as np
import pytest

import oracles
from granular_spectra import (Distribution, ExpWeight, build_grid, laplacian,
                              laplacian_matrix, maxwellian, moments, quadrature,
                              third_moment_vector, weighted_norm)


class TestBuildGrid:
    def test_desk_grid(self):
        g = build_grid(2, 8.0, 32)
        assert g.size == 1024
        assert g.h == 0.5

    def test_midpoint_nodes(self):
        g = build_grid(2, 1.0, 8)
        assert np.allclose(g.axis, np.arange(-0.875, 0.876, 0.25))

    def test_3d_count(self):
        assert build_grid(3, 6.0, 16).size == 4096

    @pytest.mark.parametrize("d,L,N", [(4, 8.0, 32), (2, 8.0, 31), (2, 8.0, 6),
                                       (2, -1.0, 32), (2, 0.0, 32)])
    def test_rejects_bad_input(self, d, L, N):
        with pytest.raises(ValueError):
            build_grid(d, L, N)

    def test_centro_symmetry(self):
        g = build_grid(2, 3.0, 10)
        nodes = {tuple(np.round(v, 12)) for v in g.nodes}
        for v in g.nodes:
            assert tuple(np.round(-v, 12)) in nodes

    def test_odd_function_cancels(self):
        g = build_grid(2, 5.0, 12)
        f = Distribution(g, g.nodes[:, 0] * np.exp(-g.speed_sq))
        assert abs(quadrature(f)) < 1e-14


class TestQuadrature:
    def test_zero(self):
        g = build_grid(2, 8.0, 16)
        assert quadrature(Distribution(g, np.zeros(g.size))) == 0.0

    def test_gaussian_mass_vs_hermite(self):
        g = build_grid(2, 8.0, 32)
        m = maxwellian(g, 1.0, [0.0, 0.0], 1.0)
        ref = oracles.gauss_hermite_moment(2, 1.0, [0.0, 0.0], lambda v: 1.0)
        assert abs(quadrature(m) - ref) < 1e-6

    def test_indicator(self):
        g = build_grid(2, 8.0, 16)
        vals = np.zeros(g.size)
        vals[37] = 1.0
        assert quadrature(Distribution(g, vals)) == pytest.approx(g.h ** 2)


class TestMaxwellian:
    def test_moment_roundtrip(self):
        g = build_grid(2, 8.0, 32)
        mo = moments(maxwellian(g, 1.0, [0.0, 0.0], 1.0))
        assert abs(mo.mass - 1.0) < 1e-6
        assert np.all(np.abs(mo.momentum) < 1e-12)
        assert abs(mo.temperature - 1.0) < 1e-6

    def test_even_at_rest(self):
        g = build_grid(2, 6.0, 16)
        m = maxwellian(g, 1.0, [0.0, 0.0], 0.7)
        flipped = m.values.reshape(16, 16)[::-1, ::-1].ravel()
        assert np.allclose(m.values, flipped, rtol=0, atol=0)

    def test_mass_scaling(self):
        g = build_grid(2, 6.0, 16)
        one = maxwellian(g, 1.0, [0.0, 0.0], 0.5)
        two = maxwellian(g, 2.0, [0.0, 0.0], 0.5)
        assert np.array_equal(two.values, 2.0 * one.values)

    def test_rejects_nonpositive_temperature(self):
        g = build_grid(2, 6.0, 16)
        with pytest.raises(ValueError):
            maxwellian(g, 1.0, [0.0, 0.0], 0.0)


class TestMoments:
    def test_shifted_velocity(self):
        g = build_grid(2, 8.0, 32)
        mo = moments(maxwellian(g, 1.0, [1.0, 0.0], 1.0))
        assert np.allclose(mo.momentum, [1.0, 0.0], atol=1e-6)

    def test_zero_mass_flagged(self):
        g = build_grid(2, 8.0, 16)
        mo = moments(Distribution(g, np.zeros(g.size)))
        assert mo.mass == 0.0
        assert not mo.defined
        assert np.all(np.isnan(mo.momentum))

    def test_error_shrinks_with_h(self):
        errs = []
        for N in (8, 16):
            g = build_grid(2, 8.0, N)
            mo = moments(maxwellian(g, 1.0, [0.0, 0.0], 1.0))
            errs.append(abs(mo.temperature - 1.0) + abs(mo.mass - 1.0))
        assert errs[1] < 0.5 * errs[0]


class TestLaplacian:
    def test_constant_interior(self):
        g = build_grid(2, 4.0, 16)
        lap = laplacian(Distribution(g, np.full(g.size, 3.0))).values.reshape(16, 16)
        assert np.allclose(lap[1:-1, 1:-1], 0.0, atol=1e-12)
        assert np.any(lap[0, :] != 0.0)  # zero padding acts at the boundary

    def test_quadratic_exact(self):
        g = build_grid(2, 4.0, 16)
        lap = laplacian(Distribution(g, g.nodes[:, 0] ** 2)).values.reshape(16, 16)
        assert np.allclose(lap[1:-1, 1:-1], 2.0, atol=1e-10)

    def test_gaussian_flux_small(self):
        g = build_grid(2, 8.0, 32)
        m = maxwellian(g, 1.0, [0.0, 0.0], 1.0)
        assert abs(quadrature(laplacian(m))) < 1e-8

    def test_linearity_and_parity(self):
        g = build_grid(2, 4.0, 12)
        rng = np.random.default_rng(3)
        a = Distribution(g, rng.normal(size=g.size))
        b = Distribution(g, rng.normal(size=g.size))
        lhs = laplacian(Distribution(g, 2.0 * a.values - 3.0 * b.values)).values
        rhs = 2.0 * laplacian(a).values - 3.0 * laplacian(b).values
        assert np.allclose(lhs, rhs, atol=1e-12)
        even = Distribution(g, np.exp(-g.speed_sq))
        le = laplacian(even).values.reshape(12, 12)
        assert np.allclose(le, le[::-1, ::-1], atol=1e-14)

    def test_matrix_matches_stencil(self):
        g = build_grid(2, 4.0, 10)
        rng = np.random.default_rng(5)
        f = Distribution(g, rng.normal(size=g.size))
        assert np.allclose(laplacian_matrix(g) @ f.values, laplacian(f).values,
                           atol=1e-12)


class TestWeightedNorm:
    def test_zero(self):
        g = build_grid(2, 6.0, 16)
        assert weighted_norm(Distribution(g, np.zeros(g.size)), ExpWeight()) == 0.0

    def test_single_node(self):
        g = build_grid(2, 6.0, 16)
        w = ExpWeight(a=0.1, s=0.5)
        i0 = int(np.argmin(g.speed_sq))
        vals = np.zeros(g.size)
        vals[i0] = 1.0
        r = np.sqrt(g.speed_sq[i0])
        expected = g.h ** 2 * np.exp(w.a * r ** w.s)
        assert weighted_norm(Distribution(g, vals), w) == pytest.approx(expected)

    def test_gaussian_vs_radial_oracle(self):
        g = build_grid(2, 8.0, 32)
        m = maxwellian(g, 1.0, [0.0, 0.0], 1.0)
        w = ExpWeight(a=0.1, s=0.5)
        ref = oracles.weighted_norm_oracle(2, 1.0, w.a, w.s)
        assert np.isfinite(ref)
        # the |v|^s cusp at the origin limits midpoint accuracy
        assert abs(weighted_norm(m, w) - ref) < 1e-3 * ref

    def test_norm_axioms(self):
        g = build_grid(2, 4.0, 10)
        rng = np.random.default_rng(11)
        w = ExpWeight()
        a = Distribution(g, rng.normal(size=g.size))
        b = Distribution(g, rng.normal(size=g.size))
        assert weighted_norm(Distribution(g, -2.0 * a.values), w) == pytest.approx(
            2.0 * weighted_norm(a, w))
        assert weighted_norm(Distribution(g, a.values + b.values), w) <= \
            weighted_norm(a, w) + weighted_norm(b, w) + 1e-12

    @pytest.mark.parametrize("a,s", [(0.0, 0.5), (-1.0, 0.5), (0.1, 0.0),
                                     (0.1, 1.0), (0.1, 1.5)])
    def test_weight_validation(self, a, s):
        with pytest.raises(ValueError):
            ExpWeight(a=a, s=s)


class TestThirdMoment:
    def test_even_input_cancels(self):
        g = build_grid(2, 6.0, 16)
        m = maxwellian(g, 1.0, [0.0, 0.0], 1.0)
        assert np.all(np.abs(third_moment_vector(m)) < 1e-13)

    def test_odd_weighted_gaussian(self):
        g = build_grid(2, 8.0, 32)
        T = 0.8
        m = maxwellian(g, 1.0, [0.0, 0.0], T)
        h = Distribution(g, g.nodes[:, 0] * m.values)
        ref = oracles.gauss_hermite_moment(
            2, T, [0.0, 0.0], lambda v: v[:, 0] ** 2 * (v ** 2).sum(-1))
        q = third_moment_vector(h)
        assert q[0] == pytest.approx(ref, rel=1e-6)
        assert q[0] == pytest.approx((2 + 2) * T ** 2, rel=1e-6)
        assert abs(q[1]) < 1e-13

    def test_zero(self):
        g = build_grid(2, 6.0, 12)
        assert np.all(third_moment_vector(Distribution(g, np.zeros(g.size))) == 0.0)
