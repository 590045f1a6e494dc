import numpy as np
import pytest

from granular_spectra import (Distribution, ExpWeight, InternalConsistencyError,
                              c_nu, dispersion_roots, energy_slope, gram_limit,
                              heat_mode, lambda2_induction, moments, quadrature,
                              sound_speed, transverse_limit)
from granular_spectra.dispersion import energy_eigenvector


@pytest.fixture(scope="module")
def elastic_state(small_scenario):
    sc = small_scenario
    F1 = sc.equilibrium(1.0).profile
    nu = sc.model.loss_potential(F1)
    return sc, F1, nu


class TestCNu:
    def test_unit_frequency_gives_second_moment(self, elastic_state):
        sc, F1, nu = elastic_state
        ones = Distribution(sc.grid, np.ones(sc.grid.size))
        Tg = moments(F1).temperature
        assert c_nu(F1, ones) == pytest.approx(2 * Tg, rel=1e-10)

    def test_scaling_invariance(self, elastic_state):
        sc, F1, nu = elastic_state
        scaled = Distribution(sc.grid, 7.0 * nu.values)
        assert c_nu(F1, scaled) == pytest.approx(c_nu(F1, nu), rel=1e-14)

    def test_collision_frequency_value_in_range(self, elastic_state):
        sc, F1, nu = elastic_state
        val = c_nu(F1, nu)
        assert 0.5 * 2 * sc.T1 < val < 2.0 * 2 * sc.T1


class TestGramLimit:
    def test_root_of_cubic_at_zero(self, elastic_state):
        sc, F1, nu = elastic_state
        _, det, closed = gram_limit(0.0, 2, sc.T1, c_nu(F1, nu))
        assert det == 0.0 and closed == 0.0

    def test_acoustic_root_annihilates(self, elastic_state):
        sc, F1, nu = elastic_state
        roots = dispersion_roots(2, sc.T1)
        _, det, closed = gram_limit(roots.z_plus, 2, sc.T1, c_nu(F1, nu))
        assert abs(det) <= 1e-12 * sc.T1 ** 3
        assert abs(closed) <= 1e-12 * sc.T1 ** 3

    @pytest.mark.parametrize("seed", [0, 1])
    def test_determinant_matches_cubic(self, elastic_state, seed):
        sc, F1, nu = elastic_state
        cn = c_nu(F1, nu)
        rng = np.random.default_rng(seed)
        for z in rng.normal(size=50) + 1j * rng.normal(size=50):
            _, det, closed = gram_limit(z, 2, sc.T1, cn)
            scale = max(abs(det), abs(closed), sc.T1 ** 4)
            assert abs(det - closed) <= 1e-12 * scale

    def test_matrix_pattern(self, elastic_state):
        sc, F1, nu = elastic_state
        gm, _, _ = gram_limit(0.3 + 0.1j, 2, sc.T1, c_nu(F1, nu))
        M = gm.matrix
        assert np.allclose(M, M.T)  # symmetric
        # diagonal proportional to z, off-diagonal (1,2) purely imaginary
        assert M[0, 1] == pytest.approx(1j * sc.T1)

    def test_consistency_guard_raises(self, elastic_state):
        sc, F1, nu = elastic_state
        with pytest.raises(InternalConsistencyError):
            gram_limit(1.0 + 1.0j, 2, sc.T1, c_nu(F1, nu), tol=-1.0)


class TestDispersionRoots:
    def test_structure(self, small_scenario):
        sc = small_scenario
        r = dispersion_roots(2, sc.T1)
        assert r.z_zero == 0.0
        assert r.z_plus == -r.z_minus
        assert r.z_plus.real == 0.0
        assert r.z_plus == np.conj(r.z_minus)

    def test_value(self, small_scenario):
        sc = small_scenario
        r = dispersion_roots(2, sc.T1)
        assert r.z_plus == pytest.approx(1j * np.sqrt(2.0 * sc.T1))
        assert sound_speed(2, sc.T1) == pytest.approx(np.sqrt(sc.T1 + 2 * sc.T1 / 2))

    def test_rejects_bad_temperature(self):
        with pytest.raises(ValueError):
            dispersion_roots(2, -1.0)


class TestTransverseLimit:
    def test_values(self, small_scenario):
        sc = small_scenario
        assert transverse_limit(0.0, sc.T1) == 0.0
        assert transverse_limit(1.0, sc.T1) == pytest.approx(sc.T1)

    def test_unique_simple_root(self, small_scenario):
        sc = small_scenario
        zs = np.linspace(-1, 1, 11) + 1j * np.linspace(-1, 1, 11)
        vals = np.array([transverse_limit(z, sc.T1) for z in zs])
        assert np.count_nonzero(np.abs(vals) < 1e-14) == \
            np.count_nonzero(np.abs(zs) < 1e-14)


class TestEnergySlope:
    def test_numeric_close_to_analytic(self, elastic_state):
        sc, F1, nu = elastic_state
        res = energy_slope(F1, sc.model, sc.T1)
        assert res.analytic == pytest.approx(3.0 / sc.T1)
        assert res.numeric == pytest.approx(res.analytic, rel=0.05)

    def test_normalisation_invariance(self, elastic_state):
        sc, F1, nu = elastic_state
        a = energy_slope(F1, sc.model, sc.T1, ExpWeight(a=0.1, s=0.5))
        b = energy_slope(F1, sc.model, sc.T1, ExpWeight(a=0.3, s=0.7))
        assert a.data.c0 != b.data.c0
        assert a.numeric == pytest.approx(b.numeric, rel=1e-12)

    def test_eigenvector_data(self, elastic_state):
        sc, F1, nu = elastic_state
        data = energy_eigenvector(F1, sc.T1)
        assert abs(quadrature(data.h0)) < 1e-6
        assert data.energy > 0
        # E(h0) = 2 d c0 T1^2 and D(F1, h0) = (3/2) d c0 T1
        assert data.energy == pytest.approx(2 * 2 * data.c0 * sc.T1 ** 2, rel=1e-3)
        pairing = sc.model.dissipation(F1, data.h0)
        assert pairing == pytest.approx(1.5 * 2 * data.c0 * sc.T1, rel=0.05)


class TestLambdaTwoInduction:
    def test_energy_branch_invariants(self, small_scenario):
        sc = small_scenario
        F1 = sc.equilibrium(1.0).profile
        h0 = heat_mode(F1)
        res = lambda2_induction(sc.omega, sc.operator(1.0), h0, 0.0, F1)
        assert res.solvability_defect < 1e-5
        assert res.singular_gap > 1e3
        assert res.value.real < 0
        assert abs(res.value.imag) < 1e-8 * abs(res.value)
        # first-order corrector is imaginary when h0 is real
        assert np.abs(res.h1.real).max() < 1e-8 * np.abs(res.h1.imag).max()
        # the heat-flux pairing is the same extraction
        assert res.q_pairing == pytest.approx(res.value, rel=1e-6)

    def test_ill_conditioned_guard(self, small_scenario):
        sc = small_scenario
        F1 = sc.equilibrium(1.0).profile
        h0 = heat_mode(F1)
        with pytest.raises(InternalConsistencyError):
            lambda2_induction(sc.omega, sc.operator(1.0), h0, 0.0, F1,
                              gap_threshold=0.0)

    def test_heat_mode_energy_free(self, small_scenario):
        sc = small_scenario
        F1 = sc.equilibrium(1.0).profile
        h0 = heat_mode(F1)
        energy = sc.grid.cell_volume * float((h0.values * sc.grid.speed_sq).sum())
        scale = sc.grid.cell_volume * float((np.abs(h0.values) * sc.grid.speed_sq).sum())
        assert abs(energy) < 1e-6 * scale  # quadrature-level cancellation
