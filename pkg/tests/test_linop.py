import numpy as np
import pytest
import scipy.linalg as sla

from conftest import compact_random_field
from granular_spectra import (Distribution, apply_linearized, assemble_fourier,
                              split_operator)
from granular_spectra.outputs import read_matrix_binary, write_matrix_binary


@pytest.fixture(scope="module")
def operator_setup(small_scenario):
    sc = small_scenario
    alpha = 0.99
    F = sc.equilibrium(alpha).profile
    A = sc.operator(alpha)
    return sc, alpha, F, A


class TestApplyLinearized:
    def test_linearity(self, operator_setup):
        sc, alpha, F, A = operator_setup
        g = sc.grid
        rng = np.random.default_rng(2)
        x = Distribution(g, rng.normal(size=g.size))
        y = Distribution(g, rng.normal(size=g.size))
        z = Distribution(g, 1.3 * x.values - 0.4 * y.values)
        lhs = apply_linearized(z, F, alpha, sc.model).values
        rhs = (1.3 * apply_linearized(x, F, alpha, sc.model).values
               - 0.4 * apply_linearized(y, F, alpha, sc.model).values)
        assert np.allclose(lhs, rhs, atol=1e-10 * np.abs(rhs).max())

    def test_matrix_matches_action(self, operator_setup):
        sc, alpha, F, A = operator_setup
        g = sc.grid
        rng = np.random.default_rng(sc.cfg.seed)
        scale = np.abs(A.matrix).max()
        for _ in range(5):
            x = Distribution(g, rng.normal(size=g.size))
            direct = apply_linearized(x, F, alpha, sc.model).values
            assert np.allclose(A.matrix @ x.values, direct, atol=1e-11 * scale)

    def test_equilibrium_near_null(self, operator_setup):
        sc, alpha, F, A = operator_setup
        out = A.matrix @ F.values
        scale = np.abs(np.diag(A.matrix) * F.values).sum()
        assert np.abs(out).sum() <= 0.05 * scale

    def test_momentum_mode_near_null(self, operator_setup):
        sc, alpha, F, A = operator_setup
        g = sc.grid
        for i in range(g.d):
            x = g.nodes[:, i] * F.values
            scale = np.abs(np.diag(A.matrix) * x).sum()
            assert np.abs(A.matrix @ x).sum() <= 0.08 * scale

    def test_energy_mode_elastic(self, small_scenario):
        from granular_spectra import moments
        sc = small_scenario
        F1 = sc.equilibrium(1.0).profile
        A1 = sc.operator(1.0)
        Tg = moments(F1).temperature
        x = (sc.grid.speed_sq - 2 * Tg) * F1.values
        scale = np.abs(np.diag(A1.matrix) * x).sum()
        assert np.abs(A1.matrix @ x).sum() <= 0.15 * scale

    def test_grid_mismatch_rejected(self, operator_setup):
        from granular_spectra import build_grid
        sc, alpha, F, A = operator_setup
        other = build_grid(2, 1.0, 8)
        bad = Distribution(other, np.zeros(other.size))
        with pytest.raises(ValueError):
            apply_linearized(bad, F, alpha, sc.model)


class TestConservationFunctionals:
    def test_mass_and_momentum_rows(self, operator_setup):
        # tested on a field supported where the equilibrium lives, so that
        # the only defect is the (tiny) deposition leakage
        sc, alpha, F, A = operator_setup
        g = sc.grid
        f = compact_random_field(g, seed=4, rc_fraction=0.7) * F.values
        out = A.matrix @ f
        scale = np.abs(np.diag(A.matrix) * f).sum()
        assert abs(out.sum()) * g.cell_volume <= 1e-8 * scale * g.cell_volume
        mom = (out[:, None] * g.nodes).sum(0)
        assert np.all(np.abs(mom) <= 1e-8 * scale * g.L)

    def test_kernel_dimension_elastic(self, small_scenario):
        sc = small_scenario
        A1 = sc.operator(1.0)
        svals = np.linalg.svd(A1.matrix, compute_uv=False)
        gap = sc.spectrum_at_zero(1.0).gap
        delta = gap / 10.0
        k = sc.grid.d + 2
        assert np.all(svals[-k:] < delta / 10.0)
        assert svals[-k - 1] > delta


class TestFourierFamily:
    def test_zero_frequency_identity(self, operator_setup):
        sc, alpha, F, A = operator_setup
        B = assemble_fourier(A, np.zeros(2))
        assert np.allclose(B.matrix, A.matrix)

    def test_conjugation(self, operator_setup):
        sc, alpha, F, A = operator_setup
        gamma = np.array([0.11, -0.07])
        Bp = assemble_fourier(A, gamma)
        Bm = assemble_fourier(A, -gamma)
        assert np.array_equal(Bm.matrix, np.conj(Bp.matrix))

    def test_only_diagonal_shifts(self, operator_setup):
        sc, alpha, F, A = operator_setup
        B = assemble_fourier(A, np.array([0.2, 0.05]))
        off = ~np.eye(A.n, dtype=bool)
        assert np.array_equal(B.matrix[off], A.matrix[off].astype(complex))

    def test_eigenvalues_conjugate_multisets(self, operator_setup):
        sc, alpha, F, A = operator_setup
        gamma = np.array([0.15, 0.0])
        ev_p = np.sort_complex(sla.eigvals(assemble_fourier(A, gamma).matrix))
        ev_m = np.sort_complex(sla.eigvals(assemble_fourier(A, -gamma).matrix))
        scale = np.abs(ev_p).max()
        assert np.allclose(np.sort_complex(np.conj(ev_m)), ev_p,
                           atol=1e-9 * scale)


class TestSplitOperator:
    def test_reconstruction(self, operator_setup):
        sc, alpha, F, A = operator_setup
        gamma = np.array([0.1, 0.0])
        split = split_operator(A, F, alpha, gamma, sc.model)
        full = assemble_fourier(A, gamma).matrix
        assert split.reconstruction_error(full) <= 1e-12

    def test_local_part_spectrum_bound(self, operator_setup):
        sc, alpha, F, A = operator_setup
        split = split_operator(A, F, alpha, np.zeros(2), sc.model)
        local = split.local
        assert np.allclose(local, local.T)
        nu_min = sc.model.loss_potential(F).values.min()
        evs = np.linalg.eigvalsh(local)
        assert evs.max() <= -0.99 * nu_min


class TestMatrixExport:
    def test_real_roundtrip(self, operator_setup, tmp_path):
        sc, alpha, F, A = operator_setup
        p = write_matrix_binary(tmp_path / "op.bin", A)
        back = read_matrix_binary(p)
        assert np.array_equal(back, A.matrix)

    def test_complex_roundtrip(self, operator_setup, tmp_path):
        sc, alpha, F, A = operator_setup
        B = assemble_fourier(A, np.array([0.07, 0.02]))
        p = write_matrix_binary(tmp_path / "opc.bin", B)
        back = read_matrix_binary(p)
        assert np.array_equal(back, B.matrix)
