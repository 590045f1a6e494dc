import json

import numpy as np
import pytest

from granular_spectra import RunConfig
from granular_spectra.cli import main
from granular_spectra.config import ConfigError
from granular_spectra.outputs import read_profile_binary

TINY = [
    "d = 2",
    "N = 8",
    "alphas = 1.0,0.99",
    "rho_steps = 2",
    "rho_max = 0.2",
    "seed = 7",
]


@pytest.fixture()
def tiny_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("\n".join(TINY) + "\n")
    return path


class TestConfig:
    def test_file_parsing_and_comments(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# a comment\nN = 16  # trailing\nalphas = 0.95, 0.99\n")
        cfg = RunConfig.from_file(p)
        assert cfg.N == 16
        assert cfg.alphas == (0.95, 0.99)

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("frobnicate = 1\n")
        with pytest.raises(ConfigError):
            RunConfig.from_file(p)

    def test_alpha_out_of_range(self):
        with pytest.raises(ConfigError):
            RunConfig(alphas=(1.2,)).validate()
        with pytest.raises(ConfigError):
            RunConfig(alphas=(0.0,)).validate()

    def test_overrides(self):
        cfg = RunConfig().validate().with_overrides(["N=16", "omega=0,1"])
        assert cfg.N == 16
        assert np.allclose(cfg.omega, (0.0, 1.0))

    def test_omega_normalised(self):
        cfg = RunConfig(omega=(3.0, 4.0)).validate()
        assert np.isclose(np.linalg.norm(cfg.omega), 1.0)

    def test_hash_ignores_execution_fields(self):
        a = RunConfig().validate()
        b = RunConfig(threads=4, plots=False).validate()
        assert a.config_hash == b.config_hash
        c = RunConfig(N=16).validate()
        assert a.config_hash != c.config_hash


class TestExitCodes:
    def test_missing_config_is_usage_error(self, tmp_path):
        code = main(["equilibrium", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_invalid_alpha_is_usage_error(self, tiny_config, tmp_path):
        code = main(["equilibrium", "--config", str(tiny_config),
                     "--set", "alphas=1.2", "--out", str(tmp_path / "o")])
        assert code == 2

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestEquilibriumCommand:
    def test_outputs(self, tiny_config, tmp_path):
        out = tmp_path / "eq"
        code = main(["equilibrium", "--config", str(tiny_config),
                     "--out", str(out), "--set", "plots=true"])
        assert code in (0, 3)  # N=8 may legitimately miss the tolerance
        csv = out / "profile_a1p0000.csv"
        assert csv.exists()
        header = csv.read_text().splitlines()
        assert header[0].startswith("# config_hash = ")
        assert header[2].split(",")[:2] == ["v1", "v2"]
        prof = read_profile_binary(out / "profile_a1p0000.bin")
        assert prof.grid.N == 8
        diag = json.loads((out / "equilibrium_a1p0000.json").read_text())
        assert "balance_residual" in diag and "meta" in diag
        assert (out / "profile_a1p0000.png").exists()

    def test_binary_roundtrip_values(self, tiny_config, tmp_path):
        out = tmp_path / "eq2"
        main(["equilibrium", "--config", str(tiny_config), "--out", str(out),
              "--set", "plots=false", "--set", "alphas=1.0"])
        prof = read_profile_binary(out / "profile_a1p0000.bin")
        import csv as csvmod
        with open(out / "profile_a1p0000.csv") as fh:
            rows = [r for r in csvmod.reader(
                line for line in fh if not line.startswith("#"))]
        vals = np.array([float(r[2]) for r in rows[1:]])
        assert np.array_equal(vals, prof.values)


class TestSpectrumCommand:
    def test_outputs_and_columns(self, tiny_config, tmp_path):
        out = tmp_path / "sp"
        code = main(["spectrum", "--config", str(tiny_config), "--out", str(out)])
        assert code == 0
        lines = (out / "branches.csv").read_text().splitlines()
        assert lines[2] == "j,omega_x,omega_y,rho,alpha,re_lambda,im_lambda,residual"
        fits = json.loads((out / "fits.json").read_text())
        assert set(fits["branches"]) >= {"-1", "0", "1", "2"}
        tgt = fits["branches"]["1"]["lambda1_target"]
        assert tgt["im"] == pytest.approx(fits["sound_speed"])
        assert (out / "dispersion_curves.png").exists()

    def test_symmetry_rows(self, tiny_config, tmp_path):
        out = tmp_path / "sp2"
        main(["spectrum", "--config", str(tiny_config), "--out", str(out),
              "--set", "plots=false"])
        import csv as csvmod
        with open(out / "branches.csv") as fh:
            rows = list(csvmod.DictReader(
                line for line in fh if not line.startswith("#")))
        by_key = {}
        for r in rows:
            key = (r["j"], float(r["alpha"]), float(r["rho"]))
            by_key[key] = complex(float(r["re_lambda"]), float(r["im_lambda"]))
        checked = 0
        for (j, a, rho), lam in by_key.items():
            if rho > 0 and (j, a, -rho) in by_key:
                assert by_key[(j, a, -rho)] == pytest.approx(np.conj(lam), abs=1e-8)
                checked += 1
        assert checked > 0


class TestDispersionCommand:
    def test_report(self, tiny_config, tmp_path):
        out = tmp_path / "dp"
        code = main(["dispersion", "--config", str(tiny_config), "--out", str(out)])
        assert code == 0
        rep = json.loads((out / "dispersion_report.json").read_text())
        assert rep["det_vs_cubic_max_rel_err"] <= 1e-12
        assert rep["roots"]["z_zero"] == {"im": 0.0, "re": 0.0}
        assert rep["e1_analytic"] == pytest.approx(3.0 / rep["T1"])
        assert (out / "dispersion_roots.png").exists()


class TestClusteringScan:
    def test_table(self, tiny_config, tmp_path):
        out = tmp_path / "cl"
        code = main(["clustering-scan", "--config", str(tiny_config),
                     "--out", str(out), "--set", "plots=false"])
        assert code == 0
        data = json.loads((out / "clustering_scan.json").read_text())
        rows = data["rows"]
        assert [r["alpha"] for r in rows] == [0.99, 1.0]
        for r in rows:
            # loose stability bound at this deliberately tiny grid; the
            # desk-scale threshold lives in the acceptance suite
            assert r["max_real_over_sweep"] < 1e-2
            assert np.isfinite(r["first_damped_rho"]) and r["first_damped_rho"] >= 0
        assert rows[1]["energy_slope_term"] == 0.0


class TestDeterminism:
    def test_identical_bytes(self, tiny_config, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            main(["equilibrium", "--config", str(tiny_config), "--out", str(out),
                  "--set", "plots=false", "--set", "alphas=0.99"])
            outs.append((out / "profile_a0p9900.csv").read_bytes())
        assert outs[0] == outs[1]


class TestVerifySubcommand:
    def test_tiny_grid_degrades_gracefully(self, tiny_config, tmp_path):
        out = tmp_path / "vf"
        code = main(["verify", "--config", str(tiny_config), "--out", str(out),
                     "--set", "alphas=1.0,0.99,0.97,0.95"])
        assert code in (0, 1)  # failures are reported, not crashes
        rep = json.loads((out / "verify_report.json").read_text())
        assert len(rep["criteria"]) == 12
        assert all("detail" in c for c in rep["criteria"])
