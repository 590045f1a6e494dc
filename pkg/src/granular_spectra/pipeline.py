"""Scenario orchestration: one place that wires grid, collision model,
equilibria, operators, branch sweeps and fits together with caching."""

from __future__ import annotations

import numpy as np

from .collision import CollisionModel, CrossSection, SphereQuadrature
from .config import ConfigError, RunConfig
from .dispersion import (dispersion_roots, energy_slope, gram_limit, heat_mode,
                         lambda2_induction, sound_speed, c_nu, transverse_limit)
from .equilibrium import elastic_temperature, solve_equilibrium
from .linop import assemble_linearized
from .spectrum import (ExpansionFit, fit_expansion, full_spectrum,
                       hydrodynamic_set, track_branches)
from .velocity_grid import build_grid


def cross_section_from_label(label: str) -> CrossSection:
    kind, _, args = label.partition(":")
    try:
        if kind == "constant":
            return CrossSection.constant(float(args or "1.0"))
        if kind == "affine":
            c0, c1 = (float(x) for x in args.split(","))
            return CrossSection.affine(c0, c1)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad cross-section spec {label!r}: {exc}") from exc
    raise ConfigError(f"unknown cross-section kind {kind!r}")


class Scenario:
    """Lazy, cached realisation of one run configuration."""

    def __init__(self, cfg: RunConfig):
        cfg = self.cfg = cfg.validate()
        self.cross_section = cross_section_from_label(cfg.cross_section)
        M = None if cfg.sphere_points == "auto" else int(cfg.sphere_points)
        self.quad = SphereQuadrature.default(cfg.d, M)
        self.T1 = elastic_temperature(cfg.d, self.cross_section, self.quad)
        sigma = np.sqrt(self.T1)
        self.L = cfg.box_sigmas * sigma if cfg.L == "auto" else float(cfg.L)
        self.grid = build_grid(cfg.d, self.L, cfg.N)
        self.model = CollisionModel(self.grid, self.cross_section, self.quad)
        self.omega = np.asarray(cfg.omega, dtype=float)
        self.rho0 = 0.02 * sigma if cfg.rho0 == "auto" else float(cfg.rho0)
        self.rho2 = 0.12 * sigma if cfg.rho2 == "auto" else float(cfg.rho2)
        self.sound = sound_speed(cfg.d, self.T1)
        self._equilibria = {}
        self._operators = {}
        self._branches = {}
        self._spectra0 = {}

    # ---------------- cached stages ----------------

    def equilibrium(self, alpha: float):
        if alpha not in self._equilibria:
            dt = None if self.cfg.dt == "auto" else float(self.cfg.dt)
            self._equilibria[alpha] = solve_equilibrium(
                alpha, self.grid, model=self.model, dt=dt, tol=self.cfg.tol,
                max_iter=self.cfg.max_iter, method=self.cfg.solver,
                max_newton=self.cfg.newton_max)
        return self._equilibria[alpha]

    def operator(self, alpha: float):
        if alpha not in self._operators:
            F = self.equilibrium(alpha).profile
            self._operators[alpha] = assemble_linearized(F, alpha, self.model)
        return self._operators[alpha]

    def spectrum_at_zero(self, alpha: float):
        if alpha not in self._spectra0:
            pairs = full_spectrum(self.operator(alpha))
            self._spectra0[alpha] = hydrodynamic_set(pairs, self.cfg.d,
                                                     alpha=alpha, rho=0.0)
        return self._spectra0[alpha]

    def fit_rhos(self) -> np.ndarray:
        base = np.array([self.rho0, 2 * self.rho0, self.rho2, 2 * self.rho2])
        return np.unique(np.concatenate([[0.0], base, -base]))

    def sweep_rhos(self, signed: bool = False) -> np.ndarray:
        pos = np.linspace(0.0, self.cfg.rho_max, self.cfg.rho_steps + 1)
        return np.unique(np.concatenate([pos, -pos])) if signed else pos

    def branches(self, alpha: float, with_sweep: bool = True,
                 signed_sweep: bool = False):
        key = (alpha, with_sweep, signed_sweep)
        if key not in self._branches:
            rhos = self.fit_rhos()
            if with_sweep:
                rhos = np.unique(np.concatenate([rhos, self.sweep_rhos(signed_sweep)]))
            self._branches[key] = track_branches(
                self.operator(alpha), self.omega, rhos, workers=self.cfg.threads)
        return self._branches[key]

    # ---------------- derived quantities ----------------

    def energy_lambda0(self, alpha: float) -> complex:
        """Energy eigenvalue at rho = 0: the hydrodynamic eigenvalue of
        most negative real part (mass and momentum sit at zero exactly)."""
        summ = self.spectrum_at_zero(alpha)
        return min((p.value for p in summ.hydro), key=lambda z: z.real)

    def alpha_samples(self):
        return [(a, self.energy_lambda0(a)) for a in sorted(self.cfg.alphas)]

    def fits(self, alpha: float = 1.0) -> dict[int, ExpansionFit]:
        branches, _ = self.branches(alpha)
        out = {}
        for br in branches:
            alpha_samples = self.alpha_samples() if br.label == 0 else None
            out[br.label] = fit_expansion(br, self.rho0, alpha_samples)
            # second-order coefficient from the wider stencil, where the
            # curvature dominates the near-kernel noise floor
            wide = fit_expansion(br, self.rho2)
            out[br.label].lambda2 = wide.lambda2
            out[br.label].lambda2_spread = wide.lambda2_spread
        return out

    def induction_lambda2(self, alpha: float = 1.0):
        F1 = self.equilibrium(alpha).profile
        h0 = heat_mode(F1)
        return lambda2_induction(self.omega, self.operator(alpha), h0, 0.0, F1)

    def energy_slope_result(self):
        F1 = self.equilibrium(1.0).profile
        return energy_slope(F1, self.model, self.T1)

    def dispersion_report(self) -> dict:
        F1 = self.equilibrium(1.0).profile
        nu = self.model.loss_potential(F1)
        cn = c_nu(F1, nu)
        roots = dispersion_roots(self.cfg.d, self.T1)
        rng = np.random.default_rng(self.cfg.seed)
        zs = rng.normal(size=100) + 1j * rng.normal(size=100)
        max_rel = 0.0
        for z in zs:
            _, det, closed = gram_limit(z, self.cfg.d, self.T1, cn)
            scale = max(abs(det), abs(closed), self.T1 ** 4)
            max_rel = max(max_rel, abs(det - closed) / scale)
        slope = self.energy_slope_result()
        lead = 2.0 * self.cfg.d * self.T1 ** 3
        root_resid = max(abs(lead * (z * z + (self.cfg.d + 2) * self.T1 / self.cfg.d) * z)
                         for z in roots.as_array) / lead
        return {
            "T1": self.T1,
            "sound_speed": self.sound,
            "c_nu": cn,
            "roots": {"z_minus": roots.z_minus, "z_zero": roots.z_zero,
                      "z_plus": roots.z_plus},
            "root_residual": root_resid,
            "det_vs_cubic_max_rel_err": max_rel,
            "transverse_root": 0.0,
            "transverse_at_unit": transverse_limit(1.0, self.T1),
            "e1_analytic": slope.analytic,
            "e1_numeric": slope.numeric,
            "e1_rel_err": abs(slope.numeric - slope.analytic) / slope.analytic,
        }

    def clustering_table(self, margin: float = 1e-9) -> list[dict]:
        """Per alpha: closest approach of the leading hydrodynamic
        eigenvalue to the imaginary axis over the rho sweep, and the
        smallest rho at which every branch is strictly damped."""
        rows = []
        for alpha in sorted(self.cfg.alphas):
            _, summaries = self.branches(alpha)
            sweep = [s for s in summaries if s.rho >= 0]
            sweep.sort(key=lambda s: s.rho)
            dist = min(abs(s.max_hydro_real) for s in sweep)
            rho_damped = next((s.rho for s in sweep if s.max_hydro_real < -margin),
                              np.nan)
            rows.append({
                "alpha": alpha,
                "min_distance_to_zero": dist,
                "first_damped_rho": rho_damped,
                "max_real_over_sweep": max(s.max_hydro_real for s in sweep),
                "energy_slope_term": 3.0 / self.T1 * (1.0 - alpha),
            })
        return rows
