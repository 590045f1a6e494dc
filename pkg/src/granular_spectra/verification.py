"""Acceptance checks for the whole pipeline at the configured scale.

Each criterion is evaluated at a fixed tolerance and reports the measured
numbers; `run_all` returns the list of results plus the scenario so that
callers (CLI and test-suite) can reuse the cached stages.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .collision import CollisionModel
from .config import RunConfig
from .pipeline import Scenario
from .spectrum import full_spectrum, hydrodynamic_set
from .velocity_grid import Distribution, build_grid, maxwellian, quadrature


@dataclass
class CriterionResult:
    num: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0

    @property
    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.num:2d} {self.name}: {self.detail} ({self.elapsed:.1f}s)"


def _smooth_compact_field(grid, seed: int) -> Distribution:
    """Random smooth field, exactly zero near the boundary so that every
    post-collisional deposit lands inside the box (zero leakage)."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(grid.speed_sq)
    rc = 0.97 * (grid.L - 2.0 * grid.h) / np.sqrt(2.0)
    chi = np.zeros(grid.size)
    inside = r < rc
    chi[inside] = np.exp(1.0 - 1.0 / (1.0 - (r[inside] / rc) ** 2))
    mod = np.ones(grid.size)
    for _ in range(3):
        w = rng.normal(scale=1.5, size=grid.d)
        phase = rng.uniform(0, 2 * np.pi)
        mod += 0.5 * rng.uniform(-1, 1) * np.cos(grid.nodes @ w + phase)
    return Distribution(grid, chi * mod)


def run_all(cfg: RunConfig, scenario: Scenario | None = None,
            progress=None) -> tuple[list[CriterionResult], Scenario]:
    t_total = time.perf_counter()
    sc = scenario or Scenario(cfg)
    d = cfg.d
    results: list[CriterionResult] = []

    def record(num, name, passed, detail, t0):
        res = CriterionResult(num, name, bool(passed), detail,
                              time.perf_counter() - t0)
        results.append(res)
        if progress:
            progress(res.line)

    # unit-temperature box shared by the two microscopic-identity checks
    t0 = time.perf_counter()
    grid_c = build_grid(d, cfg.box_sigmas, cfg.N)
    model_c = CollisionModel(grid_c, sc.cross_section, sc.quad)

    # 1 -- conservation of mass and momentum, exact by deposition
    f = _smooth_compact_field(grid_c, cfg.seed)
    fabs = Distribution(grid_c, np.abs(f.values))
    scale = quadrature(Distribution(grid_c, np.abs(
        fabs.values * model_c.loss_potential(fabs).values)))
    Q = model_c.collision_apply(f, f, 0.95)
    mass_defect = abs(quadrature(Q))
    mom_defect = np.abs(grid_c.cell_volume
                        * (Q.values[:, None] * grid_c.nodes).sum(0)).max()
    tol1 = 1e-12 * scale
    record(1, "conservation",
           mass_defect <= tol1 and mom_defect <= tol1 * max(1.0, grid_c.L),
           f"|mass|={mass_defect:.2e} |mom|={mom_defect:.2e} vs {tol1:.2e}", t0)

    # 2 -- energy identity against the dissipation functional
    t0 = time.perf_counter()
    m1 = maxwellian(grid_c, 1.0, np.zeros(d), 1.0)
    Dff = model_c.dissipation(m1, m1)
    vsq = Distribution(grid_c, grid_c.speed_sq)
    ok2 = True
    msgs = []
    for alpha in (0.9, 0.99):
        sig = (1.0 - alpha ** 2) * Dff
        eQ = quadrature(Distribution(
            grid_c, model_c.collision_apply(m1, m1, alpha).values * grid_c.speed_sq))
        wk = model_c.weak_probe(m1, m1, vsq, alpha)
        rel_q = abs(eQ + sig) / sig
        rel_w = abs(wk + sig) / sig
        ok2 &= rel_q <= 0.02 and rel_w <= 0.02
        msgs.append(f"a={alpha}: strong {rel_q:.1e}, weak {rel_w:.1e}")
    record(2, "energy identity", ok2, "; ".join(msgs) + " vs 2e-2", t0)

    # 3 -- balance equation at alpha = 0.99 within its runtime budget
    t0 = time.perf_counter()
    eq99 = sc.equilibrium(0.99)
    dt3 = time.perf_counter() - t0
    rel3 = eq99.balance / (2.0 * d)
    record(3, "balance equation", rel3 <= 0.05 and dt3 <= 120.0,
           f"|(1+a)D-2d|/2d={rel3:.2e} vs 5e-2, {dt3:.1f}s vs 120s", t0)

    # 4 -- quasi-elastic temperature, error shrinking with alpha -> 1
    t0 = time.perf_counter()
    errs = {}
    for alpha in (0.95, 0.97, 0.99):
        Teq = sc.equilibrium(alpha).macro.temperature
        errs[alpha] = abs(Teq - sc.T1) / sc.T1
    mono = errs[0.95] > errs[0.97] > errs[0.99]
    record(4, "quasi-elastic temperature", errs[0.99] <= 0.10 and mono,
           f"rel err {errs[0.99]:.2e} vs 1e-1 at a=0.99; "
           f"monotone {errs[0.95]:.2e}>{errs[0.97]:.2e}>{errs[0.99]:.2e}", t0)

    # 5 -- kernel dimension and spectral gap of the elastic operator
    t0 = time.perf_counter()
    op1 = sc.operator(1.0)
    t_eig = time.perf_counter()
    pairs = full_spectrum(op1)
    dt_eig = time.perf_counter() - t_eig
    summ = hydrodynamic_set(pairs, d, alpha=1.0, rho=0.0)
    sc._spectra0[1.0] = summ
    lam_bar = summ.gap
    hydro_ok = all(abs(p.value) <= lam_bar / 10.0 for p in summ.hydro)
    rest_ok = max(p.value.real for p in pairs[d + 2:]) <= -lam_bar * (1 - 1e-12)
    record(5, "kernel dimension",
           hydro_ok and rest_ok and lam_bar > 0 and dt_eig <= 60.0,
           f"gap={lam_bar:.3f}, max|hydro|={max(abs(p.value) for p in summ.hydro):.2e} "
           f"vs gap/10={lam_bar/10:.2e}, eig {dt_eig:.1f}s vs 60s", t0)

    # 6 -- acoustic first-order coefficient and shear suppression
    t0 = time.perf_counter()
    fits = sc.fits(1.0)
    c = sc.sound
    err_p = abs(fits[1].lambda1 - 1j * c) / c
    err_m = abs(fits[-1].lambda1 + 1j * c) / c
    shear_max = max(abs(fits[j].lambda1) for j in fits if j >= 2) / c
    record(6, "acoustic coefficient",
           err_p <= 0.05 and err_m <= 0.05 and shear_max <= 0.05,
           f"acoustic rel err {err_p:.2e}/{err_m:.2e} vs 5e-2, "
           f"shear |l1|/c={shear_max:.2e}", t0)

    # 7 -- energy slope in the inelasticity
    t0 = time.perf_counter()
    e1_target = 3.0 / sc.T1
    e1_fit = fits[0].e1
    slope = sc.energy_slope_result()
    rel_fit = abs(e1_fit - e1_target) / e1_target
    rel_num = abs(slope.numeric - e1_target) / e1_target
    record(7, "energy slope", rel_fit <= 0.10 and rel_num <= 0.05,
           f"fit e1={e1_fit:.3f} rel {rel_fit:.2e} vs 1e-1; "
           f"numeric 4D/E rel {rel_num:.2e} vs 5e-2", t0)

    # 8 -- second-order damping and the recursion cross-check
    t0 = time.perf_counter()
    damped = all(f.lambda2.real < 0 for f in fits.values())
    ind = sc.induction_lambda2(1.0)
    rel_ind = abs(ind.value - fits[0].lambda2) / abs(fits[0].lambda2)
    record(8, "second-order damping", damped and rel_ind <= 0.10,
           f"lambda2={{{', '.join(f'{j}: {f.lambda2.real:.2e}' for j, f in sorted(fits.items()))}}}; "
           f"induction vs FD rel {rel_ind:.2e} vs 1e-1", t0)

    # 9 -- conjugate symmetry in rho and reality of the energy branch
    t0 = time.perf_counter()
    scale9 = summ.spectral_radius
    worst_sym = 0.0
    worst_im = 0.0
    for alpha in (1.0, 0.99):
        branches, _ = sc.branches(alpha)
        for br in branches:
            for s in br.samples:
                if s.rho > 0:
                    try:
                        sm = br.sample_at(-s.rho)
                    except KeyError:
                        continue
                    worst_sym = max(worst_sym, abs(sm.value - np.conj(s.value)))
            if br.label == 0:
                worst_im = max(worst_im,
                               max(abs(s.value.imag) for s in br.samples))
    tol9 = 1e-9 * scale9
    record(9, "symmetry and reality", worst_sym <= tol9 and worst_im <= tol9,
           f"max|l(-r)-conj l(r)|={worst_sym:.2e}, max|Im l0|={worst_im:.2e} "
           f"vs {tol9:.2e}", t0)

    # 10 -- left-half-plane confinement over the quasi-elastic sweep
    t0 = time.perf_counter()
    max_re = -np.inf
    n_pts = 0
    for alpha in sorted(a for a in set(cfg.alphas) | {1.0, 0.99} if a >= 0.97):
        _, summaries = sc.branches(alpha)
        for s in summaries:
            if 0.0 <= s.rho <= cfg.rho_max:
                max_re = max(max_re, s.max_hydro_real)
                n_pts += 1
    record(10, "left-half-plane confinement", max_re <= 1e-6,
           f"max Re over {n_pts} sweep points = {max_re:.2e} vs 1e-6", t0)

    # 11 -- limit determinant algebra
    t0 = time.perf_counter()
    rep = sc.dispersion_report()
    record(11, "determinant algebra",
           rep["det_vs_cubic_max_rel_err"] <= 1e-12
           and rep["root_residual"] <= 1e-12,
           f"det vs cubic {rep['det_vs_cubic_max_rel_err']:.2e}, "
           f"root residual {rep['root_residual']:.2e} vs 1e-12", t0)

    # 12 -- end-to-end runtime
    total = time.perf_counter() - t_total
    record(12, "runtime", total <= 900.0, f"{total:.0f}s vs 900s", t_total)
    return results, sc
