"""Eigendecomposition, hydrodynamic branch continuation and expansion fits.

The d+2 eigenvalues of largest real part continue the kernel of the
elastic operator; they are followed in the Fourier frequency rho by
eigenvector-overlap matching, labelled j in {-1..d} (acoustic pair,
energy, shear) at the first step away from the degenerate point, and
their Taylor coefficients in rho and 1 - alpha are extracted with
Richardson-refined centred differences and least squares.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment

from .linop import LinearOperatorMatrix, assemble_fourier

RESIDUAL_TOL = 1e-8


class EigensolverError(RuntimeError):
    pass


@dataclass
class EigenPair:
    value: complex
    vector: NDArray
    residual: float


@dataclass
class SpectrumSummary:
    """Hydrodynamic cluster plus gap diagnostics for one operator."""

    hydro: list
    gap: float                 # distance from 0 to the next real part
    essential_proxy: float     # max real part among non-hydrodynamic eigenvalues
    separation_ok: bool
    separation: float
    alpha: float = np.nan
    rho: float = np.nan
    spectral_radius: float = np.nan

    @property
    def max_hydro_real(self) -> float:
        return max(p.value.real for p in self.hydro)


@dataclass
class BranchSample:
    rho: float
    alpha: float
    value: complex
    vector: NDArray
    residual: float
    overlap: float


@dataclass
class Branch:
    label: int
    omega: NDArray
    samples: list = field(default_factory=list)
    failed_at: float | None = None

    def sample_at(self, rho: float) -> BranchSample:
        for s in self.samples:
            if abs(s.rho - rho) <= 1e-12 * max(1.0, abs(rho)):
                return s
        raise KeyError(f"branch {self.label} has no sample at rho={rho}")

    @property
    def rhos(self) -> NDArray:
        return np.array([s.rho for s in self.samples])


@dataclass
class ExpansionFit:
    label: int
    lambda0: complex
    lambda1: complex            # d lambda / d rho at 0
    lambda2: complex            # coefficient of rho^2, (1/2) d2 lambda / d rho2
    e1: float = np.nan          # coefficient of -(1 - alpha)
    lambda1_spread: float = np.nan
    lambda2_spread: float = np.nan
    e1_residual: float = np.nan


def full_spectrum(A: LinearOperatorMatrix, residual_mode: str = "partial",
                  seed: int = 0) -> list[EigenPair]:
    """All eigenpairs sorted by descending real part.

    Eigenvectors carry unit quadrature-L2 norm and the phase convention
    that the largest-modulus component is real positive.  Residuals
    ||A x - l x||_2 / ||x||_2 are verified for every pair on small
    problems and for the leading pairs plus a random sample otherwise.
    """
    M = A.matrix
    if not np.all(np.isfinite(M)):
        raise EigensolverError("operator matrix contains non-finite entries")
    vals, vecs = sla.eig(M)
    order = np.argsort(-vals.real, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    n = M.shape[0]
    # normalisation and phase fix
    hscale = A.grid.cell_volume ** 0.5
    norms = np.linalg.norm(vecs, axis=0)
    vecs = vecs / (norms * hscale)
    idx_max = np.argmax(np.abs(vecs), axis=0)
    phases = vecs[idx_max, np.arange(n)]
    vecs = vecs * (np.abs(phases) / phases)

    if residual_mode == "none":
        check = np.array([], dtype=int)
    elif residual_mode == "full" or n <= 600:
        check = np.arange(n)
    else:
        lead = np.arange(min(2 * (A.grid.d + 2), n))
        rng = np.random.default_rng(seed)
        extra = rng.integers(0, n, size=8)
        check = np.unique(np.concatenate([lead, extra]))
    residuals = np.full(n, np.nan)
    if check.size:
        R = M @ vecs[:, check] - vecs[:, check] * vals[check]
        residuals[check] = np.linalg.norm(R, axis=0) / np.linalg.norm(vecs[:, check], axis=0)
        worst = float(np.nanmax(residuals[check]))
        if worst > RESIDUAL_TOL:
            raise EigensolverError(
                f"eigen residual {worst:.2e} exceeds {RESIDUAL_TOL:.1e} "
                f"(n={n}, alpha={A.alpha}, |gamma|={np.linalg.norm(A.gamma):.3g}, "
                f"max|A|={np.abs(M).max():.3g})")
    return [EigenPair(vals[i], vecs[:, i], float(residuals[i])) for i in range(n)]


def hydrodynamic_set(pairs: list[EigenPair], d: int,
                     alpha: float = np.nan, rho: float = np.nan) -> SpectrumSummary:
    """Top d+2 eigenvalues by real part with gap and separation diagnostics."""
    k = d + 2
    if len(pairs) <= k:
        raise ValueError("spectrum too small to split off a hydrodynamic set")
    hydro = pairs[:k]
    mu_bar = pairs[k].value.real
    gap = -mu_bar
    separation = min(p.value.real for p in hydro) - mu_bar
    ok = separation >= 0.5 * gap - 1e-12
    radius = max(abs(p.value) for p in pairs)
    return SpectrumSummary(hydro=hydro, gap=gap, essential_proxy=mu_bar,
                           separation_ok=ok, separation=separation,
                           alpha=alpha, rho=rho, spectral_radius=radius)


def _match(prev_vecs, prev_vals, new_vals, new_vecs):
    """Greedy-optimal assignment by eigenvector overlap; near-ties are
    broken by eigenvalue proximity through a small penalty."""
    ov = np.abs(prev_vecs.conj().T @ new_vecs)
    ov = ov / (np.linalg.norm(prev_vecs, axis=0)[:, None]
               * np.linalg.norm(new_vecs, axis=0)[None, :])
    scale = max(1e-30, np.abs(new_vals).max())
    dl = np.abs(prev_vals[:, None] - new_vals[None, :]) / scale
    rows, cols = linear_sum_assignment(-ov + 1e-6 * dl)
    return cols[np.argsort(rows)], ov


def _hydro_eigs(A0: LinearOperatorMatrix, rho: float, omega: NDArray, d: int):
    op = assemble_fourier(A0, rho * omega) if rho != 0.0 else A0
    pairs = full_spectrum(op)
    summ = hydrodynamic_set(pairs, d, alpha=A0.alpha, rho=rho)
    vals = np.array([p.value for p in summ.hydro])
    vecs = np.stack([p.vector for p in summ.hydro], axis=1)
    res = np.array([p.residual for p in summ.hydro])
    return vals, vecs, res, summ


def track_branches(A0: LinearOperatorMatrix, omega, rho_list,
                   overlap_min: float = 0.7,
                   workers: int = 1) -> tuple[list[Branch], list[SpectrumSummary]]:
    """Continuation of the d+2 hydrodynamic branches over a signed rho grid.

    rho_list must contain 0; continuation proceeds outward from 0 on each
    sign separately.  Labels are assigned at the first positive step:
    j = +-1 for the acoustic pair (sign of Im), j = 0 for the branch with
    the least transverse momentum content among the rest (energy), and
    j in {2..d} for the shear branches.  The matching from the degenerate
    rho = 0 cluster to the first step is exempt from the overlap-failure
    rule; afterwards an overlap below `overlap_min` freezes the branch and
    records the failure location.
    """
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    d = A0.grid.d
    rhos = np.unique(np.asarray(rho_list, dtype=float))
    if not np.any(rhos == 0.0):
        raise ValueError("rho grid must start at 0")
    pos = np.sort(rhos[rhos > 0])
    neg = -np.sort(-rhos[rhos < 0])

    cache = {}

    def solve(r):
        if r not in cache:
            cache[r] = _hydro_eigs(A0, r, omega, d)
        return cache[r]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(solve, rhos))

    vals0, vecs0, res0, summ0 = solve(0.0)
    summaries = [summ0]

    def continue_side(side_rhos):
        chains = [[BranchSample(0.0, A0.alpha, vals0[i], vecs0[:, i], res0[i], 1.0)]
                  for i in range(d + 2)]
        frozen = [None] * (d + 2)
        cur_vals, cur_vecs = vals0.copy(), vecs0.copy()
        for step, r in enumerate(side_rhos):
            vals, vecs, res, summ = solve(r)
            summaries.append(summ)
            assign, ov = _match(cur_vecs, cur_vals, vals, vecs)
            for i in range(d + 2):
                if frozen[i] is not None:
                    continue
                jm = assign[i]
                o = ov[i, jm]
                if step > 0 and o < overlap_min:
                    frozen[i] = r
                    continue
                chains[i].append(BranchSample(r, A0.alpha, vals[jm], vecs[:, jm],
                                              res[jm], float(o)))
                cur_vals[i] = vals[jm]
                cur_vecs[:, i] = vecs[:, jm]
        return chains, frozen

    chains_p, frozen_p = continue_side(pos)

    # label assignment at the first positive step
    first = [c[1] if len(c) > 1 else c[0] for c in chains_p]
    ims = np.array([s.value.imag for s in first])
    i_plus = int(np.argmax(ims))
    i_minus = int(np.argmin(ims))
    rest = [i for i in range(d + 2) if i not in (i_plus, i_minus)]
    hd = A0.grid.cell_volume

    def perp_momentum(x):
        p = hd * (x[:, None] * A0.grid.nodes).sum(axis=0)
        return float(np.linalg.norm(p - (p @ omega) * omega))

    perp = {i: perp_momentum(first[i].vector) for i in rest}
    order = sorted(rest, key=lambda i: perp[i])
    labels = {i_plus: 1, i_minus: -1, order[0]: 0}
    for k, i in enumerate(order[1:], start=2):
        labels[i] = k

    branches = {labels[i]: Branch(label=labels[i], omega=omega,
                                  samples=list(chains_p[i]),
                                  failed_at=frozen_p[i])
                for i in range(d + 2)}

    if neg.size:
        chains_n, frozen_n = continue_side(neg)
        # identify negative chains with labels through conjugate symmetry
        rm = neg[0]
        cost = np.zeros((d + 2, d + 2))
        for i in range(d + 2):
            sn = chains_n[i][1] if len(chains_n[i]) > 1 else chains_n[i][0]
            for j, br in branches.items():
                try:
                    sp = br.sample_at(rm if rm > 0 else -rm)
                except KeyError:
                    sp = br.samples[-1]
                ov = abs(np.vdot(np.conj(sn.vector), sp.vector)) / (
                    np.linalg.norm(sn.vector) * np.linalg.norm(sp.vector))
                lam_mismatch = abs(sn.value - np.conj(sp.value))
                cost[i, _label_index(j, d)] = -ov + lam_mismatch
        rows, cols = linear_sum_assignment(cost)
        for i, ci in zip(rows, cols):
            j = _index_label(ci, d)
            br = branches[j]
            br.samples = list(chains_n[i][1:])[::-1] + br.samples
            if frozen_n[i] is not None and br.failed_at is None:
                br.failed_at = frozen_n[i]

    out = [branches[j] for j in sorted(branches)]
    for br in out:
        br.samples.sort(key=lambda s: s.rho)
    return out, summaries


def _label_index(j: int, d: int) -> int:
    return j + 1  # -1..d -> 0..d+1


def _index_label(i: int, d: int) -> int:
    return i - 1


def fit_expansion(branch: Branch, rho0: float,
                  alpha_samples=None) -> ExpansionFit:
    """Richardson-refined derivative fits from samples at +-rho0, +-2 rho0.

    lambda1 and lambda2 come from centred first and second differences at
    the two stencil widths; the reported spreads are the |difference|
    between the two widths (an a-posteriori error estimate).  e1 is the
    coefficient of -(1 - alpha) in lambda(0, alpha), fitted by least
    squares with a quadratic correction term over `alpha_samples`, a
    sequence of (alpha, lambda0) pairs.
    """
    lam0 = branch.sample_at(0.0).value
    lp, lm = branch.sample_at(rho0).value, branch.sample_at(-rho0).value
    lp2, lm2 = branch.sample_at(2 * rho0).value, branch.sample_at(-2 * rho0).value
    D1a = (lp - lm) / (2 * rho0)
    D1b = (lp2 - lm2) / (4 * rho0)
    lambda1 = (4.0 * D1a - D1b) / 3.0
    D2a = (lp + lm - 2 * lam0) / rho0 ** 2
    D2b = (lp2 + lm2 - 2 * lam0) / (2 * rho0) ** 2
    lambda2 = 0.5 * (4.0 * D2a - D2b) / 3.0
    e1 = np.nan
    e1_res = np.nan
    if alpha_samples:
        s = np.array([1.0 - a for a, _ in alpha_samples])
        y = np.array([-lam.real for _, lam in alpha_samples])
        X = np.vstack([s, s * s]).T
        coef, res, *_ = np.linalg.lstsq(X, y, rcond=None)
        e1 = float(coef[0])
        e1_res = float(np.sqrt(res[0]) / max(np.abs(y).max(), 1e-300)) if res.size else 0.0
    return ExpansionFit(label=branch.label, lambda0=lam0, lambda1=lambda1,
                        lambda2=lambda2, e1=e1,
                        lambda1_spread=float(abs(D1a - D1b)),
                        lambda2_spread=float(abs(D2a - D2b) / 2),
                        e1_residual=e1_res)


def essential_bound_check(summaries: list[SpectrumSummary], nu0: float) -> dict:
    """Uniform left-half-plane bound for the non-hydrodynamic spectrum.

    Reports the fitted bound c = min(-essential_proxy) over the sweep,
    whether it stays positive, and whether it tracks the collision
    frequency lower bound nu0 within a factor of 4.
    """
    mus = np.array([s.essential_proxy for s in summaries])
    c = float(-mus.max())
    report = {
        "uniform_bound": c,
        "uniform_negative": bool(c > 0),
        "nu0": float(nu0),
        "tracks_nu0_factor4": bool(nu0 / 4.0 <= c <= 4.0 * nu0),
        "max_hydro_real": float(max(s.max_hydro_real for s in summaries)),
        "worst_separation": float(min(s.separation for s in summaries)),
        "points": [{"alpha": float(s.alpha), "rho": float(s.rho),
                    "gap": float(s.gap), "essential_proxy": float(s.essential_proxy),
                    "separation_ok": bool(s.separation_ok)} for s in summaries],
    }
    return report
