"""Heated inelastic equilibria by stationary solve of Q_a(f,f) + (1-a) Lap f = 0.

The default path is a Newton iteration on the stationary equation with
mass and momentum pinned by a bordered system; it converges from the
Maxwellian predicted by the energy balance in a handful of steps.  An
explicit relaxation stepper is kept both as a fallback and as a cheap way
to polish or probe the dynamics; reaching tight stationarity with it is
impractical because the energy mode relaxes at the slow rate
3 (1 - a) / T1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .collision import CollisionModel, CrossSection, SphereQuadrature
from .velocity_grid import (Distribution, GridSpec, MacroFields, build_grid,
                            laplacian, laplacian_matrix, maxwellian, moments,
                            quadrature)


def unit_gaussian_third_moment(d: int, grid: GridSpec | None = None) -> float:
    """Midpoint value of int M_{1,0,1} |v|^3 dv.

    Uses `grid` when it can resolve the unit-temperature Maxwellian
    (L >= 6 and h <= 0.6), otherwise an internal reference box.
    """
    if grid is None or grid.L < 6.0 or grid.h > 0.6:
        grid = build_grid(d, 8.0, 32)
    m = maxwellian(grid, 1.0, np.zeros(d), 1.0)
    speed3 = grid.speed_sq ** 1.5
    return grid.cell_volume * float((m.values * speed3).sum())


def elastic_temperature(d: int, b: CrossSection | None = None,
                        quad: SphereQuadrature | None = None,
                        grid: GridSpec | None = None) -> float:
    """Quasi-elastic equilibrium temperature
    T1 = (1/2) d^(2/3) b1^(-2/3) (int M_{1,0,1} |v|^3)^(-2/3)."""
    from .collision import angular_momentum_b1
    b = b or CrossSection.constant(1.0)
    quad = quad or SphereQuadrature.default(d)
    b1 = angular_momentum_b1(b, quad)
    m3 = unit_gaussian_third_moment(d, grid)
    return 0.5 * d ** (2.0 / 3.0) * b1 ** (-2.0 / 3.0) * m3 ** (-2.0 / 3.0)


def elastic_equilibrium(grid: GridSpec, b: CrossSection | None = None,
                        quad: SphereQuadrature | None = None) -> Distribution:
    """Maxwellian of unit mass, zero momentum and temperature T1."""
    T1 = elastic_temperature(grid.d, b, quad, grid)
    return maxwellian(grid, 1.0, np.zeros(grid.d), T1)


def balance_residual(F: Distribution, alpha: float, model: CollisionModel) -> float:
    """|(1 + a) D(F, F) - 2 d|, zero at the heated stationary state."""
    return abs((1.0 + alpha) * model.dissipation(F, F) - 2.0 * F.grid.d)


@dataclass
class EquilibriumResult:
    profile: Distribution
    residual_norm: float
    iterations: int
    balance: float
    macro: MacroFields
    converged: bool
    clipped_mass: float = 0.0
    method: str = "newton"
    history: list = field(default_factory=list)
    leakage: float = 0.0


def _stationary_residual(model: CollisionModel, f: Distribution, alpha: float):
    Q = model.collision_apply(f, f, alpha)
    vals = Q.values + (1.0 - alpha) * laplacian(f).values
    return vals


def _recenter(f: Distribution) -> Distribution:
    """Translate the field so its mean velocity vanishes (multilinear shift).

    Shift-based recentring keeps the profile nonnegative, unlike a
    multiplicative linear correction.
    """
    g = f.grid
    mom = moments(f)
    if not np.all(np.isfinite(mom.momentum)):
        return f
    shift = mom.momentum / g.h
    cube = f.values.reshape((g.N,) * g.d)
    out = ndimage.shift(cube, -shift, order=1, mode="constant", cval=0.0)
    return Distribution(g, out.ravel())


def relax_step(model: CollisionModel, f: Distribution, alpha: float, dt: float):
    """One explicit Euler step with renormalisation; returns (f_new, clip_mass)."""
    vals = f.values + dt * _stationary_residual(model, f, alpha)
    clipped = -vals[vals < 0].sum() * f.grid.cell_volume
    vals = np.maximum(vals, 0.0)
    out = Distribution(f.grid, vals)
    out = _recenter(out)
    m = quadrature(out)
    out.values /= m
    return out, float(clipped)


def default_timestep(model: CollisionModel, f: Distribution, alpha: float) -> float:
    """0.3 over the stiffest local rate: the collision frequency plus the
    diffusive rate (1-a) 4d / h^2 of the heat-bath term."""
    nu_max = float(model.loss_potential(f).values.max())
    diff = (1.0 - alpha) * 4.0 * f.grid.d / f.grid.h ** 2
    return 0.3 / (nu_max + diff)


def _solve_newton(model: CollisionModel, alpha: float, T_init: float,
                  tol: float, max_newton: int):
    grid = model.grid
    n = grid.size
    lap = laplacian_matrix(grid)
    lossmat = model.loss_matrix()
    C = np.vstack([np.ones(n), grid.nodes.T]) * grid.cell_volume
    f = maxwellian(grid, 1.0, np.zeros(grid.d), T_init).values
    history = []
    leak = 0.0
    for it in range(max_newton):
        F = Distribution(grid, f)
        Gmat, leak = model.gain_matrix(F, alpha)
        nu = lossmat @ f
        R = Gmat @ f - f * nu + (1.0 - alpha) * (lap @ f)
        rnorm = grid.cell_volume * float(np.abs(R).sum())
        history.append(rnorm)
        if rnorm <= tol:
            return f, history, leak, True
        J = 2.0 * Gmat - np.diag(nu) - f[:, None] * lossmat + (1.0 - alpha) * lap
        nb = n + C.shape[0]
        Mb = np.zeros((nb, nb))
        Mb[:n, :n] = J
        Mb[:n, n:] = C.T
        Mb[n:, :n] = C
        rhs = np.zeros(nb)
        rhs[:n] = -R
        try:
            delta = np.linalg.solve(Mb, rhs)[:n]
        except np.linalg.LinAlgError:
            return f, history, leak, False
        # halve the step while the residual grows (scan evaluation is cheap
        # next to the Jacobian assembly)
        step = 1.0
        fn = f + delta
        for _ in range(6):
            rn_new = grid.cell_volume * float(np.abs(
                _stationary_residual(model, Distribution(grid, fn), alpha)).sum())
            if rn_new < rnorm or step <= 1.0 / 32.0:
                break
            step *= 0.5
            fn = f + step * delta
        f = fn
    F = Distribution(grid, f)
    R = _stationary_residual(model, F, alpha)
    rnorm = grid.cell_volume * float(np.abs(R).sum())
    history.append(rnorm)
    return f, history, leak, rnorm <= tol


def solve_equilibrium(alpha: float, grid: GridSpec,
                      b: CrossSection | None = None,
                      quad: SphereQuadrature | None = None,
                      dt: float | None = None,
                      tol: float = 1e-6,
                      max_iter: int = 200_000,
                      method: str = "newton",
                      max_newton: int = 25,
                      model: CollisionModel | None = None) -> EquilibriumResult:
    """Unit-mass, zero-momentum equilibrium of the heated operator.

    alpha = 1 returns the Maxwellian at temperature T1 directly: the
    heated problem degenerates there and every Maxwellian is stationary,
    with the temperature fixed by the energy-balance limit.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"restitution coefficient must lie in (0,1], got {alpha}")
    model = model or CollisionModel(grid, b, quad)
    T1 = elastic_temperature(grid.d, model.cross_section, model.quad, grid)
    if alpha == 1.0:
        F = maxwellian(grid, 1.0, np.zeros(grid.d), T1)
        R = _stationary_residual(model, F, alpha)
        return EquilibriumResult(
            profile=F, residual_norm=grid.cell_volume * float(np.abs(R).sum()),
            iterations=0, balance=balance_residual(F, alpha, model),
            macro=moments(F), converged=True, method="maxwellian-limit")

    # temperature predicted by the energy balance; the shape correction is O(1-a)
    T_init = T1 * (2.0 / (1.0 + alpha)) ** (2.0 / 3.0)
    clipped = 0.0
    if method == "newton":
        f, history, leak, ok = _solve_newton(model, alpha, T_init, tol, max_newton)
        iterations = len(history) - 1
    elif method == "explicit":
        F = maxwellian(grid, 1.0, np.zeros(grid.d), T_init)
        history = []
        leak = 0.0
        worse = 0
        ok = False
        for it in range(max_iter):
            step = dt if dt is not None else default_timestep(model, F, alpha)
            F, c = relax_step(model, F, alpha, step)
            clipped = max(clipped, c)
            leak = model.last_gain_leakage
            rnorm = grid.cell_volume * float(
                np.abs(_stationary_residual(model, F, alpha)).sum())
            history.append(rnorm)
            if rnorm <= tol:
                ok = True
                break
            if len(history) > 1 and rnorm > history[-2]:
                worse += 1
                if worse > 50:
                    warnings.warn("stationary residual has grown for more than 50 "
                                  "consecutive steps", stacklevel=2)
                    worse = 0
            else:
                worse = 0
        f = F.values
        iterations = len(history)
    else:
        raise ValueError(f"unknown solver method {method!r}")

    # final positivity cleanup; the clipped mass must stay tiny
    neg = -f[f < 0].sum() * grid.cell_volume
    clipped = max(clipped, float(neg))
    f = np.maximum(f, 0.0)
    F = Distribution(grid, f / (grid.cell_volume * f.sum()))
    R = _stationary_residual(model, F, alpha)
    rnorm = grid.cell_volume * float(np.abs(R).sum())
    if clipped > 1e-8:
        warnings.warn(f"clipped negative mass {clipped:.2e} exceeds 1e-8", stacklevel=2)
    ok = ok and rnorm <= tol
    if not ok:
        warnings.warn(f"equilibrium solve did not reach tol={tol:.1e}; "
                      f"final residual {rnorm:.2e}", stacklevel=2)
    return EquilibriumResult(
        profile=F, residual_norm=rnorm, iterations=iterations,
        balance=balance_residual(F, alpha, model), macro=moments(F),
        converged=ok, clipped_mass=clipped, method=method, history=history,
        leakage=leak)
