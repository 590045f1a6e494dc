import numpy as np
import pytest

from granular_spectra import (CollisionModel, RunConfig, Scenario, build_grid,
                              maxwellian)


@pytest.fixture(scope="session")
def unit_model():
    """Unit-temperature box: d=2, L=7, N=24 with the default kernel."""
    grid = build_grid(2, 7.0, 24)
    return CollisionModel(grid)


@pytest.fixture(scope="session")
def unit_maxwellian(unit_model):
    return maxwellian(unit_model.grid, 1.0, np.zeros(2), 1.0)


@pytest.fixture(scope="session")
def small_scenario():
    """Small but spectrally usable pipeline (d=2, N=16)."""
    cfg = RunConfig(N=16, alphas=(1.0, 0.99, 0.97, 0.95), rho_steps=4)
    return Scenario(cfg)


def compact_random_field(grid, seed=0, rc_fraction=0.97):
    """Smooth random field, identically zero near the boundary so that all
    collision deposits stay inside the box."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(grid.speed_sq)
    rc = rc_fraction * (grid.L - 2.0 * grid.h) / np.sqrt(2.0)
    chi = np.zeros(grid.size)
    inside = r < rc
    chi[inside] = np.exp(1.0 - 1.0 / (1.0 - (r[inside] / rc) ** 2))
    mod = np.ones(grid.size)
    for _ in range(3):
        w = rng.normal(scale=1.5 / max(1.0, grid.L / 7.0), size=grid.d)
        mod += 0.5 * rng.uniform(-1, 1) * np.cos(grid.nodes @ w + rng.uniform(0, 7))
    return chi * mod
