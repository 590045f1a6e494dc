"""Truncated uniform velocity grids and the field operations built on them.

The grid covers the box [-L, L)^d with N midpoint nodes per axis,
v = -L + (k + 1/2) h, h = 2L/N.  Midpoint nodes make the node set exactly
centro-symmetric (v is a node iff -v is a node, and 0 is never a node), so
quadrature of any odd function cancels to roundoff.  All integrals are
midpoint sums with the uniform weight h^d.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class GridSpec:
    """Uniform midpoint velocity grid on [-L, L)^d.

    Parameters
    ----------
    d : int
        Velocity dimension, 2 or 3.
    L : float
        Half-extent of the box.
    N : int
        Nodes per axis; must be even and at least 8 so that the node set
        is centro-symmetric and the interior resolves second differences.

    Attributes
    ----------
    h : float
        Node spacing 2L/N.
    axis : ndarray, shape (N,)
        Per-axis node coordinates.
    nodes : ndarray, shape (N**d, d)
        All node coordinates, row-major in axis order.
    """

    d: int
    L: float
    N: int
    h: float = field(init=False)
    axis: NDArray = field(init=False, repr=False)
    nodes: NDArray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.N % 2 != 0 or self.N < 8:
            raise ValueError(f"N must be even and >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"half-extent L must be positive, got {self.L}")
        h = 2.0 * self.L / self.N
        axis = -self.L + (np.arange(self.N) + 0.5) * h
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return self.N ** self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def speed_sq(self) -> NDArray:
        return np.sum(self.nodes * self.nodes, axis=-1)


def build_grid(d: int, L: float, N: int) -> GridSpec:
    """Construct a midpoint grid; rejects odd N, d not in {2,3}, L <= 0."""
    return GridSpec(d=d, L=float(L), N=int(N))


@dataclass
class Distribution:
    """Real scalar field sampled on the nodes of a :class:`GridSpec`."""

    grid: GridSpec
    values: NDArray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.size:
            raise ValueError(
                f"value array has {self.values.size} entries, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("distribution values must be finite")

    def copy(self) -> "Distribution":
        return Distribution(self.grid, self.values.copy())


@dataclass(frozen=True)
class MacroFields:
    """Mass, bulk velocity and granular temperature of a distribution.

    For zero mass the momentum and temperature are undefined and stored
    as NaN.
    """

    mass: float
    momentum: NDArray
    temperature: float

    @property
    def defined(self) -> bool:
        return np.isfinite(self.temperature)


@dataclass(frozen=True)
class ExpWeight:
    """Stretched-exponential weight exp(a |v|^s), 0 < s < 1, a > 0."""

    a: float = 0.1
    s: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"exponent s must lie in (0,1), got {self.s}")
        if not self.a > 0:
            raise ValueError(f"amplitude a must be positive, got {self.a}")


def quadrature(f: Distribution) -> float:
    """Midpoint quadrature h^d * sum f(v_k)."""
    return f.grid.cell_volume * float(f.values.sum())


def maxwellian(grid: GridSpec, mass: float, velocity, temperature: float) -> Distribution:
    """Gaussian N (2 pi T)^(-d/2) exp(-|v-u|^2 / 2T) sampled on the nodes."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    u = np.broadcast_to(np.asarray(velocity, dtype=float), (grid.d,))
    w = grid.nodes - u
    vals = mass * (2.0 * np.pi * temperature) ** (-grid.d / 2.0) * np.exp(
        -np.sum(w * w, axis=-1) / (2.0 * temperature))
    return Distribution(grid, vals)


def moments(f: Distribution) -> MacroFields:
    """Mass, momentum and temperature; T uses the centred second moment."""
    g = f.grid
    m = quadrature(f)
    if m == 0.0:
        nan = np.full(g.d, np.nan)
        return MacroFields(mass=0.0, momentum=nan, temperature=np.nan)
    u = g.cell_volume * (f.values[:, None] * g.nodes).sum(axis=0) / m
    w = g.nodes - u
    T = g.cell_volume * float((f.values * np.sum(w * w, axis=-1)).sum()) / (g.d * m)
    return MacroFields(mass=m, momentum=u, temperature=T)


def laplacian(f: Distribution) -> Distribution:
    """Second-order central differences per axis, zero extension outside."""
    g = f.grid
    cube = f.values.reshape((g.N,) * g.d)
    out = np.zeros_like(cube)
    inv_h2 = 1.0 / g.h ** 2
    for ax in range(g.d):
        padded = np.zeros(tuple(n + 2 if a == ax else n for a, n in enumerate(cube.shape)))
        sl = tuple(slice(1, -1) if a == ax else slice(None) for a in range(g.d))
        padded[sl] = cube
        lo = tuple(slice(0, -2) if a == ax else slice(None) for a in range(g.d))
        hi = tuple(slice(2, None) if a == ax else slice(None) for a in range(g.d))
        out += (padded[lo] - 2.0 * cube + padded[hi]) * inv_h2
    return Distribution(g, out.ravel())


def laplacian_matrix(grid: GridSpec) -> NDArray:
    """Dense matrix of :func:`laplacian` (Kronecker sum of 1-D stencils)."""
    N = grid.N
    T = np.zeros((N, N))
    i = np.arange(N)
    T[i, i] = -2.0
    T[i[:-1], i[:-1] + 1] = 1.0
    T[i[1:], i[1:] - 1] = 1.0
    eye = np.eye(N)
    if grid.d == 2:
        out = np.kron(T, eye) + np.kron(eye, T)
    else:
        out = (np.kron(np.kron(T, eye), eye)
               + np.kron(np.kron(eye, T), eye)
               + np.kron(np.kron(eye, eye), T))
    return out / grid.h ** 2


def weighted_norm(f: Distribution, w: ExpWeight) -> float:
    """L1 norm against the inverse stretched-exponential weight,
    h^d sum |f| exp(a |v|^s)."""
    g = f.grid
    speed = np.sqrt(g.speed_sq)
    return g.cell_volume * float((np.abs(f.values) * np.exp(w.a * speed ** w.s)).sum())


def third_moment_vector(f: Distribution) -> NDArray:
    """q(f) = h^d sum f(v) v |v|^2, the heat-flux-like third moment."""
    g = f.grid
    return g.cell_volume * (f.values[:, None] * g.nodes * g.speed_sq[:, None]).sum(axis=0)
