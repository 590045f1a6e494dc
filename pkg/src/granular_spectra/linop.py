"""Dense assembly of the linearised heated collision operator.

L_a g = Q_a(g, F_a) + Q_a(F_a, g) + (1 - a) Lap g  acting on node values,
and its spatial-Fourier family L_{a,gamma} = -i (gamma . v) + L_a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .collision import CollisionModel
from .velocity_grid import Distribution, GridSpec, laplacian, laplacian_matrix


@dataclass
class LinearOperatorMatrix:
    """Dense operator matrix with its assembly metadata.

    `matrix` is real for gamma = 0 and complex otherwise; conjugating
    gamma conjugates the matrix entrywise.
    """

    matrix: NDArray
    grid: GridSpec
    alpha: float
    gamma: NDArray
    leakage: float = 0.0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)


@dataclass
class OperatorSplit:
    """Local (multiplication + diffusion) and nonlocal parts; they sum back
    to the full operator to roundoff."""

    local: NDArray
    compact: NDArray

    def reconstruction_error(self, full: NDArray) -> float:
        scale = np.abs(full).max()
        return float(np.abs(self.local + self.compact - full).max() / scale)


def apply_linearized(g: Distribution, F: Distribution, alpha: float,
                     model: CollisionModel) -> Distribution:
    """Matrix-free action Q(g,F) + Q(F,g) + (1-a) Lap g."""
    if g.grid is not F.grid and g.grid != F.grid:
        raise ValueError("field and equilibrium live on different grids")
    gain = model.gain_apply(g, F, alpha)
    nu_F = model.loss_potential(F)
    L_g = model.loss_potential(g)
    vals = (2.0 * gain.values - F.values * L_g.values - g.values * nu_F.values
            + (1.0 - alpha) * laplacian(g).values)
    return Distribution(g.grid, vals)


def assemble_linearized(F: Distribution, alpha: float,
                        model: CollisionModel) -> LinearOperatorMatrix:
    """Dense matrix of the linearised operator around F."""
    grid = model.grid
    Gmat, leak = model.gain_matrix(F, alpha)
    lossmat = model.loss_matrix()
    nu = lossmat @ F.values
    A = 2.0 * Gmat - np.diag(nu) - F.values[:, None] * lossmat
    if alpha != 1.0:
        A += (1.0 - alpha) * laplacian_matrix(grid)
    return LinearOperatorMatrix(matrix=A, grid=grid, alpha=alpha,
                                gamma=np.zeros(grid.d), leakage=leak)


def assemble_fourier(A: LinearOperatorMatrix, gamma) -> LinearOperatorMatrix:
    """L_{a,gamma} = A - i diag(gamma . v)."""
    gamma = np.asarray(gamma, dtype=float)
    if not A.is_real:
        raise ValueError("expected the real gamma = 0 operator as input")
    phase = A.grid.nodes @ gamma
    M = A.matrix.astype(complex, copy=True)
    M[np.diag_indices_from(M)] -= 1j * phase
    return LinearOperatorMatrix(matrix=M, grid=A.grid, alpha=A.alpha,
                                gamma=gamma, leakage=A.leakage)


def split_operator(A: LinearOperatorMatrix, F: Distribution, alpha: float,
                   gamma, model: CollisionModel) -> OperatorSplit:
    """Local part -diag(i gamma.v + nu) + (1-a) Lap and the nonlocal rest."""
    gamma = np.asarray(gamma, dtype=float)
    grid = model.grid
    nu = model.loss_potential(F).values
    local = (1.0 - alpha) * laplacian_matrix(grid) - np.diag(nu)
    full = A.matrix
    if np.any(gamma != 0.0):
        local = local.astype(complex)
        local[np.diag_indices_from(local)] -= 1j * (grid.nodes @ gamma)
        if A.is_real:
            full = assemble_fourier(A, gamma).matrix
    compact = full - local
    return OperatorSplit(local=local, compact=compact)
