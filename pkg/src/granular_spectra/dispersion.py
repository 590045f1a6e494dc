"""Closed-form targets of the small-frequency dispersion relation.

At the quasi-elastic limit the projected 3x3 longitudinal system has a
Gram matrix in the basis (1, v_1, |v|^2 - c_nu) weighted by the elastic
equilibrium; its determinant factors into a cubic whose roots give the
acoustic slopes, the transverse relation is linear with the single root
zero, and the energy branch decays with slope 3 / T1 in the inelasticity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .collision import CollisionModel
from .linop import LinearOperatorMatrix
from .velocity_grid import Distribution, ExpWeight, moments, weighted_norm


class InternalConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class GramMatrix3:
    matrix: NDArray
    T1: float
    c_nu: float
    d: int


@dataclass(frozen=True)
class DispersionRoots:
    z_minus: complex
    z_zero: complex
    z_plus: complex

    @property
    def as_array(self) -> NDArray:
        return np.array([self.z_minus, self.z_zero, self.z_plus])


@dataclass
class EnergyEigenvectorData:
    c0: float
    h0: Distribution
    energy: float
    dissipation_pairing: float


@dataclass
class EnergySlopeResult:
    numeric: float
    analytic: float
    data: EnergyEigenvectorData


@dataclass
class Lambda2Result:
    value: complex
    q_pairing: complex
    solvability_defect: float
    singular_gap: float
    h1: NDArray


def c_nu(F1: Distribution, nu: Distribution) -> float:
    """Normalisation c with <nu, |v|^2>_F = <nu, c>_F in the F1-weighted
    pairing <phi, psi>_F = int phi psi F1."""
    g = F1.grid
    num = float((nu.values * g.speed_sq * F1.values).sum())
    den = float((nu.values * F1.values).sum())
    return num / den


def sound_speed(d: int, T1: float) -> float:
    """Acoustic slope sqrt(T1 + 2 T1 / d) = sqrt((d+2) T1 / d)."""
    return float(np.sqrt((d + 2.0) * T1 / d))


def dispersion_roots(d: int, T1: float) -> DispersionRoots:
    """Roots z_j = j i sqrt((d+2) T1 / d) of the limit cubic, j in {-1,0,1}."""
    if not T1 > 0:
        raise ValueError("temperature must be positive")
    c = sound_speed(d, T1)
    return DispersionRoots(z_minus=-1j * c, z_zero=0.0 + 0.0j, z_plus=1j * c)


def gram_limit(z: complex, d: int, T1: float, cnu: float,
               tol: float = 1e-12) -> tuple[GramMatrix3, complex, complex]:
    """Limit Gram matrix, its determinant, and the factored cubic.

    The closed form is 2 T1^3 z (d z^2 + (d+2) T1); determinant and
    closed form must agree to `tol` relative or the run aborts.
    """
    z = complex(z)
    a = d * T1 - cnu
    bq = T1 * ((d + 2.0) * T1 - cnu)
    M = np.array([
        [z, 1j * T1, z * a],
        [1j * T1, z * T1, 1j * bq],
        [z * a, 1j * bq, z * (a * a + 2.0 * d * T1 * T1)],
    ], dtype=complex)
    det = complex(np.linalg.det(M))
    closed = 2.0 * T1 ** 3 * z * (d * z * z + (d + 2.0) * T1)
    scale = max(abs(det), abs(closed), T1 ** 4)
    if abs(det - closed) > tol * scale:
        raise InternalConsistencyError(
            f"Gram determinant {det} and closed form {closed} disagree "
            f"beyond {tol:.1e} relative")
    return GramMatrix3(matrix=M, T1=T1, c_nu=cnu, d=d), det, closed


def transverse_limit(z: complex, T1: float) -> complex:
    """Limit of the transverse relation: z T1, single simple root z = 0."""
    return complex(z) * T1


def energy_eigenvector(F1: Distribution, T1: float,
                       weight: ExpWeight | None = None) -> EnergyEigenvectorData:
    """Space-homogeneous energy eigenvector h0 = c0 (|v|^2 - d T1) F1.

    c0 is fixed by unit weighted L1 norm; every quantity derived from h0
    below is a ratio in which c0 cancels.
    """
    g = F1.grid
    raw = (g.speed_sq - g.d * T1) * F1.values
    h = Distribution(g, raw)
    c0 = 1.0 / weighted_norm(h, weight or ExpWeight())
    h0 = Distribution(g, c0 * raw)
    energy = g.cell_volume * float((h0.values * g.speed_sq).sum())
    return EnergyEigenvectorData(c0=c0, h0=h0, energy=energy, dissipation_pairing=np.nan)


def energy_slope(F1: Distribution, model: CollisionModel, T1: float,
                 weight: ExpWeight | None = None) -> EnergySlopeResult:
    """Energy-branch inelasticity slope e1: numeric 4 D(F1,h0)/E(h0) vs 3/T1.

    The eigenvalue of the energy branch is then lambda ~= -e1 (1 - alpha).
    """
    data = energy_eigenvector(F1, T1, weight)
    pairing = model.dissipation(F1, data.h0)
    data.dissipation_pairing = pairing
    numeric = 4.0 * pairing / data.energy
    return EnergySlopeResult(numeric=float(numeric), analytic=3.0 / T1, data=data)


def heat_mode(F1: Distribution) -> Distribution:
    """First-order-adapted energy vector (|v|^2 - (d+2) T) F1.

    Shifting the energy eigenvector by -2T F1 makes the first-order
    right-hand side (lambda_1 + i w.v) h0 orthogonal to the momentum
    modes, which is the solvability condition the lambda_2 recursion
    needs; with the grid temperature the orthogonality holds to
    quadrature accuracy.
    """
    g = F1.grid
    Tg = moments(F1).temperature
    vals = (g.speed_sq - (g.d + 2.0) * Tg) * F1.values
    vals /= np.sqrt(g.cell_volume * (vals * vals / F1.values).sum())
    return Distribution(g, vals)


def lambda2_induction(omega, A1: LinearOperatorMatrix, h0: Distribution,
                      lam1: complex, F1: Distribution,
                      gap_threshold: float | None = None) -> Lambda2Result:
    """Second-order coefficient from the solvability recursion.

    Solves A1 h1 = (lam1 + i (w.v)) h0 by SVD pseudo-inverse with the d+2
    near-kernel directions removed, then pairs the next-order right-hand
    side back against h0 in the F1-weighted bilinear form:

        lambda_2 = -<(lam1 + i w.v) h1, h0>_F1 / <h0, h0>_F1.

    For the energy branch this equals the heat-flux pairing
    -i w.q(h1) * c0 / <h0,h0>, reported alongside.  The right-hand side's
    projection on the adjoint kernel (solvability defect) and the
    singular-value gap of the kernel split are returned as diagnostics.
    """
    g = A1.grid
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    phase = g.nodes @ omega
    rhs = (lam1 + 1j * phase) * h0.values
    U, S, Vh = np.linalg.svd(A1.matrix)
    k = g.d + 2
    sgap = float(S[-k - 1] / max(S[-k], 1e-300))
    if gap_threshold is not None and S[-k] > gap_threshold:
        raise InternalConsistencyError(
            f"kernel split is ill-conditioned: s_k={S[-k]:.2e} above "
            f"threshold {gap_threshold:.2e} (gap ratio {sgap:.2e})")
    defect = float(np.linalg.norm(U[:, -k:].conj().T @ rhs) / np.linalg.norm(rhs))
    Sinv = 1.0 / S
    Sinv[-k:] = 0.0
    h1 = (Vh.conj().T * Sinv) @ (U.conj().T @ rhs)
    hd = g.cell_volume
    pair = lambda a, b: hd * np.sum(a * b / F1.values)   # F1-weighted bilinear form
    # the pseudo-inverse fixes the kernel components of h1 in the plain l2
    # sense; remove them in the F1-weighted sense instead, which is the
    # metric of the solvability argument (the h0-pairing below is immune to
    # this ambiguity, the heat-flux pairing is not)
    K = np.column_stack([F1.values, g.speed_sq * F1.values]
                        + [g.nodes[:, a] * F1.values for a in range(g.d)])
    W = hd / F1.values
    G = K.T @ (W[:, None] * K)
    h1 = h1 - K @ np.linalg.solve(G, K.T @ (W * h1))
    lam2 = -pair((lam1 + 1j * phase) * h1, h0.values) / pair(h0.values, h0.values)
    qv = hd * ((h1 * g.speed_sq)[:, None] * g.nodes).sum(axis=0)
    Tg = moments(F1).temperature
    basis = (g.speed_sq - (g.d + 2.0) * Tg) * F1.values
    cfac = pair(h0.values, basis) / pair(basis, basis)
    q_pairing = -1j * cfac * (omega @ qv) / pair(h0.values, h0.values)
    return Lambda2Result(value=complex(lam2), q_pairing=complex(q_pairing),
                         solvability_defect=defect, singular_gap=sgap, h1=h1)
