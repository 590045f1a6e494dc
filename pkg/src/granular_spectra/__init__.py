"""Velocity-space kinetic solver and spectral analysis for diffusively
heated granular gases: deterministic collision quadrature, heated
equilibria, linearised operators, hydrodynamic branch continuation and
closed-form dispersion targets."""

__version__ = "0.1.0"

from .collision import (CollisionModel, CollisionParams, CrossSection,
                        LeakageWarning, SphereQuadrature, angular_momentum_b1,
                        post_collisional)
from .config import ConfigError, RunConfig
from .dispersion import (DispersionRoots, GramMatrix3, InternalConsistencyError,
                         c_nu, dispersion_roots, energy_slope, gram_limit,
                         heat_mode, lambda2_induction, sound_speed,
                         transverse_limit)
from .equilibrium import (EquilibriumResult, balance_residual,
                          elastic_equilibrium, elastic_temperature,
                          solve_equilibrium)
from .linop import (LinearOperatorMatrix, OperatorSplit, apply_linearized,
                    assemble_fourier, assemble_linearized, split_operator)
from .pipeline import Scenario
from .spectrum import (Branch, EigenPair, EigensolverError, ExpansionFit,
                       SpectrumSummary, essential_bound_check, fit_expansion,
                       full_spectrum, hydrodynamic_set, track_branches)
from .velocity_grid import (Distribution, ExpWeight, GridSpec, MacroFields,
                            build_grid, laplacian, laplacian_matrix, maxwellian,
                            moments, quadrature, third_moment_vector,
                            weighted_norm)
