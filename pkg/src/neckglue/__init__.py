"""Desk-scale numerics for constant scalar curvature metrics with Delaunay ends.

The library covers the computable machinery of the neck-gluing construction:
periodic orbits of the cylindrical conformal-factor ODE and the translated
solution family built on them, spherical harmonics with exact polynomial
integration, weighted Hoelder norms, interior/exterior harmonic extensions
and the diagonal boundary operator, the mode-decomposed linearized solver
with the flat-model interior fixed point, product-sphere nondegeneracy
spectra, and the finite-dimensional Cauchy-data matching systems.
"""

from .delaunay import (DelaunayOrbit, energy_at_minimum, energy_drift_over,
                       eval_orbit, hamiltonian, homoclinic_value, integrate_orbit,
                       integrate_trajectory, ode_rhs)
from .errors import (AccuracyError, ContractViolationError, DivergenceError,
                     DomainViolationError, IntegrationError, NeckglueError,
                     ParameterError, SingularPointError, SolverError)
from .family import (FamilyParams, AsymptoticModelReport, a_expansion_remainder,
                     a_expansion_remainder_neck, bracketing_constants,
                     check_asymptotic_model, conformal_power_gap, neck_radius_from_b,
                     u_eps, u_eps_R, u_eps_R_a, u_eps_R_a_radial_derivative,
                     u_eps_radial)
from .harmonics import (BoundaryData, HarmonicBasis, HarmonicMode, ModeExpansion,
                        Poly, build_basis, eigenvalue, harmonic_dimension,
                        high_mode_field, integrate_monomial_sphere, project_high,
                        project_low, sphere_inner, sphere_quadrature, surface_area)
from .linearized import (PicardResult, RadialBVP, RadialProfile, expansion_field,
                         lambda_n, check_remainder_inequalities, picard_interior, potential,
                         q_crossing, q_remainder, q_remainder_n,
                         q_remainder_quadrature, solve_mode_bvp)
from .matching import (DataFunctionals, FaithfulFunctionals, MatchRecord,
                       MatchResult, MatchingState, assemble_match,
                       constant_functionals, f_g_coefficients,
                       faithful_functionals, solve_a_omega, solve_b_lambda,
                       solve_high_mode, synthetic_functionals, zero_functionals)
from .norms import (Field, NormSpec, SphereField, as_field, norm_annulus,
                    norm_sphere, norm_weighted, norm_weighted_exterior,
                    norm_weighted_report, radial_field)
from .params import Dimension, ParameterBudget, as_dimension
from .poisson import exterior_extend, interior_extend, z_apply, z_inverse, z_multiplier
from .spectrum import (CriticalCurvature, SpectrumSpec, degenerate_curvature_set,
                       family_spec, is_nondegenerate, laplace_spectrum,
                       linearized_spectrum, s2xs2_discrepancy, s2xs3_discrepancy,
                       spectral_gap)

__version__ = "0.1.0"
