"""Planar finite elements for the Laplace-domain problems."""

from .fem import (BoundaryTest, ExcitationSpec, FemField, FluxTrace, boundary_flux,
                  exponential_test, flux_density, flux_panel, hat_test,
                  solve_reaction_diffusion, stiffness, unit_circle_directions)
from .mesh import Mesh, QuadratureSet, build_mesh
from .problems import (IdentityReport, LaplaceFamily, auxiliary_solutions,
                       finite_difference_derivative, identity_residual,
                       laplace_domain_solution, linearized_flux_derivative, order_power)
from .timedomain import (ContourSpec, RoundTrip, TimeFlux, invert_laplace,
                         laplace_round_trip, time_domain_flux)
