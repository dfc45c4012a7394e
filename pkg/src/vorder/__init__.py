"""Exponential moments, Laplace-domain finite elements and inclusion recovery
for subdiffusion with a piecewise-constant variable order."""

from .directions import SphereDirection, basis_from, generic_direction
from .errors import (BranchError, ConfigurationError, DomainError, GenericityError,
                     GeometryError, IdentifiabilityWarning, NumericsError, VorderError)
from .moments import (MomentSampler, ball_moment, box_moment, configuration_moment,
                      difference_moment, shape_moment, simplex_moment)
from .oracle import QuadratureSpec, quadrature_moment
from .shapes import AffineBackground, Ball, Box, OrderField, Polygon, Simplex
from .specfun import bessel_j, gamma

__version__ = "0.1.0"
