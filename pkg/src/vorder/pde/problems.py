"""Laplace-domain forward problems, the linearized flux at p = 1, and the identity residual."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ..errors import BranchError, UnsupportedError
from ..moments import difference_moment
from ..directions import SphereDirection, angles_of, basis_from
from .fem import (ExcitationSpec, FemField, FluxTrace, boundary_flux, exponential_test,
                  flux_panel, solve_assembled, solve_reaction_diffusion, stiffness)
from .mesh import Mesh, QuadratureSet


def order_power(p: complex, order):
    """Callable ``x -> p ** alpha(x)`` on the principal branch."""
    p = complex(p)
    if p.imag == 0 and p.real <= 0:
        raise BranchError("p lies on the cut (-inf, 0]")
    logp = cmath.log(p)
    return lambda x: np.exp(order(x) * logp)


def quadrature_for(mesh: Mesh, *orders, levels: int = 4) -> QuadratureSet:
    incs = [inc for o in orders for inc in o.inclusions]
    return QuadratureSet.build(mesh, incs, levels)


class LaplaceFamily:
    """The operators ``-Lap + p^alpha`` for one order field on one mesh.

    When ``alpha`` takes few distinct values at the quadrature points the
    reaction matrix is kept as ``sum_a p^a M_a``, so each new ``p`` costs one
    sparse factorization.
    """

    MAX_LEVELS = 16

    def __init__(self, order, exc: ExcitationSpec, mesh: Mesh,
                 quad: QuadratureSet | None = None, stiff=None):
        self.order, self.exc, self.mesh = order, exc, mesh
        self.quad = quad or quadrature_for(mesh, order)
        self.stiff = stiffness(mesh) if stiff is None else stiff
        a = np.asarray(order(self.quad.xy), float)
        levels = np.unique(a)
        self.pieces = None
        if len(levels) <= self.MAX_LEVELS:
            nt = len(mesh.triangles)
            self.pieces = [(float(v), mesh.assemble(self.quad.local_mass(nt, (a == v).astype(float))))
                           for v in levels]

    def solve(self, p: complex) -> FemField:
        q = order_power(p, self.order)
        c = self.exc.boundary_scale(p)
        g = lambda x: c * self.exc.v0(x)
        if self.pieces is None:
            return solve_reaction_diffusion(self.mesh, q, 0.0, g, self.quad, self.stiff)
        logp = cmath.log(complex(p))
        q_levels = np.array([cmath.exp(v * logp) for v, _ in self.pieces])
        A = self.stiff.astype(complex)
        for qa, (_, M) in zip(q_levels, self.pieces):
            A = A + qa * M
        return solve_assembled(self.mesh, A, np.zeros(self.mesh.n_nodes, complex), g, q_levels)


def laplace_domain_solution(p: complex, order, exc: ExcitationSpec, mesh: Mesh,
                            quad: QuadratureSet | None = None, stiff=None) -> FemField:
    """``-Lap u + p^alpha u = 0``, ``u = k! p^{-k-1} exp(x . omega0)`` on the boundary."""
    return LaplaceFamily(order, exc, mesh, quad, stiff).solve(p)


def auxiliary_solutions(order, exc: ExcitationSpec, mesh: Mesh,
                        quad: QuadratureSet | None = None, stiff=None):
    """``v0`` (``-Lap v0 + v0 = 0``, ``v0 = exp(x . omega0)``) and ``v1`` (source ``alpha v0``, zero trace)."""
    quad = quad or quadrature_for(mesh, order)
    stiff = stiffness(mesh) if stiff is None else stiff
    v0 = solve_reaction_diffusion(mesh, 1.0, 0.0, exc.v0, quad, stiff)
    v1 = solve_reaction_diffusion(mesh, 1.0, (order, v0), 0.0, quad, stiff)
    return v0, v1


def linearized_flux_derivative(order, exc: ExcitationSpec, mesh: Mesh, tests=None,
                               quad: QuadratureSet | None = None) -> FluxTrace:
    """``G'(1) = -(k+1)! d_nu v0 - k! d_nu v1`` on a test panel."""
    tests = flux_panel() if tests is None else tests
    v0, v1 = auxiliary_solutions(order, exc, mesh, quad)
    k = exc.k
    return (-math.factorial(k + 1)) * boundary_flux(v0, tests) \
        - math.factorial(k) * boundary_flux(v1, tests)


def flux_at(p, order, exc, mesh, tests=None, quad=None) -> FluxTrace:
    tests = flux_panel() if tests is None else tests
    return boundary_flux(laplace_domain_solution(p, order, exc, mesh, quad), tests)


def finite_difference_derivative(order, exc, mesh, eps: float, tests=None,
                                 quad=None) -> FluxTrace:
    """Central difference ``[G(1+eps) - G(1-eps)] / (2 eps)`` of the flux panel."""
    tests = flux_panel() if tests is None else tests
    fam = LaplaceFamily(order, exc, mesh, quad)
    hi = boundary_flux(fam.solve(1 + eps), tests)
    lo = boundary_flux(fam.solve(1 - eps), tests)
    return (hi - lo) * (1 / (2 * eps))


@dataclass
class IdentityReport:
    directions: np.ndarray
    moments: np.ndarray
    pairings: np.ndarray
    residuals: np.ndarray
    scale: float

    @property
    def max(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(self.residuals)) if len(self.residuals) else 0.0

    @property
    def relative_max(self) -> float:
        return self.max / self.scale if self.scale > 0 else self.max


def identity_residual(cfg1, cfg2, exc: ExcitationSpec, mesh: Mesh, dirs) -> IdentityReport:
    """Per-direction ``|W(omega) + <d_nu (v1^1 - v1^2), z_omega>|``.

    ``W`` is the closed-form moment of the order difference at frequency
    ``omega + omega0``; ``z_omega = exp(x . omega)``.  The scale is
    ``max |W|`` over the grid (or the largest pairing when ``W`` vanishes).
    """
    if not cfg1.same_background(cfg2):
        raise UnsupportedError("configurations must share the background")
    dirs = np.atleast_2d(np.asarray(dirs, float))
    quad = quadrature_for(mesh, cfg1, cfg2)
    stiff = stiffness(mesh)
    v0 = solve_reaction_diffusion(mesh, 1.0, 0.0, exc.v0, quad, stiff)

    # the background cancels in the difference; only the inclusion part is a source
    def dalpha(x):
        return cfg1.inclusion_values(x) - cfg2.inclusion_values(x)

    v = solve_reaction_diffusion(mesh, 1.0, (dalpha, v0), 0.0, quad, stiff)
    tests = [exponential_test(w) for w in dirs]
    pair = boundary_flux(v, tests).values
    basis = basis_from(exc.w0)
    W = np.empty(len(dirs), complex)
    for j, w in enumerate(dirs):
        theta, phis = angles_of(w, basis)
        W[j] = difference_moment(cfg1, cfg2, SphereDirection(basis, theta, phis), exc.w0)
    res = np.abs(W + pair)
    scale = float(np.max(np.abs(W))) if np.any(W != 0) else float(np.max(np.abs(pair), initial=0))
    return IdentityReport(dirs, W, pair, res, scale)
