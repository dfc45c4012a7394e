"""P1 Galerkin solver for  -Lap u + q u = f,  u = g on the boundary.

Coefficient and source fields are sampled at the points of a
:class:`QuadratureSet`; triangles crossed by an inclusion boundary carry a
subdivided rule so that indicator jumps are integrated accurately without
fitting the mesh to the inclusions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import ContractError, DomainError, NumericsError
from ..specfun import principal_power
from .mesh import Mesh, QuadratureSet

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ExcitationSpec:
    """Boundary excitation ``t^k exp(x . omega0)``; its transform is ``k! p^{-k-1} exp(x . omega0)``."""

    k: int = 2
    omega0: tuple = (1.0, 0.0)
    allow_k0: bool = False

    def __post_init__(self):
        w = np.asarray(self.omega0, float)
        if abs(np.linalg.norm(w) - 1) > 1e-12:
            raise DomainError("omega0 must be a unit vector")
        if self.k == 1 or self.k < 0:
            raise DomainError("k = 1 and negative k are excluded")
        if self.k == 0 and not self.allow_k0:
            raise DomainError("k = 0 requires the explicit override")

    @property
    def w0(self) -> np.ndarray:
        return np.asarray(self.omega0, float)

    def v0(self, points) -> np.ndarray:
        return np.exp(np.atleast_2d(points) @ self.w0)

    def boundary_scale(self, p) -> complex:
        return math.factorial(self.k) * principal_power(complex(p), -self.k - 1)


# field sampling ------------------------------------------------------------------

def _sample(mesh: Mesh, quad: QuadratureSet, fld) -> np.ndarray:
    """Values at quadrature points: scalars, callables, nodal arrays, or tuples (products)."""
    if isinstance(fld, tuple):
        out = np.ones(len(quad.weight), complex)
        for part in fld:
            out = out * _sample(mesh, quad, part)
        return out
    if isinstance(fld, FemField):
        return quad.interpolate(mesh, fld.values)
    if callable(fld):
        return np.asarray(fld(quad.xy), complex)
    arr = np.asarray(fld)
    if arr.ndim == 0:
        return np.full(len(quad.weight), complex(arr))
    if arr.shape == (mesh.n_nodes,):
        return quad.interpolate(mesh, arr)
    raise ContractError("field must be scalar, callable, nodal, or a tuple of those")


def _nodal(mesh: Mesh, fld) -> np.ndarray:
    if isinstance(fld, FemField):
        return fld.values
    if callable(fld):
        return np.asarray(fld(mesh.nodes), complex)
    arr = np.asarray(fld)
    if arr.ndim == 0:
        return np.full(mesh.n_nodes, complex(arr))
    if arr.shape == (mesh.n_nodes,):
        return arr.astype(complex)
    raise ContractError("boundary data must be scalar, callable, or nodal")


# assembly ------------------------------------------------------------------------

def stiffness(mesh: Mesh) -> sp.csr_matrix:
    T = mesh.triangles
    P = mesh.nodes[T]
    area = mesh.areas
    # gradients of barycentric coordinates
    e = np.stack([P[:, 2] - P[:, 1], P[:, 0] - P[:, 2], P[:, 1] - P[:, 0]], axis=1)
    g = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2 * area)[:, None, None]
    K = np.einsum("tad,tbd->tab", g, g) * area[:, None, None]
    return mesh.assemble(K)


def weighted_mass(mesh: Mesh, quad: QuadratureSet, qvals: np.ndarray) -> sp.csr_matrix:
    return mesh.assemble(quad.local_mass(len(mesh.triangles), qvals))


def load_vector(mesh: Mesh, quad: QuadratureSet, fvals: np.ndarray) -> np.ndarray:
    T = mesh.triangles[quad.tri]
    contrib = (quad.weight * fvals)[:, None] * quad.lam
    return np.bincount(T.ravel(), weights=contrib.real.ravel(), minlength=mesh.n_nodes) + \
        1j * np.bincount(T.ravel(), weights=contrib.imag.ravel(), minlength=mesh.n_nodes)


def _check_coefficient(qvals: np.ndarray):
    if not np.all(np.isfinite(qvals)):
        raise DomainError("reaction coefficient is not finite")
    if np.all(qvals.real > 0):
        return
    im = qvals.imag
    if np.all(im > 0) or np.all(im < 0):
        return
    raise DomainError("reaction coefficient needs Re q > 0 or a strictly one-signed Im q")


# solution container ----------------------------------------------------------------

@dataclass(eq=False)
class FemField:
    """Complex nodal values; solver outputs also keep their system for flux recovery."""

    mesh: Mesh
    values: np.ndarray
    matrix: sp.csr_matrix | None = field(default=None, repr=False)
    load: np.ndarray | None = field(default=None, repr=False)
    residual: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, complex)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ContractError("nodal vector length differs from the node count")

    @property
    def is_solution(self) -> bool:
        return self.matrix is not None

    def __add__(self, other: "FemField") -> "FemField":
        return _combine(self, other, 1.0, 1.0)

    def __sub__(self, other: "FemField") -> "FemField":
        return _combine(self, other, 1.0, -1.0)

    def __mul__(self, c) -> "FemField":
        if not np.isscalar(c):
            return NotImplemented
        load = None if self.load is None else c * self.load
        return FemField(self.mesh, c * self.values, self.matrix, load, self.residual)

    __rmul__ = __mul__

    def l2_error(self, exact: Callable, quad: QuadratureSet | None = None) -> float:
        """``||u_h - u||_{L^2}`` over the mesh by the degree-2 rule."""
        quad = quad or QuadratureSet.build(self.mesh)
        diff = quad.interpolate(self.mesh, self.values) - np.asarray(exact(quad.xy))
        return float(np.sqrt(np.sum(quad.weight * np.abs(diff) ** 2)))

    def h1_norm(self) -> float:
        K = stiffness(self.mesh)
        quad = QuadratureSet.build(self.mesh)
        M = weighted_mass(self.mesh, quad, np.ones(len(quad.weight)))
        u = self.values
        return float(np.sqrt(abs(np.vdot(u, K @ u)) + abs(np.vdot(u, M @ u))))


def _combine(a: FemField, b: FemField, ca, cb) -> FemField:
    if a.mesh is not b.mesh:
        raise ContractError("fields live on different meshes")
    same = a.matrix is not None and a.matrix is b.matrix
    return FemField(a.mesh, ca * a.values + cb * b.values,
                    a.matrix if same else None,
                    ca * a.load + cb * b.load if same else None,
                    max(a.residual, b.residual))


# solver ---------------------------------------------------------------------------

def solve_reaction_diffusion(mesh: Mesh, q, f, g_bdry, quad: QuadratureSet | None = None,
                             stiff: sp.csr_matrix | None = None) -> FemField:
    """Galerkin solution of ``-Lap u + q u = f`` with ``u = g`` on the boundary.

    ``q`` and ``f`` are sampled at quadrature points; ``g_bdry`` is interpolated
    at boundary nodes.  Raises DomainError unless ``Re q > 0`` everywhere or
    ``Im q`` has one strict sign (complex contour nodes).  The sparse direct
    solve is followed by one refinement step; relative residual must end
    below 1e-10.
    """
    quad = quad or QuadratureSet.build(mesh)
    qv = _sample(mesh, quad, q)
    fv = _sample(mesh, quad, f)
    K = stiffness(mesh) if stiff is None else stiff
    A = K + weighted_mass(mesh, quad, qv)
    return solve_assembled(mesh, A, load_vector(mesh, quad, fv), g_bdry, qv)


def solve_assembled(mesh: Mesh, A, F, g_bdry, qvals) -> FemField:
    """Dirichlet-lifted direct solve of an assembled system ``A u = F``."""
    _check_coefficient(np.asarray(qvals))
    b = mesh.boundary_nodes
    i = mesh.interior_nodes
    A = A.tocsr()
    u = np.zeros(mesh.n_nodes, complex)
    u[b] = _nodal(mesh, g_bdry)[b]
    Aii = A[i][:, i].tocsc()
    rhs = F[i] - A[i][:, b] @ u[b]
    try:
        lu = spla.splu(Aii)
    except RuntimeError as exc:
        raise NumericsError(f"factorization failed: {exc}") from None
    x = lu.solve(rhs)
    r = rhs - Aii @ x
    x = x + lu.solve(r)
    r = rhs - Aii @ x
    scale = max(np.linalg.norm(rhs), np.linalg.norm(Aii @ x), 1e-300)
    rel = float(np.linalg.norm(r) / scale)
    if not rel <= RESIDUAL_TOL:
        raise NumericsError(f"linear residual {rel:.3e} exceeds {RESIDUAL_TOL}")
    u[i] = x
    return FemField(mesh, u, A, F, rel)


# boundary tests and flux -----------------------------------------------------------

@dataclass(frozen=True)
class BoundaryTest:
    """A boundary function ``psi`` with a label; evaluated at points."""

    label: str
    func: Callable
    kind: str = "custom"

    def __call__(self, points) -> np.ndarray:
        return np.asarray(self.func(np.atleast_2d(points)), complex)


def exponential_test(omega) -> BoundaryTest:
    w = np.asarray(omega, float)
    return BoundaryTest(f"z[{w[0]:.6f},{w[1]:.6f}]", lambda x: np.exp(x @ w), "exponential")


def hat_test(center_angle: float, half_width: float) -> BoundaryTest:
    """Piecewise-linear tent in the polar angle about the origin."""
    def f(x):
        a = np.arctan2(x[:, 1], x[:, 0])
        d = np.abs(np.angle(np.exp(1j * (a - center_angle))))
        return np.maximum(0.0, 1 - d / half_width)
    return BoundaryTest(f"hat[{center_angle:.6f},{half_width:.6f}]", f, "hat")


def unit_circle_directions(n: int) -> np.ndarray:
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def flux_panel(n_dirs: int = 16, n_hats: int = 8, half_width: float | None = None) -> list:
    """Exponential traces ``exp(x . omega)`` on a direction grid plus tent traces."""
    tests = [exponential_test(w) for w in unit_circle_directions(n_dirs)]
    hw = half_width if half_width is not None else 2 * np.pi / max(n_hats, 1)
    tests += [hat_test(2 * np.pi * j / n_hats, hw) for j in range(n_hats)]
    return tests


@dataclass
class FluxTrace:
    """Pairings ``<d_nu u, psi>`` for a panel of boundary tests."""

    labels: list
    values: np.ndarray
    kinds: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, complex)
        if not np.all(np.isfinite(self.values)):
            raise NumericsError("non-finite flux pairing")

    def __add__(self, other: "FluxTrace") -> "FluxTrace":
        return FluxTrace(self.labels, self.values + other.values, self.kinds)

    def __sub__(self, other: "FluxTrace") -> "FluxTrace":
        return FluxTrace(self.labels, self.values - other.values, self.kinds)

    def __mul__(self, c) -> "FluxTrace":
        return FluxTrace(self.labels, c * self.values, self.kinds)

    __rmul__ = __mul__

    def select(self, kind: str) -> np.ndarray:
        return np.array([v for v, k in zip(self.values, self.kinds) if k == kind])


def flux_vector(u: FemField) -> np.ndarray:
    """Residual ``A u - F``; nonzero only on boundary rows up to solver tolerance."""
    if not u.is_solution:
        raise ContractError("flux needs a Galerkin solution field (with its system)")
    return u.matrix @ u.values - u.load


def boundary_flux(u: FemField, tests: Sequence, extension: str = "boundary") -> FluxTrace:
    """Consistent flux ``a(u, psi~) + (q u, psi~) - (f, psi~)``.

    ``extension="boundary"`` extends ``psi`` by zero at interior nodes;
    ``"full"`` uses the nodal interpolant of ``psi`` on the whole mesh (the
    two agree to solver tolerance).  Tests may be callables or nodal arrays.
    """
    r = flux_vector(u)
    mesh = u.mesh
    if extension == "boundary":
        idx = mesh.boundary_nodes
    elif extension == "full":
        idx = np.arange(mesh.n_nodes)
    else:
        raise ContractError(f"unknown extension {extension!r}")
    vals, labels, kinds = [], [], []
    for j, t in enumerate(tests):
        if callable(t):
            psi = np.asarray(t(mesh.nodes[idx]), complex)
        else:
            psi = np.asarray(t, complex)[idx]
        vals.append(np.sum(psi * r[idx]))
        labels.append(getattr(t, "label", f"test{j}"))
        kinds.append(getattr(t, "kind", "custom"))
    return FluxTrace(labels, np.array(vals), kinds)


def flux_density(u: FemField) -> tuple[np.ndarray, np.ndarray]:
    """Nodal flux density on the boundary: residual lumped by the boundary mass."""
    mesh = u.mesh
    r = flux_vector(u)
    e = mesh.boundary_edges
    ln = np.linalg.norm(mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1)
    lump = np.bincount(e.ravel(), weights=np.repeat(ln / 2, 2), minlength=mesh.n_nodes)
    b = mesh.boundary_nodes
    return b, r[b] / lump[b]
