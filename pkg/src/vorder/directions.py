"""Hyperspherical directions with complex polar angle, and direction selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, GenericityError, GeometryError, SeparationError


def basis_from(omega0) -> np.ndarray:
    """Orthonormal basis (rows) whose first row is ``omega0``."""
    w = np.asarray(omega0, float)
    n = np.linalg.norm(w)
    if not abs(n - 1) < 1e-10:
        raise DomainError("omega0 must be a unit vector")
    d = len(w)
    # Householder reflection mapping e_1 to w keeps the result deterministic
    e = np.zeros(d)
    e[0] = 1.0
    v = e - w
    if np.linalg.norm(v) < 1e-14:
        return np.eye(d)
    v /= np.linalg.norm(v)
    H = np.eye(d) - 2 * np.outer(v, v)
    B = H.copy()  # rows of H: first row is w since H e_1 = w and H symmetric
    if np.linalg.det(B) < 0:
        B[-1] = -B[-1]
    return B


@dataclass(frozen=True, eq=False)
class SphereDirection:
    """``omega(theta, phis)`` expressed in an explicit orthonormal basis."""

    basis: np.ndarray
    theta: complex
    phis: tuple = ()

    def __post_init__(self):
        B = np.array(self.basis, float)
        d = B.shape[0]
        if B.shape != (d, d) or d < 2:
            raise DomainError("basis must be a square matrix of size >= 2")
        if np.max(np.abs(B @ B.T - np.eye(d))) > 1e-12:
            raise DomainError("basis rows are not orthonormal")
        if len(self.phis) != d - 2:
            raise DomainError(f"expected {d - 2} azimuthal angles")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "theta", complex(self.theta))
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coefficients(self) -> np.ndarray:
        return angular_coefficients(self.theta, self.phis)

    def vector(self) -> np.ndarray:
        return direction_vector(self)

    def with_theta(self, theta) -> "SphereDirection":
        return SphereDirection(self.basis, theta, self.phis)


def angular_coefficients(theta, phis) -> np.ndarray:
    d = len(phis) + 2
    c = np.empty(d, complex)
    st = np.sin(complex(theta))
    c[0] = np.cos(complex(theta))
    prod = 1.0
    for i in range(1, d - 1):
        c[i] = st * prod * np.cos(phis[i - 1])
        prod *= np.sin(phis[i - 1])
    c[d - 1] = st * prod
    return c


def direction_vector(dir: SphereDirection) -> np.ndarray:
    """Complex vector ``sum_i c_i(theta, phis) e_i``."""
    return dir.coefficients() @ dir.basis


def angles_of(omega, basis) -> tuple[float, tuple]:
    """Real angles of a unit vector with respect to ``basis``."""
    c = np.asarray(basis, float) @ np.asarray(omega, float)
    d = len(c)
    theta = float(np.arccos(np.clip(c[0], -1, 1)))
    phis = []
    rest = c[1:]
    for i in range(d - 2):
        nrm = np.linalg.norm(rest)
        phis.append(float(np.arccos(np.clip(rest[0] / nrm, -1, 1))) if nrm > 0 else 0.0)
        rest = rest[1:]
    if d > 2 and c[-1] < 0:
        phis[-1] = 2 * np.pi - phis[-1]
    if d == 2 and c[1] < 0:
        theta = -theta
    return theta, tuple(phis)


def rotated_direction(omega, basis) -> np.ndarray:
    """``omega(theta + pi/2, phis)``: the real direction seen in ``Im`` along half-lines."""
    theta, phis = angles_of(omega, basis)
    return np.real(angular_coefficients(theta + np.pi / 2, phis) @ np.asarray(basis, float))


def _random_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def generic_direction(constraints, seed=0, margin=1e-3, max_tries=2000, dim=None,
                      extra=None, around=None, spread=None) -> np.ndarray:
    """Rejection-sample a unit vector with ``|w.a_i - b_i| >= margin * max|a_i|``.

    ``extra(w)`` may return further functional values that must also stay
    above the same margin.  ``around``/``spread`` restrict sampling to a cap.
    """
    cons = [(np.asarray(a, float), float(b)) for a, b in constraints]
    if dim is None:
        if cons:
            dim = len(cons[0][0])
        elif around is not None:
            dim = len(around)
        else:
            raise DomainError("dimension unknown for an empty constraint list")
    for a, _ in cons:
        if not np.linalg.norm(a) > 0:
            raise DomainError("constraint vectors must be nonzero")
    scale = max([np.linalg.norm(a) for a, _ in cons], default=1.0)
    thr = margin * scale
    A = np.array([a for a, _ in cons]).reshape(len(cons), dim)
    b = np.array([bb for _, bb in cons])
    rng = np.random.default_rng(seed)
    best, best_gap = None, -np.inf
    for _ in range(max_tries):
        w = _random_unit(rng, dim)
        if around is not None:
            w = np.asarray(around, float) + (spread if spread is not None else 0.5) * w
            w /= np.linalg.norm(w)
        vals = A @ w - b if len(cons) else np.empty(0)
        if extra is not None:
            vals = np.concatenate([vals, np.atleast_1d(extra(w))])
        gap = np.min(np.abs(vals)) if vals.size else np.inf
        if gap >= thr:
            return w
        if gap > best_gap:
            best, best_gap = w, gap
    vals = A @ best - b
    i = int(np.argmin(np.abs(vals))) if len(cons) else -1
    raise GenericityError(
        f"no direction cleared margin {thr:.3g}; tightest constraint #{i} at {best_gap:.3g}")


def ball_constraints(centers) -> list:
    """Pairwise ``(x_i - x_j) . w != 0`` constraints of a ball configuration."""
    c = np.asarray(centers, float)
    out = []
    for i in range(len(c)):
        for j in range(i + 1, len(c)):
            if np.linalg.norm(c[i] - c[j]) > 0:
                out.append((c[i] - c[j], 0.0))
    return out


def simplex_functionals(matrices, basis, omega) -> np.ndarray:
    """All linear functionals that must avoid zero for a direction to be generic.

    For each ``V``: entries of ``V^T (w + e_1)``, their pairwise differences,
    and entries of ``V^T h(w)`` with ``h`` the quarter-turn in the polar angle.
    """
    B = np.asarray(basis, float)
    w = np.asarray(omega, float)
    hw = rotated_direction(w, B)
    vals = []
    for V in matrices:
        V = np.asarray(V, float)
        v = V.T @ (w + B[0])
        vals.extend(v)
        d = len(v)
        for j in range(d):
            for k in range(j + 1, d):
                vals.append(v[j] - v[k])
        vals.extend(V.T @ hw)
    return np.array(vals)


def separating_direction(polytope, vertex) -> tuple[np.ndarray, float]:
    """Unit ``w`` maximising ``min_x (vertex - x).w`` over the other points.

    Returns ``(w, gap)`` with ``gap > 0`` the separation margin.
    """
    P = np.asarray(polytope, float)
    z = np.asarray(vertex, float)
    others = P[np.linalg.norm(P - z, axis=1) > 1e-12]
    if len(others) == 0:
        raise GeometryError("polytope has no other vertices")
    d = len(z)
    # variables (w, t): maximise t s.t. (z - x).w >= t, |w_i| <= 1
    D = z - others
    A = np.hstack([-D, np.ones((len(D), 1))])
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=A, b_ub=np.zeros(len(D)),
                  bounds=[(-1, 1)] * d + [(None, 1)], method="highs")
    if res.status != 0 or -res.fun <= 1e-12:
        raise SeparationError("point is not an extreme point of the hull")
    w = res.x[:d] / np.linalg.norm(res.x[:d])
    gap = float(np.min(D @ w))
    if gap <= 0:
        raise SeparationError("point is not an extreme point of the hull")
    return w, gap
