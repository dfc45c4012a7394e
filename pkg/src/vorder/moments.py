"""Exponential moments  int_D exp(x.y) dx  of balls, simplices, boxes and polygons.

Frequencies ``y`` may be complex.  All shapes are handled additively, so
overlapping inclusions simply add their amplitudes.
"""

from __future__ import annotations

import cmath
import math
from typing import Iterable, Sequence

import numpy as np

from .directions import SphereDirection, direction_vector
from .errors import BranchError, DomainError, UnsupportedError
from .shapes import Ball, Box, OrderField, Polygon, Simplex
from .specfun import bessel_j, principal_power

SMALL_FREQ = 1e-6
CONFLUENCE = 1e-3


def ball_volume(radius: float, d: int) -> float:
    return math.pi ** (d / 2) * radius ** d / math.gamma(d / 2 + 1)


def _ball_series(radius: float, s: complex, d: int, terms: int = 3) -> complex:
    # sum_m (r^2 s / 4)^m / (m! Gamma(m + d/2 + 1)), times pi^{d/2} r^d
    w = radius * radius * s / 4
    total, t = 0j, 1 / math.gamma(d / 2 + 1)
    for m in range(terms):
        total += t
        t = t * w / ((m + 1) * (m + 1 + d / 2))
    return math.pi ** (d / 2) * radius ** d * total


def _ball_bessel(radius: float, kappa: complex, d: int) -> complex:
    nu = d / 2
    pref = principal_power(2 * math.pi * radius / kappa, nu)
    return pref * cmath.exp(-0.25j * d * math.pi) * bessel_j(nu, 1j * radius * kappa)


def ball_moment(radius: float, y) -> complex:
    """Moment of the ball of given radius centred at the origin.

    ``y`` is either a (complex) frequency vector or a :class:`SphereDirection`;
    in the latter case the frequency is ``omega(theta, phis) + e_1`` and the
    scalar argument is ``f(theta) = 2 cos(theta/2)``, which requires
    ``|Re theta| < pi/2``.
    """
    if not radius > 0:
        raise DomainError("radius must be positive")
    if isinstance(y, SphereDirection):
        if not abs(y.theta.real) < math.pi / 2:
            raise BranchError("theta outside the strip |Re theta| < pi/2")
        d = y.dim
        f = 2 * cmath.cos(y.theta / 2)
        if abs(f) < SMALL_FREQ:
            return _ball_series(radius, f * f, d)
        return _ball_bessel(radius, f, d)
    y = np.asarray(y, complex)
    d = len(y)
    s = complex(np.sum(y * y))
    if math.sqrt(abs(s)) < SMALL_FREQ:
        return _ball_series(radius, s, d)
    kappa = cmath.sqrt(s)
    # the moment is even in kappa; keep i r kappa off the negative real axis
    if kappa.real == 0 and kappa.imag > 0:
        kappa = -kappa
    return _ball_bessel(radius, kappa, d)


def exp_divided_difference(nodes: Sequence[complex]) -> complex:
    """``exp[z_0, ..., z_n]`` for arbitrary (possibly repeated) nodes.

    The last entry of the first column of ``exp(Z)``, ``Z`` the lower
    bidiagonal matrix with the nodes on the diagonal and ones below it.
    ``exp(Z)`` is formed by a scaled Taylor series and repeated squaring.
    """
    z = np.asarray(nodes, complex)
    n = len(z)
    if n == 1:
        return complex(np.exp(z[0]))
    c = z.mean()
    Z = np.diag(z - c) + np.diag(np.ones(n - 1), -1)
    nrm = np.max(np.abs(z - c)) + 1.0
    s = max(0, int(math.ceil(math.log2(nrm / 0.25))))
    A = Z / 2.0 ** s
    E = np.eye(n, dtype=complex)
    term = E.copy()
    for k in range(1, 40):
        term = term @ A / k
        E = E + term
        if np.max(np.abs(term)) <= 1e-18 * np.max(np.abs(E)):
            break
    for _ in range(s):
        E = E @ E
    return complex(np.exp(c) * E[n - 1, 0])


def _simplex_direct(Y: np.ndarray) -> complex:
    d = len(Y)
    total = (-1) ** d / np.prod(Y)
    for i in range(d):
        others = np.delete(Y, i)
        total += np.exp(Y[i]) / (Y[i] * np.prod(Y[i] - others))
    return complex(total)


def simplex_moment(base, matrix, y) -> complex:
    """Moment of ``base + matrix @ T``, ``T`` the unit simplex.

    Uses the partial-fraction closed form away from confluence and the
    divided difference ``exp[0, Y_1, ..., Y_d]``, ``Y = V^T y``, near it.
    """
    V = np.asarray(matrix, float)
    x0 = np.asarray(base, float)
    det = np.linalg.det(V)
    if not det > 0:
        raise DomainError("simplex matrix needs a positive determinant")
    y = np.asarray(y, complex)
    Y = V.T @ y
    d = len(Y)
    gaps = np.abs(Y)
    if d > 1:
        diff = np.abs(Y[:, None] - Y[None, :])[np.triu_indices(d, 1)]
        gaps = np.concatenate([gaps, diff])
    if np.min(gaps) < CONFLUENCE * (1 + np.max(np.abs(Y))):
        core = exp_divided_difference(np.concatenate([[0], Y]))
    else:
        core = _simplex_direct(Y)
    return complex(np.exp(x0 @ y) * det * core)


def _sinhc(t: complex, delta: float) -> complex:
    u = t * delta
    if abs(u) < 1e-3:
        return delta * (1 + u * u / 24 + u ** 4 / 1920)
    return 2 * cmath.sinh(u / 2) / t


def box_moment(center, widths, y) -> complex:
    """Moment of ``center + widths * (-1/2, 1/2)^d``."""
    c = np.asarray(center, float)
    w = np.asarray(widths, float)
    if np.any(w <= 0):
        raise DomainError("box widths must be positive")
    y = np.asarray(y, complex)
    val = complex(np.exp(c @ y))
    for t, dl in zip(y, w):
        val *= _sinhc(complex(t), float(dl))
    return val


def polygon_moment(vertices, y) -> complex:
    return sum(simplex_moment(s.base, s.matrix, y) for s in Polygon(vertices).triangles())


def shape_moment(inc, y) -> complex:
    """Moment of an inclusion's shape (amplitude not applied)."""
    if isinstance(inc, Ball):
        y = np.asarray(y, complex)
        return complex(np.exp(inc.center @ y)) * ball_moment(inc.radius, y)
    if isinstance(inc, Simplex):
        return simplex_moment(inc.base, inc.matrix, y)
    if isinstance(inc, Box):
        return box_moment(inc.center, inc.widths, y)
    if isinstance(inc, Polygon):
        return sum(simplex_moment(s.base, s.matrix, y) for s in inc.triangles())
    raise UnsupportedError(f"no moment for {type(inc).__name__}")


def configuration_moment(inclusions: Iterable, y) -> complex:
    """``sum_j amplitude_j * moment_j(y)``."""
    total = 0j
    for inc in inclusions:
        total += inc.amplitude * shape_moment(inc, y)
    return total


def difference_moment(cfg1: OrderField, cfg2: OrderField, dir: SphereDirection,
                      omega0) -> complex:
    """``int (alpha1 - alpha2) exp(x.(omega + omega0)) dx`` for piecewise-constant differences."""
    if not cfg1.same_background(cfg2):
        raise UnsupportedError("configurations must share the background")
    y = direction_vector(dir) + np.asarray(omega0, float)
    return configuration_moment(cfg1.inclusions, y) - configuration_moment(cfg2.inclusions, y)


class MomentSampler:
    """``W(direction)`` for a signed list of inclusions.

    ``terms`` holds ``(inclusion, sign)`` pairs; the frequency is
    ``omega(theta, phis) + omega0``.
    """

    def __init__(self, terms, omega0):
        self.terms = [(inc, float(sign)) for inc, sign in terms]
        self.omega0 = np.asarray(omega0, float)

    @classmethod
    def from_fields(cls, cfg1: OrderField, cfg2: OrderField, omega0):
        if not cfg1.same_background(cfg2):
            raise UnsupportedError("configurations must share the background")
        terms = [(i, 1.0) for i in cfg1.inclusions] + [(i, -1.0) for i in cfg2.inclusions]
        return cls(terms, omega0)

    @classmethod
    def from_inclusions(cls, inclusions, omega0):
        return cls([(i, 1.0) for i in inclusions], omega0)

    @property
    def dim(self) -> int:
        return len(self.omega0)

    def frequency(self, dir: SphereDirection) -> np.ndarray:
        return direction_vector(dir) + self.omega0

    def at_frequency(self, y) -> complex:
        # the two signs are summed apart so identical fields cancel exactly
        pos, neg = 0j, 0j
        for inc, sign in self.terms:
            m = abs(sign) * inc.amplitude * shape_moment(inc, y)
            if sign > 0:
                pos += m
            else:
                neg += m
        return pos - neg

    def __call__(self, dir: SphereDirection) -> complex:
        return self.at_frequency(self.frequency(dir))
