"""Brute-force quadrature for exponential moments, independent of the closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, OraclePrecisionError, UnsupportedError
from .shapes import Ball, Box, Polygon, Simplex


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate.

    method: ``"tensor"`` (mapped Gauss rules, order escalation),
    ``"adaptive"`` (fixed rule on 2^k subcells per axis, k escalated) or
    ``"montecarlo"``.
    """

    method: str = "tensor"
    start_order: int = 8
    max_order: int = 96
    rtol: float = 1e-11
    samples: int = 200_000
    seed: int = 0


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    order: int
    history: tuple = ()


@lru_cache(maxsize=None)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _composite01(n: int, cells: int):
    x, w = _gauss01(n)
    edges = np.linspace(0, 1, cells + 1)
    h = np.diff(edges)
    X = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    W = (h[:, None] * w[None, :]).ravel()
    return X, W


def _tensor(rules):
    pts = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), -1)
    wts = np.ones(pts.shape[:-1])
    for k, r in enumerate(rules):
        shape = [1] * len(rules)
        shape[k] = -1
        wts = wts * r[1].reshape(shape)
    return pts.reshape(-1, len(rules)), wts.ravel()


def _ball_nodes(radius, d, n, cells):
    """Polar / spherical rule: Gauss in radius and polar angle, trapezoid in azimuth."""
    rr, wr = _composite01(n, cells)
    rr, wr = rr * radius, wr * radius
    m = 2 * n * cells + 2
    phi = 2 * np.pi * np.arange(m) / m
    wphi = np.full(m, 2 * np.pi / m)
    if d == 2:
        R, P = np.meshgrid(rr, phi, indexing="ij")
        W = np.outer(wr * rr, wphi)
        pts = np.stack([R * np.cos(P), R * np.sin(P)], -1).reshape(-1, 2)
        return pts, W.ravel()
    if d == 3:
        u, wu = _composite01(n, cells)
        ct, wct = 2 * u - 1, 2 * wu
        R, C, P = np.meshgrid(rr, ct, phi, indexing="ij")
        S = np.sqrt(1 - C ** 2)
        pts = np.stack([R * S * np.cos(P), R * S * np.sin(P), R * C], -1).reshape(-1, 3)
        W = (wr * rr ** 2)[:, None, None] * wct[None, :, None] * wphi[None, None, :]
        return pts, W.ravel()
    raise UnsupportedError("ball quadrature implemented for d = 2, 3")


def _simplex_nodes(base, matrix, n, cells):
    """Collapsed (Duffy) coordinates on the unit simplex, mapped affinely."""
    V = np.asarray(matrix, float)
    d = V.shape[0]
    U, W = _tensor([_composite01(n, cells)] * d)
    X = np.empty_like(U)
    jac = np.ones(len(U))
    rest = np.ones(len(U))
    for k in range(d):
        # x_k ranges over [0, rest] where rest = prod_{j<k} (1 - u_j)
        X[:, k] = rest * U[:, k]
        jac *= rest
        rest = rest * (1 - U[:, k])
    pts = np.asarray(base, float) + X @ V.T
    return pts, W * jac * abs(np.linalg.det(V))


def _box_nodes(center, widths, n, cells):
    c = np.asarray(center, float)
    w = np.asarray(widths, float)
    rules = []
    for ck, wk in zip(c, w):
        x, q = _composite01(n, cells)
        rules.append((ck - wk / 2 + wk * x, wk * q))
    return _tensor(rules)


def _nodes(shape, n, cells):
    if isinstance(shape, Ball):
        pts, w = _ball_nodes(shape.radius, shape.dim, n, cells)
        return pts + shape.center, w
    if isinstance(shape, Simplex):
        return _simplex_nodes(shape.base, shape.matrix, n, cells)
    if isinstance(shape, Box):
        return _box_nodes(shape.center, shape.widths, n, cells)
    if isinstance(shape, Polygon):
        parts = [_simplex_nodes(s.base, s.matrix, n, cells) for s in shape.triangles()]
        return np.vstack([p for p, _ in parts]), np.concatenate([w for _, w in parts])
    raise UnsupportedError(f"no quadrature for {type(shape).__name__}")


def _integrate(shape, y, n, cells):
    pts, w = _nodes(shape, n, cells)
    return complex(np.sum(w * np.exp(pts @ y)))


def _sample_uniform(shape, m, rng):
    d = shape.dim
    if isinstance(shape, Ball):
        g = rng.standard_normal((m, d))
        g /= np.linalg.norm(g, axis=1)[:, None]
        r = shape.radius * rng.random(m) ** (1 / d)
        vol = math.pi ** (d / 2) * shape.radius ** d / math.gamma(d / 2 + 1)
        return shape.center + g * r[:, None], vol
    if isinstance(shape, Simplex):
        e = rng.exponential(size=(m, d + 1))
        lam = e / e.sum(axis=1, keepdims=True)
        vol = np.linalg.det(shape.matrix) / math.factorial(d)
        return shape.base + lam[:, 1:] @ shape.matrix.T, vol
    if isinstance(shape, Box):
        u = rng.random((m, d)) - 0.5
        return shape.center + u * shape.widths, float(np.prod(shape.widths))
    raise UnsupportedError(f"no sampler for {type(shape).__name__}")


def quadrature_moment(shape, y, spec: QuadratureSpec = QuadratureSpec()) -> QuadratureResult:
    """Numerically integrate ``exp(x.y)`` over ``shape``.

    Tensor rules escalate the per-axis order until two successive values agree
    to ``spec.rtol``; the last difference is the error estimate.
    """
    y = np.asarray(y, complex)
    if len(y) != shape.dim:
        raise DomainError("frequency dimension differs from the shape")
    if spec.method == "montecarlo":
        rng = np.random.default_rng(spec.seed)
        pts, vol = _sample_uniform(shape, spec.samples, rng)
        f = np.exp(pts @ y)
        val = vol * f.mean()
        err = vol * math.sqrt((np.var(f.real) + np.var(f.imag)) / spec.samples)
        return QuadratureResult(complex(val), float(err), spec.samples)
    if spec.method not in ("tensor", "adaptive"):
        raise DomainError(f"unknown quadrature method {spec.method!r}")
    if np.linalg.norm(y) > 40 and spec.method == "tensor":
        raise DomainError("tensor rules are limited to |y| <= 40")
    history = []
    prev = None
    if spec.method == "tensor":
        steps = [(n, 1) for n in range(spec.start_order, spec.max_order + 1, 8)]
    else:
        steps = [(spec.start_order, 2 ** k) for k in range(0, 7)]
    best_err = math.inf
    for n, cells in steps:
        val = _integrate(shape, y, n, cells)
        if prev is not None:
            err = abs(val - prev)
            best_err = err
            history.append(err)
            if err <= spec.rtol * abs(val) or (abs(val) == 0 and err == 0):
                return QuadratureResult(val, float(err), n * cells, tuple(history))
        prev = val
    raise OraclePrecisionError("quadrature escalation did not converge",
                               value=prev, error=best_err)


def random_case(rng, kind: str, d: int, complex_y: bool = False, y_max: float = 10.0):
    """A random ``(shape, y)`` pair with ``|y| <= y_max``."""
    if kind == "ball":
        shape = Ball(rng.uniform(-0.3, 0.3, d), rng.uniform(0.1, 0.6))
    elif kind == "simplex":
        while True:
            m = rng.uniform(-0.6, 0.6, (d, d))
            if np.linalg.det(m) > 0.02:
                break
        shape = Simplex(rng.uniform(-0.3, 0.3, d), m)
    elif kind == "box":
        shape = Box(rng.uniform(-0.3, 0.3, d), rng.uniform(0.1, 0.8, d))
    else:
        raise DomainError(f"unknown shape kind {kind!r}")
    g = rng.standard_normal(d)
    if complex_y:
        g = g + 1j * rng.standard_normal(d)
    y = g / np.linalg.norm(g) * rng.uniform(0.1, y_max)
    return shape, y
