"""Numerical Laplace inversion on a cotangent contour, and time-domain fluxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigurationError
from .fem import boundary_flux, flux_panel
from .problems import LaplaceFamily, laplace_domain_solution

# cotangent contour shape (optimised parameters for M-node trapezoid rules)
_A, _B, _C, _D = 0.5017, 0.6407, 0.6122, 0.2645


@dataclass(frozen=True)
class ContourSpec:
    nodes: int = 32


def contour(t: float, m: int):
    """Nodes ``z_j`` and weights ``w_j`` with ``f(t) ~ sum_j w_j F(z_j)``."""
    if not t > 0:
        raise ConfigurationError("inversion times must be positive")
    th = -np.pi + (np.arange(m) + 0.5) * 2 * np.pi / m
    s = m / t
    z = s * (_A * th / np.tan(_B * th) - _C + 1j * _D * th)
    dz = s * (_A / np.tan(_B * th) - _A * _B * th / np.sin(_B * th) ** 2 + 1j * _D)
    if np.any((np.abs(z.imag) < 1e-14 * np.abs(z)) & (z.real <= 0)):
        raise ConfigurationError("contour node on the branch cut")
    w = np.exp(z * t) * dz / (1j * m)
    return z, w


def invert_laplace(F: Callable, times, spec: ContourSpec = ContourSpec()):
    """Invert ``F`` (scalar or vector valued) at each time.

    Returns ``(real part, imaginary residue)``; for a real-valued original the
    residue only measures quadrature asymmetry and round-off.
    """
    out = []
    for t in np.atleast_1d(np.asarray(times, float)):
        z, w = contour(float(t), spec.nodes)
        acc = sum(wj * np.asarray(F(zj), complex) for zj, wj in zip(z, w))
        out.append(acc)
    out = np.array(out)
    return out.real, out.imag


@dataclass
class TimeFlux:
    times: np.ndarray
    labels: list
    values: np.ndarray
    residue: np.ndarray

    @property
    def relative_residue(self) -> float:
        scale = np.max(np.abs(self.values))
        return float(np.max(np.abs(self.residue)) / scale) if scale > 0 else 0.0


def time_domain_flux(order, exc, mesh, times, spec: ContourSpec = ContourSpec(),
                     tests=None) -> TimeFlux:
    """Flux pairings of ``U(t, .)`` via complex Laplace-domain solves on the contour."""
    tests = flux_panel(4, 0) if tests is None else tests
    fam = LaplaceFamily(order, exc, mesh)

    def F(p):
        return boundary_flux(fam.solve(p), tests).values

    re, im = invert_laplace(F, times, spec)
    return TimeFlux(np.atleast_1d(np.asarray(times, float)),
                    [getattr(t, "label", str(j)) for j, t in enumerate(tests)], re, im)


@dataclass
class RoundTrip:
    direct: np.ndarray
    transformed: np.ndarray
    error: float
    budget: float
    tail: float
    quadrature: float
    inversion: float

    @property
    def ok(self) -> bool:
        return self.error <= self.budget


def _graded_rule(T: float, panels: int, n: int, grading: float = 0.35):
    edges = np.concatenate([[0.0], T * grading ** np.arange(panels - 1, -1, -1)])
    x, w = np.polynomial.legendre.leggauss(n)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ts.append((b - a) / 2 * x + (a + b) / 2)
        ws.append((b - a) / 2 * w)
    return np.concatenate(ts), np.concatenate(ws)


def laplace_round_trip(order, exc, mesh, p: float = 2.0, T: float = 20.0, panels: int = 10,
                       n: int = 8, spec: ContourSpec = ContourSpec(), tests=None) -> RoundTrip:
    """Re-transform inverted fluxes at real ``p`` and compare with the direct solve.

    The budget adds a tail bound beyond ``T`` (polynomial growth of order
    ``k`` assumed at ``T``), the gap between two quadrature levels, and the
    inversion's imaginary residue integrated against ``exp(-p t)``.
    """
    tests = flux_panel(2, 0) if tests is None else tests
    t1, w1 = _graded_rule(T, panels, n)
    t2, w2 = _graded_rule(T, panels, n + 4)
    times = np.concatenate([t1, t2])
    tf = time_domain_flux(order, exc, mesh, times, spec, tests)
    f1, f2 = tf.values[:len(t1)], tf.values[len(t1):]
    L1 = (w1 * np.exp(-p * t1)) @ f1
    L2 = (w2 * np.exp(-p * t2)) @ f2
    direct = boundary_flux(laplace_domain_solution(p, order, exc, mesh), tests).values.real
    fT = np.max(np.abs(f2[-3:]), axis=0)
    k = exc.k
    tail = float(np.max(fT * math.exp(-p * T) / max(p - k / T, 1e-3)))
    qerr = float(np.max(np.abs(L2 - L1)))
    inv = float(np.max((w2 * np.exp(-p * t2)) @ np.abs(tf.residue[len(t1):])))
    err = float(np.max(np.abs(L2 - direct)))
    budget = tail + qerr + inv + 1e-12 * float(np.max(np.abs(direct)))
    return RoundTrip(direct, L2, err, budget, tail, qerr, inv)
