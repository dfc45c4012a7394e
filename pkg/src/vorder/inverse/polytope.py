"""Support functions of simplex configurations, hull recovery, and vertex group sums."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

from ..errors import GenericityError, GeometryError
from .probe import HalfLineProbe

INSTABILITY = 0.05


@dataclass
class SupportFit:
    h: float
    slope: float
    offset: float
    rms: float
    theta_tilde: float
    direction: np.ndarray

    @property
    def stable(self) -> bool:
        return self.rms <= INSTABILITY


def support_fit(W, probe: HalfLineProbe) -> SupportFit:
    """Fit ``log|W(theta~ - iR)| = h cosh R + c R + d`` on the probe grid.

    ``Re omega(theta~ - iR) = cosh R * w~``, so the leading growth of a vertex
    term is ``exp(cosh R (x . w~))`` and ``h`` comes out without a factor 2.
    Rows are weighted by ``cosh R`` since subdominant vertices fade with R.
    """
    vals = probe.sample(W)
    if not np.all(np.abs(vals) > 0):
        return SupportFit(float("nan"), float("nan"), float("nan"), float("inf"),
                          probe.theta_tilde, probe.omega_tilde)
    R = probe.R_grid
    A = np.column_stack([np.cosh(R), R, np.ones_like(R)])
    L = np.log(np.abs(vals))
    w = np.cosh(R) / np.cosh(R[-1])
    coef, *_ = np.linalg.lstsq(A * w[:, None], L * w, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - L) ** 2)))
    return SupportFit(float(coef[0]), float(coef[1]), float(coef[2]), rms,
                      probe.theta_tilde, probe.omega_tilde)


def support_grid(extent: float, n: int = 29, span: float = 2.8) -> np.ndarray:
    """``n`` points ending just inside the overflow budget for ``|x| <= extent``."""
    from .probe import OVERFLOW_BUDGET
    r_top = math.log(2 * (OVERFLOW_BUDGET - 50) / (extent + 2))
    return np.linspace(r_top - span, r_top, n)


def support_function(W, probe: HalfLineProbe, retries: int = 4, step: float = 2e-3,
                     seed: int = 0) -> float:
    """``h(w~)``, the largest vertex projection onto the probe direction.

    When the log-modulus fit is unstable (two vertices with nearly equal
    projections beat against each other) the direction is perturbed by
    ``step`` and the most stable fit is kept; the support function is
    Lipschitz so the perturbation error is at most ``step * max |x|``.
    """
    rng = np.random.default_rng(seed)
    best = support_fit(W, probe)
    pr = probe
    for _ in range(retries):
        if best.stable:
            break
        th = probe.theta_tilde + step * rng.choice([-1, 1]) * rng.uniform(0.5, 1)
        phis = tuple(np.asarray(probe.phis) + step * rng.uniform(-1, 1, len(probe.phis)))
        pr = HalfLineProbe(th, probe.basis, probe.R_grid, phis, probe.extent, probe.r_max,
                           probe.ball_strip)
        fit = support_fit(W, pr)
        if fit.rms < best.rms:
            best = fit
    if not np.isfinite(best.h):
        raise GenericityError("support fit failed at every tried direction")
    return best.h


def _chebyshev_center(A: np.ndarray, b: np.ndarray):
    norms = np.linalg.norm(A, axis=1)
    d = A.shape[1]
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.column_stack([A, norms]), b_ub=b,
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status == 3:
        raise GeometryError("half-spaces do not bound a polytope")
    if res.status != 0 or res.x[-1] <= 1e-12:
        raise GeometryError("half-spaces have an empty interior")
    return res.x[:d], res.x[-1]


def _merge(points: np.ndarray, tol: float) -> np.ndarray:
    out = []
    used = np.zeros(len(points), bool)
    for i in range(len(points)):
        if used[i]:
            continue
        close = np.linalg.norm(points - points[i], axis=1) <= tol
        close &= ~used
        used |= close
        out.append(points[close].mean(axis=0))
    return np.array(out)


def _monotone_chain(pts: np.ndarray) -> np.ndarray:
    """Indices of the counter-clockwise convex hull (collinear points dropped)."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))

    def cross(o, a, b):
        return (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1]) - \
               (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])

    lower, upper = [], []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(i)
    for i in reversed(order):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(i)
    return np.array(lower[:-1] + upper[:-1])


def _drop_collinear(v: np.ndarray, tol: float) -> np.ndarray:
    keep = []
    n = len(v)
    for i in range(n):
        a, b, c = v[i - 1], v[i], v[(i + 1) % n]
        ab, bc = b - a, c - b
        area = abs(ab[0] * bc[1] - ab[1] * bc[0])
        if area > tol * np.linalg.norm(c - a):
            keep.append(i)
    return v[keep]


def _cover(points: np.ndarray, W: np.ndarray, H: np.ndarray, tol: float) -> np.ndarray:
    """Greedy set cover: every sampled plane must touch some vertex.

    Corners are taken by decreasing number of still unexplained planes
    touching them (within ``tol``).  Spurious corners of the circumscribed
    polytope only touch planes already explained by true vertices.
    """
    tight = np.abs(points @ W.T - H) <= tol
    left = np.ones(len(H), bool)
    chosen = []
    while left.any():
        gain = (tight & left).sum(axis=1)
        k = int(np.argmax(gain))
        if gain[k] == 0:
            break
        chosen.append(k)
        left &= ~tight[k]
    out = []
    for k in chosen:
        # least-squares point of all planes touching the corner
        x, *_ = np.linalg.lstsq(W[tight[k]], H[tight[k]], rcond=None)
        out.append(x)
    return np.array(out)


def recover_hull(samples, merge_tol: float = 2e-2) -> np.ndarray:
    """Vertices of the polytope with support samples ``(w, h)``.

    The sampled half-spaces ``x . w <= h`` circumscribe the polytope; where
    a normal cone was not sampled they leave spurious corners.  Each sampled
    plane touches a true vertex, so vertices are chosen as a greedy cover
    of the planes (touching within ``merge_tol / 2``), near duplicates are
    merged, and in the plane the result is returned counter-clockwise.  2-D intersection is done by
    dualising about an interior point; higher dimensions use qhull.
    """
    if len(samples) == 0:
        raise GeometryError("no support samples")
    W = np.array([np.asarray(w, float) for w, _ in samples])
    H = np.array([float(h) for _, h in samples])
    d = W.shape[1]
    if len(W) < d + 1 or np.linalg.matrix_rank(W) < d:
        raise GeometryError(f"need >= {d + 1} directions spanning R^{d}")
    norms = np.linalg.norm(W, axis=1)
    W, H = W / norms[:, None], H / norms
    c, _ = _chebyshev_center(W, H)
    if d == 2:
        hs = H - W @ c
        idx = _monotone_chain(W / hs[:, None])
        if len(idx) < 3:
            raise GeometryError("support data do not enclose a polygon")
        corners = np.array([np.linalg.solve(np.vstack([W[i], W[j]]), [hs[i], hs[j]]) + c
                            for i, j in zip(idx, np.roll(idx, -1))])
    else:
        corners = HalfspaceIntersection(np.column_stack([W, -H]), c).intersections
    v = _merge(_cover(corners, W, H, merge_tol / 2), merge_tol)
    if len(v) < d + 1:
        raise GeometryError("support data collapse to a degenerate polytope")
    if d == 2:
        v = v[_monotone_chain(v)]
        return _drop_collinear(v, merge_tol / 10)
    return v[ConvexHull(v).vertices]


def _factors(V: np.ndarray, z: np.ndarray) -> np.ndarray:
    return V.T @ z


def group_sum_terms(simplices, omega_t, omega_p, tol: float = 1e-12) -> np.ndarray:
    """Individual terms ``C_i |det V_i| prod_j (V_i^T (w~ + i w'))_j^{-1}``."""
    wt = np.asarray(omega_t, float)
    wp = np.asarray(omega_p, float)
    if abs(np.linalg.norm(wt) - 1) > 1e-9 or abs(np.linalg.norm(wp) - 1) > 1e-9:
        raise GeometryError("omega_t and omega_p must be unit vectors")
    if abs(wt @ wp) > 1e-9:
        raise GeometryError("omega_p must be orthogonal to omega_t")
    z = wt + 1j * wp
    out = []
    for V, C in simplices:
        V = np.asarray(V, float)
        f = _factors(V, z)
        if np.any(np.abs(f) <= tol * np.linalg.norm(V, axis=0)):
            raise GenericityError("a factor V^T(w~ + i w') vanishes; direction is not generic")
        out.append(C * abs(np.linalg.det(V)) / np.prod(f))
    return np.array(out, complex)


def vertex_group_sum(simplices, omega_t, omega_p) -> complex:
    """Leading coefficient of the simplices sharing one hull vertex."""
    return complex(np.sum(group_sum_terms(simplices, omega_t, omega_p)))


@dataclass
class ConeReport:
    holds: bool
    margins: np.ndarray
    arguments: np.ndarray | None = None

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))


def cone_condition(simplices, omega_t, omega_p=None) -> ConeReport:
    """Every edge ``V_i e_j`` lies in ``{x . w~ < -|x| cos(pi / 2d)}``.

    Margins are ``-|V e_j| cos(pi/2d) - V e_j . w~`` (positive when the edge
    is inside).  With ``omega_p`` the arguments of the unit-amplitude terms
    relative to ``d pi`` are returned as well; each should be below ``pi/2``
    in modulus when the condition holds.
    """
    wt = np.asarray(omega_t, float)
    d = len(wt)
    cos = math.cos(math.pi / (2 * d))
    margins = []
    for V, _ in simplices:
        V = np.asarray(V, float)
        margins.append(-np.linalg.norm(V, axis=0) * cos - V.T @ wt)
    margins = np.concatenate(margins)
    args = None
    if omega_p is not None:
        terms = group_sum_terms([(V, 1.0) for V, _ in simplices], wt, omega_p)
        args = np.abs(np.angle(terms * np.exp(-1j * d * math.pi)))
    return ConeReport(bool(np.all(margins > 0)), margins, args)
