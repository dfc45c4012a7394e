"""Executable checks of the admissibility conditions behind the uniqueness results."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import GenericityError, SeparationError
from ..geometry import convex_hull_2d, ear_clip
from ..shapes import Ball, Box, OrderField, Polygon, Simplex
from ..directions import separating_direction
from .polytope import cone_condition, group_sum_terms

PASS, FAIL, NA, UNSUPPORTED = "pass", "fail", "not_applicable", "unsupported"


@dataclass
class Check:
    name: str
    status: str
    detail: str = ""
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail,
                "witness": _plain(self.witness)}


@dataclass
class AssumptionReport:
    checks: list

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def ok(self) -> bool:
        return all(c.status in (PASS, NA) for c in self.checks)

    @property
    def partial(self) -> bool:
        return any(c.status == UNSUPPORTED for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "partial": self.partial,
                "checks": [c.to_dict() for c in self.checks]}


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


# -- order bound and placement ------------------------------------------------

def _order_bound(cfg: OrderField, label: str) -> Check:
    lo, hi = cfg.value_range()
    margin = 2 * lo - hi
    ok = 0 < lo and hi < 1 and margin > 0
    return Check(f"order_bound[{label}]", PASS if ok else FAIL,
                 f"range [{lo:.6g}, {hi:.6g}]; need 0 < inf, sup < 1, sup < 2 inf",
                 {"inf": lo, "sup": hi, "margin": margin})


def _balls_inside(cfg1: OrderField, cfg2: OrderField) -> Check:
    incs = cfg1.inclusions + cfg2.inclusions
    if not incs or not all(isinstance(i, Ball) for i in incs):
        return Check("balls_inside", NA, "not a ball configuration")
    margins = [cfg1.inclusion_margin(b) for b in cfg1.inclusions] + \
              [cfg2.inclusion_margin(b) for b in cfg2.inclusions]
    bad = [i for i, m in enumerate(margins) if m <= 0]
    return Check("balls_inside", FAIL if bad else PASS,
                 "closed balls must lie inside the domain",
                 {"margins": margins, "violations": bad})


# -- planar piecewise-constant differences -----------------------------------

def _polygons(inc):
    if isinstance(inc, Polygon):
        return inc.vertices
    if isinstance(inc, (Simplex, Box)) and inc.dim == 2:
        v = inc.vertices
        return v if isinstance(inc, Simplex) else v[[0, 2, 3, 1]]
    return None


def _difference(cfg1, cfg2):
    return lambda p: cfg1.inclusion_values(p) - cfg2.inclusion_values(p)


def _segment_intersections(edges):
    pts = []
    for (a, b), (c, d) in itertools.combinations(edges, 2):
        r, s = b - a, d - c
        den = r[0] * s[1] - r[1] * s[0]
        if abs(den) < 1e-14:
            continue
        t = ((c - a)[0] * s[1] - (c - a)[1] * s[0]) / den
        u = ((c - a)[0] * r[1] - (c - a)[1] * r[0]) / den
        if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
            pts.append(a + t * r)
    return pts


def _ring(diff, x, eps, n=720):
    ang = 2 * np.pi * (np.arange(n) + 0.5) / n
    pts = x + eps * np.column_stack([np.cos(ang), np.sin(ang)])
    return ang, diff(pts)


def _sectors(vals, tol=1e-12):
    """Contiguous runs of equal nonzero values around a circle, as (start, stop, value)."""
    n = len(vals)
    nz = np.abs(vals) > tol
    if not nz.any():
        return []
    if nz.all() and np.all(np.abs(vals - vals[0]) <= tol):
        return [(0, n, float(vals[0]))]
    # rotate so that index 0 starts a new run
    change = [i for i in range(n) if abs(vals[i] - vals[i - 1]) > tol]
    s0 = change[0] if change else 0
    v = np.roll(vals, -s0)
    runs, start = [], 0
    for i in range(1, n + 1):
        if i == n or abs(v[i] - v[start]) > tol:
            if abs(v[start]) > tol:
                runs.append(((start + s0) % n, (i + s0) % n, float(v[start])))
            start = i
    return runs


def _support_vertices(cfg1, cfg2):
    polys = [p for p in (_polygons(i) for i in cfg1.inclusions + cfg2.inclusions)]
    edges = [(P[i], P[(i + 1) % len(P)]) for P in polys for i in range(len(P))]
    cand = np.array([v for P in polys for v in P] + _segment_intersections(edges))
    scale = max(1.0, float(np.max(np.abs(cand))))
    eps = 1e-7 * scale
    diff = _difference(cfg1, cfg2)
    keep = []
    for x in cand:
        if any(np.linalg.norm(x - y) < 1e-10 * scale for y in keep):
            continue
        _, vals = _ring(diff, x, eps)
        if np.any(np.abs(vals) > 1e-12):
            keep.append(x)
    return np.array(keep), polys, eps


def _hull_vertex_check(cfg1, cfg2) -> Check:
    incs = cfg1.inclusions + cfg2.inclusions
    polys = [_polygons(i) for i in incs]
    if not incs:
        return Check("isolated_hull_vertex", NA, "no inclusions")
    if any(p is None for p in polys):
        return Check("isolated_hull_vertex", UNSUPPORTED,
                     "needs planar polygonal inclusions (simplex, box, polygon)")
    supp, polys, eps = _support_vertices(cfg1, cfg2)
    if len(supp) == 0:
        return Check("isolated_hull_vertex", PASS, "the two orders coincide", {"identical": True})
    hull = convex_hull_2d(supp)
    diff = _difference(cfg1, cfg2)
    triangulation = [[P[list(t)].tolist() for t in ear_clip(P)] for P in polys]
    shared, witness = [], None
    for x in hull:
        ang, vals = _ring(diff, x, eps)
        runs = _sectors(vals)
        if len(runs) == 1:
            a0, a1, v = runs[0]
            witness = {"vertex": x, "value": v,
                       "sector": [float(ang[a0]), float(ang[(a1 - 1) % len(ang)])]}
            break
        shared.append({"vertex": x, "values": sorted({r[2] for r in runs})})
    base = {"hull": hull, "support_vertices": supp, "triangulation": triangulation}
    if witness is not None:
        return Check("isolated_hull_vertex", PASS,
                     "a hull vertex of supp(a1 - a2) is a vertex of a single simplex",
                     {**base, "witness": witness})
    return Check("isolated_hull_vertex", FAIL,
                 "every hull vertex is shared by regions with different values",
                 {**base, "shared": shared})


# -- vertex sets and cone condition ------------------------------------------

def _vertex_set(cfg):
    out = []
    for inc in cfg.inclusions:
        if isinstance(inc, Ball):
            return None
        out.extend(np.asarray(inc.extreme_points(), float))
    return np.array(out).reshape(-1, cfg.dim)


def _disjoint_vertices(cfg1, cfg2) -> Check:
    V1, V2 = _vertex_set(cfg1), _vertex_set(cfg2)
    if V1 is None or V2 is None:
        return Check("disjoint_vertices", NA, "ball inclusions have no vertices")
    if not len(V1) or not len(V2):
        return Check("disjoint_vertices", PASS, "one vertex set is empty")
    common = [v for v in V1 if np.min(np.linalg.norm(V2 - v, axis=1)) < 1e-12]
    return Check("disjoint_vertices", FAIL if common else PASS,
                 "polyhedra of the two orders share no vertex", {"common": common})


def _simplices(cfg, sign):
    out = []
    for inc in cfg.inclusions:
        if isinstance(inc, Simplex):
            out.append((inc, sign * inc.amplitude))
        elif isinstance(inc, Polygon):
            out.extend((t, sign * inc.amplitude) for t in inc.triangles())
        else:
            return None
    return out


def _edges_at(simp: Simplex, z):
    V = simp.vertices
    k = int(np.argmin(np.linalg.norm(V - z, axis=1)))
    return np.column_stack([V[j] - V[k] for j in range(len(V)) if j != k])


def _cone_check(cfg1, cfg2, seed=0) -> Check:
    d = cfg1.dim
    if d < 3:
        return Check("vertex_cone", NA, "only required for d >= 3")
    s1, s2 = _simplices(cfg1, 1.0), _simplices(cfg2, -1.0)
    if s1 is None or s2 is None:
        return Check("vertex_cone", UNSUPPORTED, "needs simplex inclusions")
    simp = s1 + s2
    if not simp:
        return Check("vertex_cone", PASS, "no inclusions")
    pts = np.vstack([s.vertices for s, _ in simp])
    rng = np.random.default_rng(seed)
    tried = []
    for z in np.unique(pts.round(12), axis=0):
        try:
            wt, gap = separating_direction(pts, z)
        except SeparationError:
            continue
        group = [(_edges_at(s, z), c) for s, c in simp
                 if np.min(np.linalg.norm(s.vertices - z, axis=1)) < 1e-12]
        g = rng.standard_normal(d)
        wp = g - (g @ wt) * wt
        wp /= np.linalg.norm(wp)
        cone = cone_condition(group, wt, wp)
        try:
            total = complex(np.sum(group_sum_terms(group, wt, wp)))
        except GenericityError:
            total = 0j
        rec = {"vertex": z, "omega_t": wt, "omega_p": wp, "gap": gap,
               "cone_margin": cone.min_margin, "group_sum": [total.real, total.imag]}
        tried.append(rec)
        if cone.holds or abs(total) > 1e-12:
            return Check("vertex_cone", PASS, "cone condition (a)" if cone.holds
                         else "nonvanishing group sum (b)", rec)
    return Check("vertex_cone", FAIL, "no hull vertex satisfies (a) or (b)", {"tried": tried})


def check_assumptions(cfg1: OrderField, cfg2: OrderField, exc=None) -> AssumptionReport:
    """Per-condition pass/fail report with witnesses for a pair of order fields.

    Conditions that do not apply to the shapes present are marked
    ``not_applicable``; shape mixtures the geometric search cannot handle
    are marked ``unsupported`` and make the report partial.
    """
    checks = [_order_bound(cfg1, "1"), _order_bound(cfg2, "2")]
    if exc is not None:
        checks.append(Check("excitation", FAIL if exc.k == 1 else PASS,
                            f"time power k = {exc.k}; k = 1 is excluded", {"k": exc.k}))
    if not cfg1.same_background(cfg2):
        checks.append(Check("shared_background", FAIL, "backgrounds differ"))
    checks.append(_balls_inside(cfg1, cfg2))
    balls = all(isinstance(i, Ball) for i in cfg1.inclusions + cfg2.inclusions)
    if balls:
        checks += [Check("isolated_hull_vertex", NA, "ball configuration"),
                   Check("disjoint_vertices", NA, "ball configuration"),
                   Check("vertex_cone", NA, "ball configuration")]
    else:
        if cfg1.dim == 2:
            checks.append(_hull_vertex_check(cfg1, cfg2))
        else:
            checks.append(Check("isolated_hull_vertex", UNSUPPORTED,
                                "geometric search implemented in the plane"))
        checks.append(_disjoint_vertices(cfg1, cfg2))
        checks.append(_cone_check(cfg1, cfg2))
    return AssumptionReport(checks)
