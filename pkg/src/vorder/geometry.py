"""Domains and small planar-geometry helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError


def polygon_area(verts: np.ndarray) -> float:
    x, y = np.asarray(verts, float).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def points_in_polygon(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Even-odd rule; points on the boundary may go either way."""
    p = np.atleast_2d(points)
    v = np.asarray(verts, float)
    x, y = p[:, 0], p[:, 1]
    inside = np.zeros(len(p), bool)
    n = len(v)
    for i in range(n):
        x0, y0 = v[i]
        x1, y1 = v[(i + 1) % n]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xc)
    return inside


def segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(points)
    ab = b - a
    t = np.clip(((p - a) @ ab) / max(ab @ ab, 1e-300), 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * ab), axis=1)


def polygon_boundary_distance(points, verts) -> np.ndarray:
    v = np.asarray(verts, float)
    d = np.full(len(np.atleast_2d(points)), np.inf)
    for i in range(len(v)):
        d = np.minimum(d, segment_distance(points, v[i], v[(i + 1) % len(v)]))
    return d


def _is_ear(v, i, j, k, idx):
    a, b, c = v[i], v[j], v[k]
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if cross <= 0:
        return False
    for m in idx:
        if m in (i, j, k):
            continue
        p = v[m]
        d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
        d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
        if d1 >= 0 and d2 >= 0 and d3 >= 0:
            return False
    return True


def ear_clip(verts) -> list[tuple[int, int, int]]:
    """Triangulate a simple polygon; returns counter-clockwise index triples."""
    v = np.asarray(verts, float)
    n = len(v)
    if n < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    idx = list(range(n))
    if polygon_area(v) < 0:
        idx.reverse()
    tris = []
    guard = 0
    while len(idx) > 3:
        m = len(idx)
        for t in range(m):
            i, j, k = idx[t - 1], idx[t], idx[(t + 1) % m]
            if _is_ear(v, i, j, k, idx):
                tris.append((i, j, k))
                idx.pop(t)
                break
        else:
            # collinear leftovers: drop a flat vertex
            for t in range(m):
                i, j, k = idx[t - 1], idx[t], idx[(t + 1) % m]
                a, b, c = v[i], v[j], v[k]
                if abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) < 1e-14:
                    idx.pop(t)
                    break
            else:
                raise GeometryError("polygon is not simple")
        guard += 1
        if guard > 10 * n:
            raise GeometryError("ear clipping did not terminate")
    tris.append(tuple(idx))
    return tris


def convex_hull_2d(points) -> np.ndarray:
    """Monotone chain; returns hull vertices counter-clockwise, no collinear points."""
    pts = sorted(set(map(tuple, np.asarray(points, float))))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    kind = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")
        if len(self.center) < 2:
            raise GeometryError("disk center needs dimension >= 2")

    @property
    def dim(self) -> int:
        # a "disk" of dimension d is the d-ball; only d = 2 is meshed
        return len(self.center)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.linalg.norm(p - np.asarray(self.center), axis=1) < self.radius

    def boundary_distance(self, points) -> np.ndarray:
        """Signed distance to the boundary, positive inside."""
        p = np.atleast_2d(points)
        return self.radius - np.linalg.norm(p - np.asarray(self.center), axis=1)

    def boundary_points(self, s) -> np.ndarray:
        """Boundary at arclength fraction ``s`` in [0, 1)."""
        t = 2 * np.pi * np.asarray(s, float)
        c = np.asarray(self.center)
        return c + self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius)

    def to_dict(self) -> dict:
        return {"kind": "disk", "center": list(map(float, self.center)),
                "radius": float(self.radius)}


@dataclass(frozen=True)
class PolygonDomain:
    vertices: tuple

    kind = "polygon"

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon domain needs >= 3 planar vertices")
        if abs(polygon_area(v)) < 1e-14:
            raise GeometryError("degenerate polygon domain")
        if polygon_area(v) < 0:
            object.__setattr__(self, "vertices", tuple(map(tuple, v[::-1])))

    @property
    def dim(self) -> int:
        return 2

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, float)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return points_in_polygon(p, self.array) & (
            polygon_boundary_distance(p, self.array) > 0)

    def boundary_distance(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        d = polygon_boundary_distance(p, self.array)
        return np.where(points_in_polygon(p, self.array), d, -d)

    def boundary_points(self, s) -> np.ndarray:
        v = self.array
        seg = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        cum = np.concatenate([[0], np.cumsum(seg)]) / seg.sum()
        s = np.mod(np.asarray(s, float), 1.0)
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(v) - 1)
        t = (s - cum[i]) / (cum[i + 1] - cum[i])
        return v[i] + t[..., None] * (np.roll(v, -1, axis=0)[i] - v[i])

    def bounding_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.array, axis=1)))

    def to_dict(self) -> dict:
        return {"kind": "polygon", "vertices": [list(map(float, p)) for p in self.vertices]}


def domain_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "disk":
        return Disk(tuple(d["center"]), float(d["radius"]))
    if kind == "polygon":
        return PolygonDomain(tuple(map(tuple, d["vertices"])))
    raise GeometryError(f"unknown domain kind {kind!r}")


def unit_disk() -> Disk:
    return Disk((0.0, 0.0), 1.0)
