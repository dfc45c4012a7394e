"""Inclusion shapes and piecewise-constant order fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigurationError, DomainError, GeometryError
from .geometry import (Disk, PolygonDomain, domain_from_dict, ear_clip,
                       polygon_area, points_in_polygon, polygon_boundary_distance)


def _vec(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


def _check_amplitude(a: float):
    if not -1.0 < a < 1.0:
        raise ConfigurationError(f"amplitude {a} outside (-1, 1)")


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float
    amplitude: float = 0.1

    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        _check_amplitude(self.amplitude)

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.linalg.norm(p - self.center, axis=1) < self.radius

    def distance_bound(self, points) -> np.ndarray:
        """Lower bound on the distance to the shape boundary."""
        p = np.atleast_2d(points)
        return np.abs(np.linalg.norm(p - self.center, axis=1) - self.radius)

    def extreme_points(self) -> np.ndarray:
        return self.center[None, :]

    def params(self) -> dict:
        return {"center": self.center.tolist(), "radius": float(self.radius)}

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius}, amplitude={self.amplitude})"


@dataclass(frozen=True, eq=False)
class Simplex:
    """``base + matrix @ T`` with ``T`` the unit simplex."""

    base: np.ndarray
    matrix: np.ndarray
    amplitude: float = 0.1

    kind = "simplex"

    def __post_init__(self):
        object.__setattr__(self, "base", _vec(self.base))
        object.__setattr__(self, "matrix", _vec(self.matrix))
        d = len(self.base)
        if self.matrix.shape != (d, d):
            raise GeometryError("simplex matrix must be d x d")
        if not np.linalg.det(self.matrix) > 0:
            raise DomainError("simplex matrix needs a positive determinant")
        _check_amplitude(self.amplitude)

    @property
    def dim(self) -> int:
        return len(self.base)

    @property
    def vertices(self) -> np.ndarray:
        return np.vstack([self.base, self.base + self.matrix.T])

    def barycentric(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        lam = np.linalg.solve(self.matrix, (p - self.base).T).T
        return np.column_stack([1 - lam.sum(axis=1), lam])

    def contains(self, points) -> np.ndarray:
        return np.all(self.barycentric(points) > 0, axis=1)

    def distance_bound(self, points) -> np.ndarray:
        # max over facets of signed plane distance: exact inside, a lower bound outside
        p = np.atleast_2d(points)
        v = self.vertices
        d = self.dim
        out = np.full(len(p), -np.inf)
        for i in range(d + 1):
            face = np.delete(v, i, axis=0)
            # unit normal of the facet opposite vertex i, pointing outward
            diffs = face[1:] - face[0]
            _, _, vt = np.linalg.svd(diffs.reshape(d - 1, d) if d > 1 else diffs)
            n = vt[-1]
            if np.dot(v[i] - face[0], n) > 0:
                n = -n
            out = np.maximum(out, (p - face[0]) @ n)
        return np.abs(out)

    def extreme_points(self) -> np.ndarray:
        return self.vertices

    def params(self) -> dict:
        return {"base": self.base.tolist(), "matrix": self.matrix.tolist()}

    def __repr__(self):
        return (f"Simplex(base={self.base.tolist()}, matrix={self.matrix.tolist()}, "
                f"amplitude={self.amplitude})")


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``center + widths * (-1/2, 1/2)^d``."""

    center: np.ndarray
    widths: np.ndarray
    amplitude: float = 0.1

    kind = "box"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "widths", _vec(self.widths))
        if self.widths.shape != self.center.shape or not np.all(self.widths > 0):
            raise DomainError("box widths must be positive and match the center")
        _check_amplitude(self.amplitude)

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all(np.abs(p - self.center) < self.widths / 2, axis=1)

    def distance_bound(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        q = np.abs(p - self.center) - self.widths / 2
        outside = np.linalg.norm(np.maximum(q, 0), axis=1)
        inside = np.minimum(q.max(axis=1), 0)
        return np.abs(outside + inside)

    @property
    def vertices(self) -> np.ndarray:
        d = self.dim
        signs = np.array(np.meshgrid(*[[-0.5, 0.5]] * d, indexing="ij")).reshape(d, -1).T
        return self.center + signs * self.widths

    def extreme_points(self) -> np.ndarray:
        return self.vertices

    def params(self) -> dict:
        return {"center": self.center.tolist(), "widths": self.widths.tolist()}

    def __repr__(self):
        return (f"Box(center={self.center.tolist()}, widths={self.widths.tolist()}, "
                f"amplitude={self.amplitude})")


@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple planar polygon, carried as an ear-clipped set of triangles."""

    vertices: np.ndarray
    amplitude: float = 0.1

    kind = "polygon"

    def __post_init__(self):
        v = np.array(self.vertices, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon inclusion needs >= 3 planar vertices")
        if polygon_area(v) < 0:
            v = v[::-1].copy()
        if abs(polygon_area(v)) < 1e-14:
            raise GeometryError("degenerate polygon")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        _check_amplitude(self.amplitude)

    @property
    def dim(self) -> int:
        return 2

    def triangles(self) -> list[Simplex]:
        v = self.vertices
        out = []
        for i, j, k in ear_clip(v):
            m = np.column_stack([v[j] - v[i], v[k] - v[i]])
            out.append(Simplex(v[i], m, self.amplitude))
        return out

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return points_in_polygon(p, self.vertices) & (
            polygon_boundary_distance(p, self.vertices) > 0)

    def distance_bound(self, points) -> np.ndarray:
        return polygon_boundary_distance(points, self.vertices)

    def extreme_points(self) -> np.ndarray:
        return self.vertices

    def params(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    def __repr__(self):
        return f"Polygon(vertices={self.vertices.tolist()}, amplitude={self.amplitude})"


Inclusion = Union[Ball, Simplex, Box, Polygon]


def inclusion_from_dict(d: dict) -> Inclusion:
    kind = d.get("kind")
    p = d.get("params", {})
    a = float(d.get("amplitude", 0.0))
    try:
        if kind == "ball":
            return Ball(p["center"], float(p["radius"]), a)
        if kind == "simplex":
            return Simplex(p["base"], p["matrix"], a)
        if kind == "box":
            return Box(p["center"], p["widths"], a)
        if kind == "polygon":
            return Polygon(p["vertices"], a)
    except KeyError as exc:
        raise ConfigurationError(f"{kind} inclusion is missing {exc}") from None
    raise ConfigurationError(f"unknown inclusion kind {kind!r}")


def inclusion_to_dict(inc: Inclusion) -> dict:
    return {"kind": inc.kind, "params": inc.params(), "amplitude": float(inc.amplitude)}


@dataclass(frozen=True)
class AffineBackground:
    """Smooth background ``value + gradient . x``."""

    value: float
    gradient: tuple

    def __call__(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        return self.value + p @ np.asarray(self.gradient, float)

    def to_dict(self) -> dict:
        return {"kind": "affine", "value": float(self.value),
                "gradient": list(map(float, self.gradient))}


@dataclass(eq=False)
class OrderField:
    """``alpha(x) = background(x) + sum_j amplitude_j 1_{D_j}(x)``."""

    background: Union[float, AffineBackground]
    inclusions: list = field(default_factory=list)
    domain: Union[Disk, PolygonDomain, None] = None

    def __post_init__(self):
        self.inclusions = list(self.inclusions)
        if self.domain is None:
            self.domain = Disk((0.0,) * self.dim, 1.0)
        for inc in self.inclusions:
            if inc.dim != self.dim:
                raise GeometryError("inclusion dimension differs from the domain")

    @property
    def dim(self) -> int:
        if self.domain is not None:
            return self.domain.dim
        if self.inclusions:
            return self.inclusions[0].dim
        return 2

    def background_values(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        if callable(self.background):
            return np.asarray(self.background(p), float)
        return np.full(len(p), float(self.background))

    def inclusion_values(self, points) -> np.ndarray:
        p = np.atleast_2d(points)
        out = np.zeros(len(p))
        for inc in self.inclusions:
            out += inc.amplitude * inc.contains(p)
        return out

    def __call__(self, points) -> np.ndarray:
        return self.background_values(points) + self.inclusion_values(points)

    def same_background(self, other: "OrderField") -> bool:
        a, b = self.background, other.background
        if callable(a) or callable(b):
            return a == b
        return float(a) == float(b)

    def sample_points(self, n: int = 200) -> np.ndarray:
        """Grid over the domain's bounding box plus a few points per inclusion."""
        d = self.dim
        r = self.domain.bounding_radius()
        m = n if d == 2 else max(12, int(round(n ** (2 / d))))
        axes = [np.linspace(-r, r, m)] * d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        extra = []
        for inc in self.inclusions:
            ext = inc.extreme_points()
            c = ext.mean(axis=0)
            extra.append(c[None, :])
            extra.append(c + 0.999 * (ext - c))
            if isinstance(inc, Ball):
                extra.append(inc.center + 0.5 * inc.radius * np.eye(d))
        pts = np.vstack([grid] + extra) if extra else grid
        return pts[self.domain.contains(pts)]

    def value_range(self, n: int = 200) -> tuple[float, float]:
        vals = self(self.sample_points(n))
        return float(vals.min()), float(vals.max())

    def inclusion_margin(self, inc) -> float:
        """Distance from the inclusion closure to the domain boundary (> 0 inside)."""
        if isinstance(inc, Ball):
            return float(self.domain.boundary_distance(inc.center[None, :])[0] - inc.radius)
        pts = inc.extreme_points()
        return float(np.min(self.domain.boundary_distance(pts)))

    def validate(self):
        """Raise ConfigurationError unless the field is admissible."""
        lo, hi = self.value_range()
        if not (0 < lo and hi < 1):
            raise ConfigurationError(f"order values [{lo}, {hi}] leave (0, 1)")
        if not hi < 2 * lo:
            raise ConfigurationError(f"sup {hi} is not below twice the inf {lo}")
        for inc in self.inclusions:
            if self.inclusion_margin(inc) <= 0:
                raise ConfigurationError(f"{inc!r} is not strictly inside the domain")
        return self

    def to_dict(self) -> dict:
        bg = self.background
        if isinstance(bg, AffineBackground):
            bgd = bg.to_dict()
        elif callable(bg):
            raise ConfigurationError("callable backgrounds cannot be serialized")
        else:
            bgd = float(bg)
        return {"d": self.dim, "domain": self.domain.to_dict(), "background": bgd,
                "inclusions": [inclusion_to_dict(i) for i in self.inclusions]}

    @classmethod
    def from_dict(cls, d: dict) -> "OrderField":
        try:
            dom = domain_from_dict(d["domain"])
            bg = d["background"]
        except KeyError as exc:
            raise ConfigurationError(f"order field is missing {exc}") from None
        if isinstance(bg, dict):
            if bg.get("kind") != "affine":
                raise ConfigurationError("unknown background kind")
            bg = AffineBackground(float(bg["value"]), tuple(bg["gradient"]))
        else:
            bg = float(bg)
        incs = [inclusion_from_dict(x) for x in d.get("inclusions", [])]
        out = cls(bg, incs, dom)
        if "d" in d and int(d["d"]) != out.dim:
            raise ConfigurationError("declared dimension does not match the domain")
        return out
