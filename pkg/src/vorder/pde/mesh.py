"""Triangular meshes of 2-D domains and the quadrature sets used for assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.spatial import Delaunay

from ..errors import MeshError
from ..geometry import Disk, PolygonDomain, points_in_polygon

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    domain: object = None
    h: float = math.nan

    def __post_init__(self):
        for a in (self.nodes, self.triangles, self.boundary_edges):
            a.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @property
    def edge_normals(self) -> np.ndarray:
        """Outward unit normals of the (counter-clockwise) boundary edges."""
        d = self.nodes[self.boundary_edges[:, 1]] - self.nodes[self.boundary_edges[:, 0]]
        n = np.column_stack([d[:, 1], -d[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def pattern(self):
        """CSR pattern of P1 matrices and the map from local 3x3 entries to its data."""
        T = self.triangles
        rows = np.repeat(T, 3, axis=1).ravel()
        cols = np.tile(T, (1, 3)).ravel()
        n = self.n_nodes
        key = rows * n + cols
        uniq, inv = np.unique(key, return_inverse=True)
        indptr = np.searchsorted(uniq // n, np.arange(n + 1))
        return indptr, uniq % n, inv

    def assemble(self, local: np.ndarray):
        """Sparse matrix from per-triangle 3x3 blocks."""
        indptr, indices, inv = self.pattern
        data = np.bincount(inv, weights=local.real.ravel(), minlength=len(indices))
        if np.iscomplexobj(local):
            data = data + 1j * np.bincount(inv, weights=local.imag.ravel(),
                                           minlength=len(indices))
        return sp.csr_matrix((data, indices.copy(), indptr.copy()),
                             shape=(self.n_nodes, self.n_nodes))

    def max_edge(self) -> float:
        e = self.edges
        return float(np.max(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)))

    def to_dict(self) -> dict:
        return {"nodes": self.nodes.tolist(), "triangles": self.triangles.tolist(),
                "boundary_edges": self.boundary_edges.tolist()}


def _disk_points(dom: Disk, s: float):
    c = np.asarray(dom.center, float)
    R = dom.radius
    n_rings = max(1, math.ceil(R / s))
    pts = [c[None, :]]
    for k in range(1, n_rings + 1):
        r = R * k / n_rings
        m = max(6, math.ceil(2 * math.pi * r / s))
        t = 2 * math.pi * (np.arange(m) + _GOLDEN * k) / m
        pts.append(c + r * np.column_stack([np.cos(t), np.sin(t)]))
    return np.vstack(pts), len(pts[-1])


def _polygon_points(dom: PolygonDomain, s: float):
    v = dom.array
    bnd = []
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        m = max(1, math.ceil(np.linalg.norm(b - a) / s))
        t = np.arange(m) / m
        bnd.append(a + t[:, None] * (b - a))
    bnd = np.vstack(bnd)
    lo, hi = v.min(axis=0), v.max(axis=0)
    # triangular lattice for the interior
    dy = s * math.sqrt(3) / 2
    rows = []
    for j, y in enumerate(np.arange(lo[1], hi[1] + dy, dy)):
        x = np.arange(lo[0] + (s / 2) * (j % 2), hi[0] + s, s)
        rows.append(np.column_stack([x, np.full_like(x, y)]))
    grid = np.vstack(rows)
    keep = dom.boundary_distance(grid) > 0.45 * s
    return np.vstack([bnd, grid[keep]]), len(bnd)


def build_mesh(domain, h: float) -> Mesh:
    """Quasi-uniform Delaunay triangulation with longest edge at most ``h``."""
    if not h > 0:
        raise MeshError("mesh size must be positive")
    if getattr(domain, "dim", 2) != 2:
        raise MeshError("only planar domains are meshed")
    s = h / 1.5
    if isinstance(domain, Disk):
        pts, nb = _disk_points(domain, s)
        bidx = np.arange(len(pts) - nb, len(pts))
    elif isinstance(domain, PolygonDomain):
        pts, nb = _polygon_points(domain, s)
        bidx = np.arange(nb)
    else:
        raise MeshError(f"cannot mesh {type(domain).__name__}")
    if nb < 3:
        raise MeshError("fewer than three boundary nodes")
    tri = Delaunay(pts).simplices
    cen = pts[tri].mean(axis=1)
    if isinstance(domain, PolygonDomain):
        tri = tri[points_in_polygon(cen, domain.array)]
    p = pts[tri]
    area = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    tri = np.where((area < 0)[:, None], tri[:, [0, 2, 1]], tri)
    keep = np.abs(area) > 1e-14 * h * h
    tri = tri[keep]
    # boundary edges in counter-clockwise order
    bedges = np.column_stack([bidx, np.roll(bidx, -1)])
    mesh = Mesh(pts, tri.astype(np.int64), bedges.astype(np.int64), domain, h)
    _check(mesh)
    return mesh


def _check(mesh: Mesh):
    if np.any(mesh.areas <= 0):
        raise MeshError("non-positive triangle area")
    t = mesh.triangles
    e = np.sort(np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshError("non-conforming triangulation")
    nb = int(np.sum(counts == 1))
    if nb != len(mesh.boundary_edges):
        raise MeshError("boundary edges do not trace the domain boundary")


# quadrature -----------------------------------------------------------------

# degree-2 rule with interior points (barycentric, weights sum to 1)
_RULE_L = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
_RULE_W = np.full(3, 1 / 3)


def _subdivide(levels: int):
    """Barycentric quadrature on ``4**levels`` congruent subtriangles."""
    tris = [np.eye(3)]
    for _ in range(levels):
        nxt = []
        for a, b, c in tris:
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            nxt += [np.array(v) for v in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (bc, ca, ab))]
        tris = nxt
    lam = np.vstack([_RULE_L @ t for t in tris])
    w = np.tile(_RULE_W, len(tris)) / len(tris)
    return lam, w


@dataclass(frozen=True, eq=False)
class QuadratureSet:
    """Points carried by each triangle: ``tri`` index, barycentrics, weights, coordinates."""

    tri: np.ndarray
    lam: np.ndarray
    weight: np.ndarray
    xy: np.ndarray
    n_cut: int = 0

    @classmethod
    def build(cls, mesh: Mesh, interfaces=(), levels: int = 4) -> "QuadratureSet":
        """Degree-2 rule everywhere; triangles cut by an inclusion get ``4**levels`` pieces."""
        T = mesh.triangles
        P = mesh.nodes[T]
        area = mesh.areas
        cen = P.mean(axis=1)
        diam = np.max(np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2), axis=1)
        cut = np.zeros(len(T), bool)
        for inc in interfaces:
            cut |= inc.distance_bound(cen) <= diam
        parts = []
        for mask, (lam, w) in ((~cut, (_RULE_L, _RULE_W)), (cut, _subdivide(levels))):
            idx = np.flatnonzero(mask)
            if len(idx) == 0:
                continue
            tri = np.repeat(idx, len(w))
            L = np.tile(lam, (len(idx), 1))
            W = (area[idx][:, None] * w[None, :]).ravel()
            xy = np.einsum("pk,pkj->pj", L, P[tri])
            parts.append((tri, L, W, xy))
        tri, lam, w, xy = (np.concatenate([p[i] for p in parts]) for i in range(4))
        return cls(tri, lam, w, xy, int(cut.sum()))

    def local_mass(self, n_tri: int, qvals: np.ndarray) -> np.ndarray:
        """Per-triangle blocks of ``int q phi_a phi_b``."""
        wq = self.weight * qvals
        out = np.zeros((n_tri, 3, 3), complex)
        for a in range(3):
            for b in range(a, 3):
                v = wq * self.lam[:, a] * self.lam[:, b]
                blk = np.bincount(self.tri, v.real, n_tri) + 1j * np.bincount(self.tri, v.imag, n_tri)
                out[:, a, b] = blk
                out[:, b, a] = blk
        return out

    def interpolate(self, mesh: Mesh, nodal) -> np.ndarray:
        vals = np.asarray(nodal)[mesh.triangles[self.tri]]
        return np.sum(self.lam * vals, axis=1)
