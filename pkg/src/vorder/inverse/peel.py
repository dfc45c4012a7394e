"""Recovery of ball inclusions by peeling dominant terms off half-line traces.

Along ``theta = theta~ - iR`` a ball with centre ``x`` contributes

    C exp(a (1 + cos theta) + b sin theta) M_r(theta),

with ``a = x . e_1``, ``b = x . u`` (``u`` the probe's azimuth) and ``M_r``
the centred ball moment.  Its modulus grows like ``exp(cosh R (x . w~))``
times a Bessel factor in ``r``; its phase turns like ``-sinh R (x . w_theta)``.
Each stage fits the dominant remaining term, then all terms found so far are
refined jointly and subtracted exactly before the next stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar
from scipy.special import iv

from ..errors import GenericityError
from ..shapes import Ball
from .probe import HalfLineProbe

FLOOR = 1e-9
MAX_TERMS = 4


@dataclass
class Stage:
    projection: float
    radius: float
    amplitude: float
    a: float
    b: float
    residual: float


@dataclass
class ProbeResult:
    probe: HalfLineProbe
    terms: list
    stages: list
    residual: float
    converged: bool
    detections: list = field(default_factory=list)
    trace: np.ndarray = None

    @property
    def projections(self) -> list:
        return [s.projection for s in self.stages]


@dataclass
class RecoveryReport:
    inclusions: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    status: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.status.get("converged", False))

    def to_dict(self) -> dict:
        from ..shapes import inclusion_to_dict
        return {"inclusions": [inclusion_to_dict(i) for i in self.inclusions],
                "residuals": self.residuals, "diagnostics": self.diagnostics,
                "status": self.status}


class _Profile:
    """Ball profile ``M_r`` and the exponential factor on one probe.

    ``M_r = (2 pi r / f)^{d/2} I_{d/2}(r f)`` with ``f = 2 cos(theta/2)``,
    vectorised through scipy so that the data (self-authored Bessel route)
    and the fitting model are evaluated independently.
    """

    def __init__(self, probe: HalfLineProbe):
        self.probe = probe
        self.th = probe.thetas
        self.f = 2 * np.cos(self.th / 2)
        self.nu = probe.dim / 2
        self.cosh = np.cosh(probe.R_grid)
        self.sinh = np.sinh(probe.R_grid)

    def ball(self, r: float) -> np.ndarray:
        return (2 * np.pi * r / self.f) ** self.nu * iv(self.nu, r * self.f)

    def term(self, r, a, b) -> np.ndarray:
        return np.exp(a * (1 + np.cos(self.th)) + b * np.sin(self.th)) * self.ball(r)


def _loglin_fit(L, cosh, w):
    A = np.column_stack([np.ones_like(cosh), cosh])
    coef, *_ = np.linalg.lstsq(A * w[:, None], L * w, rcond=None)
    return coef, float(np.sum((w * (A @ coef - L)) ** 2))


def _seed(prof: _Profile, V, r, extent, w):
    """Projections for a trial radius: log-linear modulus fit, then a phase matched filter."""
    Z = V / prof.ball(r)
    (_, p), _ = _loglin_fit(np.log(np.abs(Z)), prof.cosh, w)
    Y = Z * np.exp(-p * prof.cosh)
    U = Y / np.abs(Y) * w
    qs = np.linspace(-extent - 1, extent + 1, 4001)
    sc = np.abs(np.exp(1j * np.outer(qs, prof.sinh)) @ U)
    k = int(np.argmax(sc))
    step = qs[1] - qs[0]
    q = float(minimize_scalar(lambda q: -abs(np.sum(U * np.exp(1j * prof.sinh * q))),
                              bounds=(qs[k] - step, qs[k] + step), method="bounded",
                              options={"xatol": 1e-12}).x)
    th = prof.probe.theta_tilde
    return r, p * math.cos(th) - q * math.sin(th), p * math.sin(th) + q * math.cos(th)


def _detect(prof: _Profile, V: np.ndarray, r_max: float, extent: float):
    """Single dominant term in ``V`` as ``(r, a, b, C)``.

    Seeds from several radii are refined by a one-term complex fit whose
    residual is weighted toward large ``R``, where the dominant term is
    cleanest.
    """
    if not np.all(np.abs(V) > 0):
        return None
    w = prof.cosh / prof.cosh[-1]
    weight = w / np.abs(V)
    best = None
    for r in np.linspace(0.02, r_max, 10):
        P, C, _ = _refine(prof, [_seed(prof, V, r, extent, w)], V, r_max, extent, weight)
        res = float(np.max(np.abs(C[0] * prof.term(*P[0]) - V) * weight))
        if best is None or res < best[0]:
            best = (res, P[0], C[0])
    _, (r, a, b), C = best
    return r, a, b, float(C)


def _amplitudes(prof: _Profile, params, W, weight):
    G = np.column_stack([prof.term(r, a, b) for r, a, b in params]) * weight[:, None]
    M = np.vstack([G.real, G.imag])
    t = np.concatenate([(W * weight).real, (W * weight).imag])
    C, *_ = np.linalg.lstsq(M, t, rcond=None)
    return C, M @ C - t


def _refine(prof: _Profile, params, W, r_max, extent, weight=None, nfev=None):
    """Variable-projection refit: amplitudes solved linearly inside the residual."""
    weight = 1 / np.abs(W) if weight is None else weight
    x0 = np.array(params, float).ravel()
    n = len(params)
    lo = np.tile([1e-4, -extent - 1, -extent - 1], n)
    hi = np.tile([r_max, extent + 1, extent + 1], n)
    x0 = np.clip(x0, lo + 1e-9, hi - 1e-9)

    def fun(x):
        return _amplitudes(prof, x.reshape(n, 3), W, weight)[1]

    sol = least_squares(fun, x0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=nfev or 100 * (n + 1), x_scale=np.tile([0.1, 0.1, 0.1], n))
    P = sol.x.reshape(n, 3)
    C, res = _amplitudes(prof, P, W, weight)
    return [tuple(p) for p in P], C, float(np.max(np.abs(res)))


def _best_extension(prof, params, det, W, r_max, extent, floor=FLOOR):
    """Joint refit of ``params`` plus one new term, over several starting guesses.

    Starts: the detected term, the detected projections with a radius grid,
    and terms concentric with each existing one.  Fits with ``|C| > 1`` or
    a collapsed radius are admitted only if nothing else is available.
    """
    r, a, b, _ = det
    grid = np.linspace(0.05, r_max, 6)
    starts = [list(params) + [(r, a, b)]]
    starts += [list(params) + [(rr, a, b)] for rr in grid]
    # concentric hypotheses: re-seed both radii of a term and its new partner
    for i, (_, ai, bi) in enumerate(params if len(params) <= 2 else ()):
        for r1 in grid:
            for r2 in grid[grid > r1]:
                P0 = list(params)
                P0[i] = (r1, ai, bi)
                starts.append(P0 + [(r2, ai, bi)])
    cands = []

    def run(st, nfev=None):
        P, C, _ = _refine(prof, st, W, r_max, extent, nfev=nfev)
        res = _trace_residual(prof, P, C, W)
        plausible = bool(np.all(np.abs(C) < 1) and min(p[0] for p in P) > 2e-3)
        cands.append((not plausible, res, P, C))
        return plausible and res <= floor

    if not any(run(st) for st in starts):
        # ill-conditioned (e.g. nearly concentric) terms need a long polish
        for _, _, P, _ in sorted(cands, key=lambda c: c[:2])[:3]:
            if run(P, nfev=4000):
                break
    _, res, P, C = min(cands, key=lambda c: c[:2])
    return P, C, res


def _trace_residual(prof, params, C, W):
    model = sum(c * prof.term(*p) for c, p in zip(C, params)) if len(C) else 0 * W
    return float(np.max(np.abs(model - W) / np.abs(W)))


def peel_probe(W, probe: HalfLineProbe, r_max: float | None = None,
               extent: float | None = None, floor: float = FLOOR,
               max_terms: int = MAX_TERMS) -> ProbeResult:
    """Peel ball terms off ``W`` along one half-line.

    ``stages`` lists the final terms in dominance order (projection onto
    ``w~`` decreasing, equal projections by decreasing radius), which is the
    order in which the limit argument extracts them.
    """
    r_max = probe.r_max if r_max is None else r_max
    extent = probe.extent if extent is None else extent
    prof = _Profile(probe)
    Wv = probe.sample(W)
    if np.max(np.abs(Wv)) == 0:
        return ProbeResult(probe, [], [], 0.0, True)
    if not np.all(np.abs(Wv) > 0):
        raise GenericityError("trace vanishes at some R; choose another direction")
    params, C, seeds = [], np.zeros(0), []
    V = Wv.copy()
    res = 1.0
    for _ in range(max_terms):
        det = _detect(prof, V, r_max, extent)
        if det is None:
            break
        seeds.append(det)
        params, C, res = _best_extension(prof, [s[:3] for s in seeds[:-1]], det, Wv,
                                         r_max, extent, floor)
        if res <= floor:
            break
        # subtract the detected (not the refitted) terms: a refit with too few
        # terms is pulled toward the weaker ones still present
        V = Wv - sum(c * prof.term(r, a, b) for r, a, b, c in seeds)
    keep = [i for i, c in enumerate(C) if abs(c) > 1e-8]
    if len(keep) < len(params):
        params = [params[i] for i in keep]
        if params:
            params, C, _ = _refine(prof, params, Wv, r_max, extent)
            res = _trace_residual(prof, params, C, Wv)
        else:
            C = np.zeros(0)
    th = probe.theta_tilde
    terms = [(float(c), float(r), float(a), float(b)) for c, (r, a, b) in zip(C, params)]
    stages = [Stage(a * math.cos(th) + b * math.sin(th), r, c, a, b, res)
              for c, r, a, b in terms]
    stages.sort(key=lambda st: (-round(st.projection, 6), -st.radius))
    out = ProbeResult(probe, terms, stages, res, res <= floor)
    out.detections = [dict(zip(("radius", "a", "b", "amplitude"), map(float, d))) for d in seeds]
    model = sum(c * prof.term(r, a, b) for c, r, a, b in terms) if terms else 0 * Wv
    out.trace = np.column_stack([probe.R_grid, np.log(np.abs(Wv)),
                                 np.log(np.maximum(np.abs(model), 1e-300))])
    return out


def _cluster(results, dim, tol_r=2e-2, tol_c=2e-2, tol_a=5e-2):
    clusters = []
    for j, pr in enumerate(results):
        u = pr.probe.azimuth
        e1 = pr.probe.basis[0]
        for C, r, a, b in pr.terms:
            for cl in clusters:
                if (abs(cl["r"][0] - r) < tol_r and abs(cl["C"][0] - C) < tol_c + 0.05 * abs(C)
                        and abs(cl["a"][0] - a) < tol_a):
                    if dim == 2 and np.linalg.norm(cl["x2"][0] - (a * e1 + b * u)) > tol_a:
                        continue
                    break
            else:
                cl = {"r": [], "C": [], "a": [], "rows": [], "rhs": [], "x2": [], "probes": []}
                clusters.append(cl)
            cl["r"].append(r)
            cl["C"].append(C)
            cl["a"].append(a)
            cl["rows"] += [e1, u]
            cl["rhs"] += [a, b]
            cl["x2"].append(a * e1 + b * u)
            cl["probes"].append(j)
    return clusters


def _fan(probe: HalfLineProbe, n: int, seed: int = 0) -> list:
    """``n`` probes sharing the grid of ``probe``: its own angle plus a spread of others."""
    rng = np.random.default_rng(seed)
    out = [probe]
    lim = 1.2
    for j, t in enumerate(np.linspace(-lim, lim, n - 1) if n > 1 else []):
        th = float(np.clip(t + rng.uniform(-0.1, 0.1), -1.45, 1.45))
        phis = tuple(rng.uniform(0.2, 2 * np.pi - 0.2, probe.dim - 2))
        out.append(HalfLineProbe(th, probe.basis, probe.R_grid, phis, probe.extent,
                                 probe.r_max, probe.ball_strip))
    return out


def _perturbed(probe: HalfLineProbe, rng) -> HalfLineProbe:
    th = float(np.clip(probe.theta_tilde + rng.uniform(-0.05, 0.05), -1.45, 1.45))
    phis = tuple(np.asarray(probe.phis) + rng.uniform(-0.05, 0.05, len(probe.phis)))
    return HalfLineProbe(th, probe.basis, probe.R_grid, phis, probe.extent, probe.r_max,
                         probe.ball_strip)


def peel_spherical(W, probe, n_dirs: int | None = None, floor: float = FLOOR,
                   max_terms: int = MAX_TERMS, seed: int = 0, retries: int = 3) -> RecoveryReport:
    """Peel every probe, cluster the detections, triangulate centres.

    ``probe`` is one :class:`HalfLineProbe` (expanded to ``n_dirs`` probes,
    default 1 in the plane and ``d + 1`` otherwise) or a list of probes.
    A probe whose trace vanishes is retried at a perturbed angle.  Returned
    balls are sorted by decreasing ``|amplitude|``.
    """
    if isinstance(probe, HalfLineProbe):
        n = n_dirs or (1 if probe.dim == 2 else probe.dim + 1)
        probes = _fan(probe, n, seed)
    else:
        probes = list(probe)[:n_dirs] if n_dirs else list(probe)
    if W is None or (hasattr(W, "terms") and not W.terms):
        return RecoveryReport([], {}, {"probes": []}, {"converged": True, "partial": False,
                                                        "n_probes": 0})
    dim = probes[0].dim
    rng = np.random.default_rng(seed)
    results, failures = [], []
    for pr in probes:
        for _ in range(retries + 1):
            try:
                results.append(peel_probe(W, pr, floor=floor, max_terms=max_terms))
                break
            except GenericityError as exc:
                failures.append({"theta_tilde": pr.theta_tilde, "reason": str(exc)})
                pr = _perturbed(pr, rng)
    clusters = _cluster(results, dim)
    # a ball must be seen by a majority of the probes (and by two when d > 2)
    need = max(1 if dim == 2 else 2, math.ceil(len(results) / 2))
    balls, partial = [], False
    for cl in clusters:
        rows = np.array(cl["rows"])
        if len(cl["probes"]) < need or np.linalg.matrix_rank(rows, 1e-6) < dim:
            partial = True
            continue
        x, *_ = np.linalg.lstsq(rows, np.array(cl["rhs"]), rcond=None)
        C = float(np.median(cl["C"]))
        r = float(np.median(cl["r"]))
        balls.append(Ball(tuple(x), r, float(np.clip(C, -0.999999, 0.999999))))
    balls.sort(key=lambda b: -abs(b.amplitude))
    report = RecoveryReport(balls)
    report.residuals = {f"probe{j}": pr.residual for j, pr in enumerate(results)}
    report.diagnostics = {
        "probes": [{"theta_tilde": pr.probe.theta_tilde, "phis": list(pr.probe.phis),
                    "stages": [dict(st.__dict__) for st in pr.stages],
                    "detections": pr.detections, "terms": pr.terms,
                    "trace": pr.trace.tolist()} for pr in results],
        "failures": failures,
    }
    converged = bool(results) and all(pr.converged for pr in results) and not partial
    report.status = {"converged": converged, "partial": not converged,
                     "n_probes": len(results)}
    return report
