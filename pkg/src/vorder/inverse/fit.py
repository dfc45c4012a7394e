"""Parametric least-squares refinement of inclusions against sampled moments."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import least_squares

from ..errors import ConfigurationError, IdentifiabilityWarning
from ..shapes import Ball, Box, Simplex
from .peel import RecoveryReport
from .probe import MomentTrace

RANK_TOL = 1e-10


def _pack(inc) -> np.ndarray:
    if inc.kind == "ball":
        return np.concatenate([[inc.amplitude, inc.radius], inc.center])
    if inc.kind == "simplex":
        return np.concatenate([[inc.amplitude], inc.base, inc.matrix.ravel()])
    if inc.kind == "box":
        return np.concatenate([[inc.amplitude], inc.center, inc.widths])
    raise ConfigurationError(f"cannot fit inclusions of kind {inc.kind!r}")


def _oriented(m: np.ndarray) -> np.ndarray:
    # the simplex is unchanged by reordering edge vectors; keep det > 0
    return m[:, [1, 0] + list(range(2, m.shape[1]))] if np.linalg.det(m) < 0 else m


def _size(kind: str, d: int) -> int:
    return {"ball": 2 + d, "simplex": 1 + d + d * d, "box": 1 + 2 * d}[kind]


class _Model:
    """Unchecked moment of a parameter vector (the optimiser may visit
    non-admissible shapes; validation happens on the returned inclusions)."""

    def __init__(self, kind: str, count: int, dim: int):
        if kind not in ("ball", "simplex", "box"):
            raise ConfigurationError(f"unknown model kind {kind!r}")
        self.kind, self.count, self.dim = kind, count, dim
        self.size = _size(kind, dim)

    @property
    def n_params(self) -> int:
        return self.size * self.count

    def blocks(self, x):
        return np.asarray(x, float).reshape(self.count, self.size)

    def moment(self, x, y) -> complex:
        from ..moments import ball_moment, box_moment, simplex_moment
        d = self.dim
        total = 0j
        for blk in self.blocks(x):
            c = blk[0]
            if self.kind == "ball":
                r, ctr = blk[1], blk[2:]
                total += c * np.exp(ctr @ y) * ball_moment(max(r, 1e-12), y)
            elif self.kind == "simplex":
                total += c * simplex_moment(blk[1:1 + d], _oriented(blk[1 + d:].reshape(d, d)), y)
            else:
                total += c * box_moment(blk[1:1 + d], np.abs(blk[1 + d:]), y)
        return total

    def bounds(self):
        lo = np.full(self.n_params, -np.inf)
        hi = np.full(self.n_params, np.inf)
        b = self.blocks(np.arange(self.n_params))
        amp = b[:, 0].astype(int)
        lo[amp], hi[amp] = -1.0, 1.0
        if self.kind == "ball":
            lo[b[:, 1].astype(int)] = 1e-6
        if self.kind == "box":
            lo[b[:, 1 + self.dim:].astype(int).ravel()] = 1e-6
        return lo, hi

    def inclusions(self, x) -> list:
        d, out = self.dim, []
        for blk in self.blocks(x):
            c = float(np.clip(blk[0], -0.999999, 0.999999))
            if self.kind == "ball":
                out.append(Ball(blk[2:], float(blk[1]), c))
            elif self.kind == "simplex":
                out.append(Simplex(blk[1:1 + d], _oriented(blk[1 + d:].reshape(d, d)), c))
            else:
                out.append(Box(blk[1:1 + d], blk[1 + d:], c))
        return out


def _init_from(init, model: _Model, rng) -> np.ndarray:
    if isinstance(init, RecoveryReport):
        init = init.inclusions
    if init:
        incs = [i for i in init if i.kind == model.kind][:model.count]
        x = [_pack(i) for i in incs]
        while len(x) < model.count:
            x.append(_random_block(model, rng))
        return np.concatenate(x)
    return np.concatenate([_random_block(model, rng) for _ in range(model.count)])


def _random_block(model: _Model, rng) -> np.ndarray:
    d = model.dim
    c = rng.uniform(0.1, 0.4) * rng.choice([-1, 1])
    if model.kind == "ball":
        return np.concatenate([[c, rng.uniform(0.1, 0.3)], rng.uniform(-0.4, 0.4, d)])
    if model.kind == "simplex":
        return np.concatenate([[c], rng.uniform(-0.4, 0.0, d), (0.3 * np.eye(d)).ravel()])
    return np.concatenate([[c], rng.uniform(-0.4, 0.4, d), rng.uniform(0.1, 0.4, d)])


def model_residual(model: _Model, x, trace: MomentTrace, scale: float) -> np.ndarray:
    r = np.array([model.moment(x, y) for y in trace.frequencies]) - trace.values
    r = r / scale
    return np.concatenate([r.real, r.imag])


def fit_inclusions(trace: MomentTrace, model=("ball", 1), init=None, seed: int = 0,
                   restarts: int = 4, holdout: MomentTrace | None = None) -> RecoveryReport:
    """Trust-region fit of ``count`` inclusions of one ``kind`` to ``trace``.

    ``init`` may be a :class:`RecoveryReport` (e.g. from the peel), a list of
    inclusions, or ``None`` for seeded random starts.  Residuals are relative
    to ``max |W|`` on the trace.  The smallest Jacobian singular value at the
    optimum is reported; a rank-deficient Jacobian raises an
    :class:`IdentifiabilityWarning`.
    """
    kind, count = model
    dim = trace.directions.shape[1]
    mdl = _Model(kind, int(count), dim)
    if trace.values is None:
        raise ConfigurationError("trace has no values")
    n_real = 2 * len(trace.values)
    if len(trace.values) < 3 * mdl.n_params:
        raise ConfigurationError(f"need >= {3 * mdl.n_params} samples for {mdl.n_params} parameters")
    scale = float(np.max(np.abs(trace.values))) or 1.0
    rng = np.random.default_rng(seed)
    lo, hi = mdl.bounds()
    fun = lambda x: model_residual(mdl, x, trace, scale)

    starts = [_init_from(init, mdl, rng)]
    if init is None or len(starts[0]) != mdl.n_params:
        starts += [_init_from(None, mdl, rng) for _ in range(restarts)]

    def solve(x0, nfev, jac):
        x0 = np.clip(x0, lo + 1e-12, hi - 1e-12)
        return least_squares(fun, x0, bounds=(lo, hi), method="trf", xtol=1e-15, ftol=1e-15,
                             gtol=1e-15, max_nfev=nfev, jac=jac)

    best = None
    for x0 in starts:
        sol = solve(x0, 40 * mdl.n_params, "2-point")
        if best is None or sol.cost < best.cost:
            best = sol
        if np.max(np.abs(sol.fun)) < 1e-10:
            break
    best = solve(best.x, 100 * mdl.n_params, "3-point")
    sv = np.linalg.svd(best.jac, compute_uv=False)
    s_min = float(sv[-1]) if len(sv) else 0.0
    rank_deficient = s_min <= RANK_TOL * float(sv[0])
    if rank_deficient:
        warnings.warn(f"Jacobian is rank deficient (s_min = {s_min:.3e})", IdentifiabilityWarning,
                      stacklevel=2)
    incs = mdl.inclusions(best.x)
    residual = float(np.max(np.abs(best.fun)))
    report = RecoveryReport(incs)
    report.residuals = {"fit": residual, "rms": float(np.sqrt(2 * best.cost / n_real))}
    if holdout is not None:
        hs = float(np.max(np.abs(holdout.values))) or 1.0
        report.residuals["holdout"] = float(np.max(np.abs(model_residual(mdl, best.x, holdout, hs))))
    report.diagnostics = {"smallest_singular_value": s_min, "singular_values": sv.tolist(),
                          "nfev": int(best.nfev), "parameters": best.x.tolist(), "model": [kind, count]}
    report.status = {"converged": residual < 1e-10, "rank_deficient": bool(rank_deficient),
                     "optimizer": best.message}
    return report
