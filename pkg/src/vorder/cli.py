"""Configuration-driven command line: ``vorder <command> --config run.json``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerics failure.
Log verbosity comes from the ``VORDER_LOG`` environment variable.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .errors import (ConfigurationError, DomainError, GeometryError, IdentifiabilityWarning,
                     NumericsError, PrecisionError, UnsupportedError, VorderError)

log = logging.getLogger("vorder")

COMMANDS = ("forward", "moment", "identity", "recover", "check", "oracle")
EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICS = 0, 1, 2, 3

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "out": "out",
    "domain": {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
    "excitation": {"k": 2, "omega0": [1.0, 0.0], "allow_k0": False},
    "mesh": {"h": 0.04, "dump": False},
    "directions": {"n": 64, "offset": 0.0},
    "probe": {"theta_tilde": 0.0, "R_min": 2.0, "R_max": 4.0, "n_R": 21, "n_dirs": 1,
              "extent": 1.0, "r_max": 1.0},
    "forward": {"p": [0.5, 1.0, 1.5, 2.0], "times": [0.5, 1.0, 2.0], "nodes": 32,
                "n_dirs": 8, "n_hats": 0, "round_trip": False},
    "identity": {"h": [0.04, 0.02]},
    "recover": {"kind": "ball", "fit_directions": 64, "holdout_directions": 32,
                "support_directions": 32},
    "oracle": {"cases": 10, "shapes": ["ball", "simplex", "box"], "dims": [2, 3],
               "complex": True, "y_max": 10.0, "rtol": 1e-8},
}


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


class NumericsFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def schema() -> dict:
    return json.loads(resources.files("vorder").joinpath("data/config_schema.json").read_text())


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, item: str) -> None:
    """``a.b.c=value``; the value is parsed as JSON when possible."""
    if "=" not in item:
        raise UsageError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise UsageError(f"override path {key!r} crosses a scalar")
    node[parts[-1]] = value


def load_config(path=None, command=None, overrides=(), seed=None, out=None, threads=None) -> dict:
    """Read, override, validate and complete a run configuration."""
    raw = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise UsageError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"config is not valid JSON: {exc}") from None
        base_dir = path.resolve().parent
    if command is not None:
        if raw.get("command", command) != command:
            raise UsageError(f"config is for {raw['command']!r}, not {command!r}")
        raw["command"] = command
    for item in overrides:
        apply_override(raw, item)
    for key, val in (("seed", seed), ("threads", threads)):
        if val is not None:
            raw[key] = val
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ValidationFailure(f"config invalid at {where}: {exc.message}") from None
    cfg = _merge(DEFAULTS, raw)
    if out is not None:
        cfg["out"] = str(Path(out).resolve())
    elif not Path(cfg["out"]).is_absolute():
        cfg["out"] = str((base_dir / cfg["out"]).resolve())
    return cfg


# -- building blocks ----------------------------------------------------------

def _pmap(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _orders(cfg):
    from .shapes import OrderField
    out = []
    for key in ("order1", "order2"):
        spec = cfg.get(key)
        if spec is None:
            spec = {"background": cfg.get("order1", {}).get("background", 0.5)}
        spec = dict(spec)
        spec.setdefault("domain", cfg["domain"])
        out.append(OrderField.from_dict(spec))
    return out


def _excitation(cfg):
    from .pde import ExcitationSpec
    e = cfg["excitation"]
    return ExcitationSpec(int(e["k"]), tuple(float(x) for x in e["omega0"]), bool(e["allow_k0"]))


def _grid(n: int, dim: int, offset: float) -> np.ndarray:
    from .inverse.probe import sphere_directions
    if dim == 2:
        t = offset + 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(t), np.sin(t)])
    return sphere_directions(n, dim)


def _omega_cols(dim: int):
    return tuple(f"omega_{c}" for c in "xyzw"[:dim]) if dim <= 4 else \
        tuple(f"omega_{j}" for j in range(dim))


def _probe(cfg, dim):
    from .directions import basis_from
    from .inverse.probe import HalfLineProbe
    p = cfg["probe"]
    R = np.linspace(p["R_min"], p["R_max"], p["n_R"])
    phis = tuple(p.get("phis", [0.7] * (dim - 2)))
    w0 = np.asarray(cfg["excitation"]["omega0"], float)
    return HalfLineProbe(p["theta_tilde"], basis_from(w0), R, phis, p["extent"], p["r_max"])


def _label(s: str) -> str:
    return s.replace(",", ";")


# -- subcommands --------------------------------------------------------------

def cmd_forward(cfg, out: Path) -> int:
    from .pde import LaplaceFamily, boundary_flux, build_mesh, flux_panel
    from .pde.timedomain import ContourSpec, laplace_round_trip, time_domain_flux
    order, _ = _orders(cfg)
    exc = _excitation(cfg)
    mesh = build_mesh(order.domain, cfg["mesh"]["h"])
    f = cfg["forward"]
    tests = flux_panel(f["n_dirs"], f["n_hats"])
    fam = LaplaceFamily(order, exc, mesh)
    traces = _pmap(lambda p: boundary_flux(fam.solve(p), tests), f["p"], cfg["threads"])
    rows = [(p, v.real, v.imag, _label(t.label)) for p, tr in zip(f["p"], traces)
            for t, v in zip(tests, tr.values)]
    io.write_csv(out / "forward_laplace.csv", io.PAIRING_HEADER + ("test",), rows)
    summary = {"n_nodes": mesh.n_nodes, "h": cfg["mesh"]["h"], "tests": [t.label for t in tests]}
    if f["times"]:
        tf = time_domain_flux(order, exc, mesh, f["times"], ContourSpec(f["nodes"]), tests)
        rows = [(t, _label(lab), v, r) for t, vals, res in zip(tf.times, tf.values, tf.residue)
                for lab, v, r in zip(tf.labels, vals, res)]
        io.write_csv(out / "forward_time.csv", ("t", "test", "value", "imag_residue"), rows)
        summary["relative_imag_residue"] = tf.relative_residue
    if f["round_trip"]:
        rt = laplace_round_trip(order, exc, mesh, spec=ContourSpec(f["nodes"]))
        summary["round_trip"] = {"error": rt.error, "budget": rt.budget, "ok": rt.ok,
                                 "tail": rt.tail, "quadrature": rt.quadrature,
                                 "inversion": rt.inversion}
    if cfg["mesh"]["dump"]:
        io.write_json(out / "mesh.json", mesh.to_dict())
    io.write_json(out / "forward.json", summary)
    if f["round_trip"] and not summary["round_trip"]["ok"]:
        raise NumericsFailure("Laplace round trip outside its budget")
    return EXIT_OK


def cmd_moment(cfg, out: Path) -> int:
    from .moments import MomentSampler
    o1, o2 = _orders(cfg)
    w0 = np.asarray(cfg["excitation"]["omega0"], float)
    if len(w0) != o1.dim:
        raise ConfigurationError("omega0 dimension differs from the domain")
    W = MomentSampler.from_fields(o1, o2, w0)
    d = cfg["directions"]
    dirs = _grid(d["n"], o1.dim, d["offset"])
    vals = _pmap(lambda w: W.at_frequency(w + w0), dirs, cfg["threads"])
    rows = [(j, *w, v.real, v.imag) for j, (w, v) in enumerate(zip(dirs, vals))]
    io.write_csv(out / "moment_grid.csv",
                 ("direction_index",) + _omega_cols(o1.dim) + ("value_re", "value_im"), rows)
    probe = _probe(cfg, o1.dim)
    hv = probe.sample(W)
    rows = [(R, v.real, v.imag, math.log(abs(v)) if v != 0 else -math.inf)
            for R, v in zip(probe.R_grid, hv)]
    io.write_csv(out / "moment_halfline.csv", ("R", "value_re", "value_im", "log_abs_W"), rows)
    io.write_json(out / "moment.json", {"max_abs_grid": float(np.max(np.abs(vals))),
                                        "n_directions": len(dirs),
                                        "theta_tilde": probe.theta_tilde})
    return EXIT_OK


def cmd_identity(cfg, out: Path) -> int:
    from .pde import build_mesh, identity_residual
    o1, o2 = _orders(cfg)
    exc = _excitation(cfg)
    d = cfg["directions"]
    dirs = _grid(d["n"], 2, d["offset"])
    hs = cfg["identity"]["h"]

    def run(h):
        return identity_residual(o1, o2, exc, build_mesh(o1.domain, h), dirs)

    reports = _pmap(run, hs, cfg["threads"])
    table = []
    for j, (h, rep) in enumerate(zip(hs, reports)):
        rows = [(i, w[0], w[1], m.real, m.imag, p.real, p.imag, r)
                for i, (w, m, p, r) in enumerate(zip(dirs, rep.moments, rep.pairings,
                                                     rep.residuals))]
        io.write_csv(out / f"identity_residuals_{j}.csv",
                     io.FLUX_HEADER + ("pairing_re", "pairing_im", "residual"), rows)
        ratio = reports[j - 1].max / rep.max if j and rep.max > 0 else math.nan
        table.append((h, rep.max, rep.mean, rep.scale, rep.relative_max, ratio))
    io.write_csv(out / "identity_convergence.csv",
                 ("h", "max_residual", "mean_residual", "scale", "relative_max", "ratio"), table)
    return EXIT_OK


def _truth(o1, o2):
    from .shapes import Ball
    out = []
    for sign, cfg in ((1, o1), (-1, o2)):
        for inc in cfg.inclusions:
            if isinstance(inc, Ball):
                out.append(Ball(inc.center, inc.radius, sign * inc.amplitude))
    return out


def _ball_errors(found, truth):
    """Greedy matching by parameter distance; max abs error per ball."""
    left = list(truth)
    errs = []
    for b in found:
        if not left:
            break
        dist = [np.max(np.abs(np.r_[b.center - t.center, b.radius - t.radius,
                                    b.amplitude - t.amplitude])) for t in left]
        k = int(np.argmin(dist))
        errs.append(float(dist[k]))
        left.pop(k)
    return errs, len(left)


def _recover_balls(cfg, out, o1, o2, W):
    from .inverse import MomentTrace, fit_inclusions, peel_spherical
    rc = cfg["recover"]
    probe = _probe(cfg, o1.dim)
    peel = peel_spherical(W, probe, n_dirs=cfg["probe"]["n_dirs"], seed=cfg["seed"])
    for j, pr in enumerate(peel.diagnostics.get("probes", [])):
        io.write_csv(out / f"recover_trace_probe{j}.csv", io.TRACE_HEADER, pr["trace"])
    count = rc.get("count", len(peel.inclusions))
    if count == 0:
        io.write_json(out / "recovery.json", {"peel": peel, "fit": None})
        return peel.status["converged"]
    trace = MomentTrace.sample(W, _grid(rc["fit_directions"], o1.dim, 0.1))
    hold = None
    if rc["holdout_directions"]:
        hold = MomentTrace.sample(W, _grid(rc["holdout_directions"], o1.dim, 0.37))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IdentifiabilityWarning)
        fit = fit_inclusions(trace, ("ball", count), peel, seed=cfg["seed"], holdout=hold)
    truth = _truth(o1, o2)
    errs, missed = _ball_errors(fit.inclusions, truth)
    report = {"peel": peel, "fit": fit,
              "reference": "order2; only the difference order1 - order2 is recovered",
              "parameter_errors": errs, "unmatched_truth": missed,
              "max_parameter_error": max(errs) if errs else None}
    io.write_json(out / "recovery.json", report)
    return bool(fit.status["converged"]) and not missed


def _recover_simplex(cfg, out, o1, o2, W):
    from .directions import basis_from
    from .inverse import HalfLineProbe, recover_hull, support_function, support_grid
    rc = cfg["recover"]
    w0 = np.asarray(cfg["excitation"]["omega0"], float)
    ext = max(1.0, float(o1.domain.bounding_radius()))
    R = support_grid(ext)
    samples, rows = [], []
    for j, w in enumerate(_grid(rc["support_directions"], o1.dim, 0.05)):
        pr = HalfLineProbe.toward(w, w0, R, extent=ext, ball_strip=False)
        h = support_function(W, pr, seed=cfg["seed"] + j)
        samples.append((w, h))
        rows.append((j, *w, h))
    io.write_csv(out / "support.csv", ("direction_index",) + _omega_cols(o1.dim) + ("h",), rows)
    hull = recover_hull(samples)
    slack = max(h - np.max(hull @ w) for w, h in samples)
    io.write_json(out / "recovery.json", {"hull_vertices": hull, "support_slack": float(slack),
                                          "basis": basis_from(w0)})
    return True


def cmd_recover(cfg, out: Path) -> int:
    from .moments import MomentSampler
    o1, o2 = _orders(cfg)
    w0 = np.asarray(cfg["excitation"]["omega0"], float)
    W = MomentSampler.from_fields(o1, o2, w0)
    ok = (_recover_balls if cfg["recover"]["kind"] == "ball" else _recover_simplex)(
        cfg, out, o1, o2, W)
    if not ok:
        raise NumericsFailure("recovery did not reach its residual floor")
    return EXIT_OK


def cmd_check(cfg, out: Path) -> int:
    from .inverse import check_assumptions
    o1, o2 = _orders(cfg)
    try:
        exc = _excitation(cfg)
    except DomainError:
        exc = None
    rep = check_assumptions(o1, o2, exc)
    if exc is None:
        rep.checks.insert(2, _excluded_k(cfg))
    io.write_json(out / "check.json", rep.to_dict())
    for c in rep.checks:
        log.info("%-22s %s  %s", c.name, c.status, c.detail)
    return EXIT_VALIDATION if any(c.status == "fail" for c in rep.checks) else EXIT_OK


def _excluded_k(cfg):
    from .inverse.assumptions import FAIL, Check
    k = cfg["excitation"]["k"]
    return Check("excitation", FAIL, f"time power k = {k} is not admitted", {"k": k})


def oracle_cases(cfg) -> list:
    from .oracle import random_case
    oc = cfg["oracle"]
    rng = np.random.default_rng(cfg["seed"])
    cases = []
    for kind in oc["shapes"]:
        for d in oc["dims"]:
            for cplx in ((False, True) if oc["complex"] else (False,)):
                for j in range(oc["cases"]):
                    shape, y = random_case(rng, kind, d, cplx, oc["y_max"])
                    cases.append((f"{kind}-d{d}-{'c' if cplx else 'r'}-{j}", shape, y))
    return cases


def cmd_oracle(cfg, out: Path) -> int:
    from .moments import shape_moment
    from .oracle import quadrature_moment
    rtol = cfg["oracle"]["rtol"]
    cases = oracle_cases(cfg)

    def run(case):
        cid, shape, y = case
        q = quadrature_moment(shape, y)
        c = shape_moment(shape, y)
        return cid, q, c, abs(c - q.value) / max(abs(q.value), 1e-300)

    res = _pmap(run, cases, cfg["threads"])
    io.write_csv(out / "oracle.csv", io.ORACLE_HEADER,
                 [(cid, q.value.real, q.value.imag, q.error) for cid, q, _, _ in res])
    io.write_csv(out / "oracle_compare.csv", ("case_id", "closed_re", "closed_im", "rel_error"),
                 [(cid, c.real, c.imag, e) for cid, _, c, e in res])
    worst = max(e for *_, e in res)
    bad = [cid for cid, _, _, e in res if e > rtol]
    io.write_json(out / "oracle.json", {"cases": len(res), "max_rel_error": worst,
                                        "rtol": rtol, "failures": bad})
    if bad:
        raise NumericsFailure(f"{len(bad)} oracle cases exceed rtol {rtol}")
    return EXIT_OK


HANDLERS = {"forward": cmd_forward, "moment": cmd_moment, "identity": cmd_identity,
            "recover": cmd_recover, "check": cmd_check, "oracle": cmd_oracle}


def run(cfg: dict) -> int:
    """Execute a validated configuration and return the exit status."""
    command = cfg.get("command")
    if command not in HANDLERS:
        raise UsageError(f"unknown command {command!r}")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    io.write_json(out / "config.json", cfg | {"out": "."})
    return HANDLERS[command](cfg, out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vorder", description=__doc__.splitlines()[0])
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a (dotted) config key; repeatable")
    return p


def _setup_logging():
    level = os.environ.get("VORDER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        if args.command not in COMMANDS:
            raise UsageError(f"unknown command {args.command!r}")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be positive")
        cfg = load_config(args.config, args.command, args.override, args.seed, args.out,
                          args.threads)
        return run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationFailure, ConfigurationError, DomainError, GeometryError,
            UnsupportedError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericsFailure, NumericsError, PrecisionError, VorderError) as exc:
        print(f"numerics failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
