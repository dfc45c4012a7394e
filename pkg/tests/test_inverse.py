import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vorder.directions import basis_from
from vorder.errors import (ConfigurationError, DomainError, GenericityError, GeometryError,
                           IdentifiabilityWarning)
from vorder.inverse import (HalfLineProbe, MomentTrace, check_assumptions, circle_directions,
                            cone_condition, fit_inclusions, group_sum_terms, peel_probe,
                            peel_spherical, recover_hull, support_fit, support_function,
                            support_grid, vertex_group_sum)
from vorder.io import json_text
from vorder.moments import MomentSampler
from vorder.pde import ExcitationSpec
from vorder.shapes import Ball, Box, OrderField, Polygon, Simplex

W0 = np.array([1.0, 0.0])
R = np.arange(2.0, 4.0001, 0.1)


def probe2(theta=0.0, grid=R):
    return HalfLineProbe(theta, basis_from(W0), grid)


def sampler(*incs, w0=W0):
    return MomentSampler.from_inclusions(incs, w0)


# ---- probes -----------------------------------------------------------------

def test_probe_rejects_overflowing_grid():
    with pytest.raises(ConfigurationError):
        HalfLineProbe(0.0, basis_from(W0), np.linspace(2, 7, 10))


def test_probe_rejects_angle_outside_strip():
    with pytest.raises(DomainError):
        HalfLineProbe(1.7, basis_from(W0), R)
    HalfLineProbe(1.7, basis_from(W0), R, ball_strip=False)


def test_probe_geometry():
    pr = HalfLineProbe.toward(np.array([0.6, 0.8]), W0, R)
    assert np.allclose(pr.omega_tilde, [0.6, 0.8])
    assert abs(pr.omega_tilde @ pr.omega_theta) < 1e-14
    with pytest.raises(DomainError):
        HalfLineProbe(0.0, np.eye(3), R)


def test_moment_trace_frequencies():
    W = sampler(Ball((0.1, 0.2), 0.3, 0.2))
    tr = MomentTrace.sample(W, circle_directions(8))
    assert np.allclose(tr.frequencies, circle_directions(8) + W0)
    assert tr.values[0] == pytest.approx(W.at_frequency(tr.frequencies[0]))


# ---- peeling ----------------------------------------------------------------

def test_peel_empty_configuration():
    W = MomentSampler([], W0)
    res = peel_probe(W, probe2())
    assert res.converged and res.terms == [] and res.residual == 0.0
    rep = peel_spherical(W, probe2())
    assert rep.inclusions == [] and rep.ok


def test_peel_single_ball_is_exact():
    ball = Ball((0.3, -0.2), 0.25, 0.3)
    res = peel_probe(sampler(ball), probe2(0.4))
    assert res.converged and res.residual < 1e-12
    (C, r, a, b), = res.terms
    assert abs(C - 0.3) < 1e-10 and abs(r - 0.25) < 1e-10
    pr = res.probe
    assert abs(res.stages[0].projection - ball.center @ pr.omega_tilde) < 1e-10


def test_peel_concentric_pair():
    inner, outer = Ball((0.1, 0.1), 0.2, 0.3), Ball((0.1, 0.1), 0.35, -0.2)
    rep = peel_spherical(sampler(inner, outer), probe2(0.2))
    assert rep.status["converged"]
    got = sorted(rep.inclusions, key=lambda b: b.radius)
    assert len(got) == 2
    for g, t in zip(got, (inner, outer)):
        assert abs(g.radius - t.radius) < 1e-2
        assert np.max(np.abs(g.center - t.center)) < 1e-2


def test_stages_follow_dominance_order():
    balls = [Ball((0.3, 0.2), 0.2, 0.3), Ball((-0.4, -0.1), 0.25, -0.2)]
    res = peel_probe(sampler(*balls), probe2(0.3))
    proj = [st.projection for st in res.stages]
    assert all(p0 >= p1 - 1e-12 for p0, p1 in zip(proj, proj[1:]))
    want = sorted((b.center @ res.probe.omega_tilde for b in balls), reverse=True)
    assert np.allclose(proj, want, atol=1e-8)


def test_peel_vanishing_trace_is_retried():
    W = sampler(Ball((0.1, 0.0), 0.3, 0.2))
    bad = 0.5

    def Wz(direction):
        # vanishes along the first probe only
        return 0j if abs(direction.theta.real - bad) < 1e-12 and direction.theta.imag < -3.9 else W(direction)

    with pytest.raises(GenericityError):
        peel_probe(Wz, probe2(bad))
    rep = peel_spherical(Wz, probe2(bad))
    assert rep.diagnostics["failures"] and len(rep.inclusions) == 1


def test_peel_three_dimensional_ball():
    w0 = np.array([0.0, 0.0, 1.0])
    ball = Ball((0.2, -0.1, 0.3), 0.3, 0.25)
    pr = HalfLineProbe(0.3, basis_from(w0), R, (0.9,))
    rep = peel_spherical(sampler(ball, w0=w0), pr)
    (b,), = [rep.inclusions]
    assert np.allclose(b.center, ball.center, atol=1e-6)
    assert abs(b.radius - 0.3) < 1e-6


@given(st.floats(0.25, 3.0))
@settings(max_examples=4, deadline=None)
def test_amplitude_scaling_keeps_geometry(lam):
    ball = Ball((0.2, 0.1), 0.3, 0.25)
    base = peel_spherical(sampler(ball), probe2(0.3)).inclusions[0]
    scaled = peel_spherical(sampler(Ball(ball.center, ball.radius, 0.25 * lam / 3)),
                            probe2(0.3)).inclusions[0]
    assert np.allclose(scaled.center, base.center, atol=1e-8)
    assert abs(scaled.radius - base.radius) < 1e-8
    assert abs(scaled.amplitude - base.amplitude * lam / 3) < 1e-8


def test_report_serialises():
    rep = peel_spherical(sampler(Ball((0.1, 0.1), 0.2, 0.3)), probe2())
    text = json_text(rep)
    assert '"inclusions"' in text and '"stages"' in text


# ---- parametric fit ---------------------------------------------------------

def trace_of(*incs, n=64, offset=0.1):
    return MomentTrace.sample(sampler(*incs), circle_directions(n, offset))


def test_fit_exact_start_stays_put():
    balls = [Ball((0.3, 0.2), 0.2, 0.3), Ball((-0.4, -0.1), 0.25, -0.2)]
    rep = fit_inclusions(trace_of(*balls), ("ball", 2), balls,
                         holdout=trace_of(*balls, n=20, offset=0.37))
    assert rep.residuals["fit"] < 1e-13 and rep.residuals["holdout"] < 1e-13
    for g, t in zip(rep.inclusions, balls):
        assert np.allclose(g.center, t.center, atol=1e-10)
    assert rep.diagnostics["smallest_singular_value"] > 0


@pytest.mark.parametrize("inc", [Simplex((0.1, -0.2), [[0.4, 0.1], [0.0, 0.3]], 0.3),
                                 Box((0.1, 0.2), (0.3, 0.5), -0.2)])
def test_fit_polytopes_from_exact_start(inc):
    rep = fit_inclusions(trace_of(inc), (inc.kind, 1), [inc])
    assert rep.status["converged"]


def test_fit_wrong_count_leaves_residual():
    balls = [Ball((0.3, 0.2), 0.2, 0.3), Ball((-0.4, -0.1), 0.25, -0.2)]
    rep = fit_inclusions(trace_of(*balls), ("ball", 1), [balls[0]])
    assert rep.residuals["fit"] > 1e-3 and not rep.status["converged"]


def test_fit_needs_enough_samples():
    with pytest.raises(ConfigurationError):
        fit_inclusions(trace_of(Ball((0, 0), 0.2, 0.1), n=8), ("ball", 2))


def test_fit_flags_split_amplitude():
    ball = Ball((0.1, 0.0), 0.3, 0.2)
    twins = [Ball((0.1, 0.0), 0.3, 0.1), Ball((0.1, 0.0), 0.3, 0.1)]
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        rep = fit_inclusions(trace_of(ball), ("ball", 2), twins)
    assert rep.status["rank_deficient"]
    assert any(issubclass(w.category, IdentifiabilityWarning) for w in rec)


# ---- support function and hull ---------------------------------------------

TRI = Simplex((0.0, 0.0), np.eye(2), 0.9)


def support_probe(w, ext=1.5):
    return HalfLineProbe.toward(np.asarray(w, float), W0, support_grid(ext), extent=ext,
                                ball_strip=False)


@pytest.mark.parametrize("w", [(1, 0), (0, 1), (-1, -1), (0.3, -1)])
def test_support_function_of_triangle(w):
    w = np.asarray(w, float) / np.linalg.norm(w)
    h = support_function(sampler(TRI), support_probe(w))
    assert abs(h - np.max(TRI.vertices @ w)) < 1e-2


def test_support_fit_reports_instability_for_zero_trace():
    fit = support_fit(MomentSampler([], W0), support_probe((1, 0)))
    assert not fit.stable
    with pytest.raises(GenericityError):
        support_function(MomentSampler([], W0), support_probe((1, 0)))


def analytic_samples(V, n, offset=0.05):
    ws = circle_directions(n, offset)
    return [(w, float(np.max(V @ w))) for w in ws]


def test_recover_hull_from_exact_support():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    hull = recover_hull(analytic_samples(V, 32))
    assert len(hull) == 3
    for v in V:
        assert np.min(np.linalg.norm(hull - v, axis=1)) < 1e-12


def test_recover_hull_square_and_order():
    V = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    hull = recover_hull(analytic_samples(V, 32, 0.0))
    assert len(hull) == 4
    x, y = hull[:, 0], hull[:, 1]
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0


def test_recover_hull_three_dimensional():
    from vorder.inverse import sphere_directions
    V = np.vstack([np.zeros(3), 0.8 * np.eye(3)])
    samples = [(w, float(np.max(V @ w))) for w in sphere_directions(200, 3)]
    hull = recover_hull(samples)
    assert len(hull) == 4
    for v in V:
        assert np.min(np.linalg.norm(hull - v, axis=1)) < 2e-2


def test_recover_hull_needs_spanning_directions():
    with pytest.raises(GeometryError):
        recover_hull([(np.array([1.0, 0.0]), 1.0), (np.array([-1.0, 0.0]), 1.0)])
    with pytest.raises(GeometryError):
        recover_hull([(np.array([1.0, 0.0]), 1.0), (np.array([0.0, 1.0]), 1.0),
                      (np.array([1.0, 1.0]) / math.sqrt(2), 0.5)])


def test_hull_bounds_recovered_support():
    W = sampler(TRI)
    samples = [(w, support_function(W, support_probe(w))) for w in circle_directions(16, 0.05)]
    hull = recover_hull(samples)
    for w, h in samples:
        assert h <= np.max(hull @ w) + 2e-2


# ---- vertex group sums and the cone condition -------------------------------

def test_group_sum_single_simplex():
    V = np.array([[0.5, 0.1], [0.2, 0.4]])
    wt, wp = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    z = wt + 1j * wp
    want = 0.3 * abs(np.linalg.det(V)) / np.prod(V.T @ z)
    assert vertex_group_sum([(V, 0.3)], wt, wp) == pytest.approx(want, rel=1e-14)


@given(st.floats(0.3, 3.0))
@settings(max_examples=20, deadline=None)
def test_group_sum_cancels_for_rescaled_edges(s):
    V1 = np.array([[0.5, 0.1], [0.2, 0.4]])
    V2 = V1 @ np.diag([s, 1 / s])
    wt, wp = np.array([0.6, 0.8]), np.array([-0.8, 0.6])
    assert abs(vertex_group_sum([(V1, 0.2), (V2, -0.2)], wt, wp)) < 1e-13


def test_group_sum_input_checks():
    V = np.eye(2)
    with pytest.raises(GeometryError):
        group_sum_terms([(V, 1.0)], [1.0, 0.0], [1.0, 0.0])
    with pytest.raises(GeometryError):
        group_sum_terms([(V, 1.0)], [2.0, 0.0], [0.0, 1.0])
    with pytest.raises(GenericityError):
        # V^T z has a zero component when an edge is orthogonal to both directions
        group_sum_terms([(np.diag([1.0, 1.0, 1.0]), 1.0)], [1.0, 0, 0], [0, 1.0, 0])


def cone_edges(rng, d, wt, spread):
    out = []
    for _ in range(d):
        e = -wt + spread * rng.uniform(-1, 1, d)
        out.append(e * rng.uniform(0.2, 1.0))
    V = np.column_stack(out)
    return V if np.linalg.det(V) != 0 else None


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
@settings(max_examples=40, deadline=None)
def test_cone_condition_keeps_terms_in_half_plane(seed, d):
    rng = np.random.default_rng(seed)
    wt = np.eye(d)[0]
    wp = np.eye(d)[1]
    group = []
    while len(group) < 3:
        V = cone_edges(rng, d, wt, 0.25)
        if V is not None:
            group.append((V, 1.0))
    rep = cone_condition(group, wt, wp)
    assert rep.holds and rep.min_margin > 0
    assert np.all(rep.arguments < math.pi / 2)
    # sum of terms in an open half-plane cannot vanish
    assert abs(vertex_group_sum(group, wt, wp)) > 0


def test_cone_condition_fails_for_wide_edges():
    V = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert not cone_condition([(V, 1.0)], np.array([1.0, 0.0])).holds


# ---- assumption checks ------------------------------------------------------

C = 0.1
EMPTY = OrderField(0.5, [])


def test_check_order_range():
    ok = check_assumptions(OrderField(0.4, [Ball((0, 0), 0.3, 0.3)]), OrderField(0.4, []))
    assert ok["order_bound[1]"].status == "pass"
    bad = check_assumptions(OrderField(0.3, [Ball((0, 0), 0.3, 0.4)]), OrderField(0.3, []))
    assert bad["order_bound[1]"].status == "fail"
    assert bad["order_bound[1]"].witness["margin"] < 0


def test_check_excitation_and_background():
    rep = check_assumptions(OrderField(0.5, []), OrderField(0.4, []), ExcitationSpec(2))
    assert rep["excitation"].status == "pass"
    assert rep["shared_background"].status == "fail" and not rep.ok


def test_check_ball_outside_domain():
    rep = check_assumptions(OrderField(0.5, [Ball((0.8, 0), 0.3, 0.1)]), EMPTY)
    assert rep["balls_inside"].status == "fail"


def test_split_square_has_isolated_vertex():
    a = Polygon([(-.4, -.4), (.4, -.4), (.4, .4)], C)
    b = Polygon([(-.4, -.4), (.4, .4), (-.4, .4)], -C)
    rep = check_assumptions(OrderField(0.5, [a, b]), EMPTY)
    chk = rep["isolated_hull_vertex"]
    assert chk.status == "pass"
    assert abs(abs(chk.witness["witness"]["value"]) - C) < 1e-12


def test_ring_of_trapezoids_shares_every_vertex():
    O, I = 0.6, 0.3
    out = [(-O, -O), (O, -O), (O, O), (-O, O)]
    inn = [(-I, -I), (I, -I), (I, I), (-I, I)]
    traps = [Polygon([out[i], out[(i + 1) % 4], inn[(i + 1) % 4], inn[i]], C * (-1) ** i)
             for i in range(4)]
    rep = check_assumptions(OrderField(0.5, traps), EMPTY)
    chk = rep["isolated_hull_vertex"]
    assert chk.status == "fail" and len(chk.witness["shared"]) == 4
    assert not rep.ok


def test_two_convex_polygons_pass():
    p1 = Polygon([(-.3, -.2), (.3, -.25), (.2, .3)], C)
    p2 = Polygon([(-.35, -.2), (.3, -.3), (.1, .35), (-.2, .2)], C)
    rep = check_assumptions(OrderField(0.5, [p1]), OrderField(0.5, [p2]))
    assert rep["isolated_hull_vertex"].status == "pass"
    assert rep["disjoint_vertices"].status == "pass"


def test_identical_polygons_are_trivially_fine():
    p = Polygon([(-.3, -.2), (.3, -.25), (.2, .3)], C)
    rep = check_assumptions(OrderField(0.5, [p]), OrderField(0.5, [p]))
    assert rep["isolated_hull_vertex"].witness.get("identical")
    assert rep["disjoint_vertices"].status == "fail"


def test_three_dimensional_simplex_cone():
    s = Simplex((0, 0, 0), np.diag([0.3, 0.3, 0.3]), 0.2)
    rep = check_assumptions(OrderField(0.5, [s]), OrderField(0.5, [], None))
    assert rep["vertex_cone"].status == "pass"
    assert rep["isolated_hull_vertex"].status == "unsupported" and rep.partial
    assert '"checks"' in json_text(rep)
