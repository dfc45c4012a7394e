import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vorder.directions import (SphereDirection, ball_constraints, basis_from,
                               direction_vector, generic_direction,
                               separating_direction, simplex_functionals)
from vorder.errors import (BranchError, DomainError, GenericityError, SeparationError,
                           UnsupportedError)
from vorder.moments import (MomentSampler, ball_moment, box_moment, difference_moment,
                            exp_divided_difference, shape_moment, simplex_moment)
from vorder.oracle import quadrature_moment
from vorder.shapes import Ball, Box, OrderField, Polygon, Simplex
from vorder.specfun import bessel_j

# 30-digit references
DISK_AT_03_04 = 3.24079542087472991250680188538
BALL3_AT_002 = 6.12222733803157405536692824491
SIMPLEX_AT_12 = 1.47624622100627987825492625894


def rand_matrix(rng, d):
    while True:
        m = np.eye(d) * rng.uniform(0.3, 1) + 0.3 * rng.standard_normal((d, d))
        if np.linalg.det(m) > 0.05:
            return m


# ---- directions -------------------------------------------------------------

def test_direction_examples():
    e = np.eye(2)
    assert np.allclose(direction_vector(SphereDirection(e, 0)), [1, 0])
    v = direction_vector(SphereDirection(np.eye(3), np.pi / 2, (np.pi / 2,)))
    assert np.allclose(v, [0, 0, 1], atol=1e-15)
    v = direction_vector(SphereDirection(e, -1j))
    assert np.allclose(v, [math.cosh(1), -1j * math.sinh(1)])


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 6.2), st.integers(2, 5))
@settings(max_examples=80, deadline=None)
def test_direction_norm_identity(tr, ti, phi, d):
    B = basis_from(np.eye(d)[d - 1])
    phis = (phi,) * (d - 2)
    real = direction_vector(SphereDirection(B, tr, phis))
    assert abs(np.sum(real ** 2) - 1) < 1e-12
    cplx = direction_vector(SphereDirection(B, complex(tr, ti), phis))
    assert abs(np.sum(cplx ** 2) - 1) < 1e-12 * max(1, np.abs(cplx).max() ** 2)


@given(st.floats(-3.1, 3.1), st.floats(0, 6.2), st.sampled_from([2, 3]))
@settings(max_examples=60, deadline=None)
def test_offset_norm_is_half_angle_cosine(theta, phi, d):
    B = basis_from(np.ones(d) / math.sqrt(d))
    w = direction_vector(SphereDirection(B, theta, (phi,) * (d - 2)))
    assert abs(np.linalg.norm(w + B[0]) - 2 * abs(math.cos(theta / 2))) < 1e-12


def test_sphere_direction_rejects_bad_basis():
    with pytest.raises(DomainError):
        SphereDirection(np.array([[1, 0], [1, 1]]), 0)


def test_generic_direction_ball_constraints():
    x1, x2 = np.array([0.2, 0.1]), np.array([-0.3, 0.4])
    w = generic_direction(ball_constraints([x1, x2]), seed=1)
    assert abs(np.linalg.norm(w) - 1) < 1e-14
    assert abs((x1 - x2) @ w) >= 1e-3 * np.linalg.norm(x1 - x2)


def test_generic_direction_empty_and_exhausted():
    w = generic_direction([], seed=0, dim=3)
    assert abs(np.linalg.norm(w) - 1) < 1e-14
    with pytest.raises(GenericityError):
        # |w . a| >= 10 cannot hold for a unit vector and |a| = 1
        generic_direction([(np.array([1.0, 0]), 0.0)], margin=10, max_tries=50)


def test_generic_direction_simplex_set():
    V = np.array([[1.0, 0.2], [0.1, 0.9]])
    B = basis_from([1.0, 0.0])
    w = generic_direction([], seed=3, dim=2, extra=lambda w: simplex_functionals([V], B, w))
    vals = simplex_functionals([V], B, w)
    assert len(vals) == 2 * (2 + 1) // 2 + 2
    assert np.min(np.abs(vals)) >= 1e-3


def test_separating_direction():
    tri = [(0, 0), (1, 0), (0, 1)]
    w, gap = separating_direction(tri, (1, 0))
    assert gap > 0
    for x in tri[:1] + tri[2:]:
        assert np.dot((1, 0), w) - np.dot(x, w) >= gap - 1e-12
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    w, gap = separating_direction(sq, (1, 1))
    assert np.allclose(w, np.ones(2) / math.sqrt(2), atol=1e-8)
    with pytest.raises(SeparationError):
        separating_direction(sq + [(0.5, 0.5)], (0.5, 0.5))


# ---- ball -------------------------------------------------------------------

def test_ball_zero_frequency():
    assert ball_moment(1, [0, 0]) == pytest.approx(math.pi, rel=1e-15)
    assert ball_moment(1, [1e-9, 0]) == pytest.approx(math.pi, rel=1e-15)
    assert ball_moment(2, [0, 0, 0]) == pytest.approx(4 / 3 * math.pi * 8, rel=1e-15)


def test_ball_reference_values():
    assert ball_moment(1, [0.3, 0.4]) == pytest.approx(DISK_AT_03_04, rel=1e-13)
    assert ball_moment(1, [0, 0, 2]) == pytest.approx(BALL3_AT_002, rel=1e-13)
    q = quadrature_moment(Ball([0, 0], 1), [0.3, 0.4])
    assert ball_moment(1, [0.3, 0.4]) == pytest.approx(q.value, rel=1e-8)


def test_ball_d2_specialisation():
    for s in np.linspace(0.1, 10, 20):
        y = np.array([0.6, 0.8]) * s
        ref = -2j * math.pi * 1 / s * bessel_j(1, 1j * s)
        assert abs(ball_moment(1, y) - ref) <= 1e-12 * abs(ref)


def test_ball_small_frequency_switch_is_continuous():
    for d in (2, 3):
        y = np.zeros(d, complex)
        y[0] = 1.0001e-6
        below = ball_moment(0.7, y * 0.99)
        above = ball_moment(0.7, y * 1.01)
        assert below == pytest.approx(above, rel=1e-12)


def test_ball_complex_direction_form():
    B = np.eye(2)
    d = SphereDirection(B, 0.3 - 1.5j)
    y = direction_vector(d) + B[0]
    q = quadrature_moment(Ball([0, 0], 1), y)
    assert ball_moment(1, d) == pytest.approx(q.value, rel=1e-6)
    assert ball_moment(1, d) == pytest.approx(ball_moment(1, y), rel=1e-12)
    with pytest.raises(BranchError):
        ball_moment(1, SphereDirection(B, 1.7 - 0.2j))


def test_ball_imaginary_frequency_odd_dimension():
    # y.y negative real puts i r kappa on the cut for the principal root
    y = np.array([0, 2j, 0])
    q = quadrature_moment(Ball([0, 0, 0], 0.8), y)
    assert ball_moment(0.8, y) == pytest.approx(q.value, rel=1e-10)


# ---- simplex ----------------------------------------------------------------

def test_simplex_examples():
    assert simplex_moment([0, 0], np.eye(2), [0, 0]) == pytest.approx(0.5, rel=1e-15)
    v = simplex_moment([0, 0], np.eye(2), [1, 2])
    assert v == pytest.approx(-math.e + math.e ** 2 / 2 + 0.5, rel=1e-14)
    assert v == pytest.approx(SIMPLEX_AT_12, rel=1e-14)
    q = quadrature_moment(Simplex([0, 0], np.eye(2)), [1, 2])
    assert v == pytest.approx(q.value, rel=1e-10)
    shifted = simplex_moment([1, 0], np.eye(2), [1, 2])
    assert shifted == pytest.approx(math.e * v, rel=1e-14)
    with pytest.raises(DomainError):
        simplex_moment([0, 0], np.array([[0, 1], [1, 0]]), [1, 1])


def test_simplex_confluent_closed_forms():
    # corrected d = 2 confluent values, checked against quadrature
    for Y in (0.7, -2.3, 4.0):
        same = (math.exp(Y) * (Y - 1) + 1) / Y ** 2
        assert simplex_moment([0, 0], np.eye(2), [Y, Y]) == pytest.approx(same, rel=1e-13)
        q = quadrature_moment(Simplex([0, 0], np.eye(2)), [Y, Y])
        assert same == pytest.approx(q.value, rel=1e-11)
        zero = (math.exp(Y) - 1 - Y) / Y ** 2
        assert simplex_moment([0, 0], np.eye(2), [0, Y]) == pytest.approx(zero, rel=1e-13)
        q = quadrature_moment(Simplex([0, 0], np.eye(2)), [0, Y])
        assert zero == pytest.approx(q.value, rel=1e-11)


def test_simplex_confluence_limit():
    V = np.array([[1.0, 0.3], [-0.2, 0.8]])
    Vinv_t = np.linalg.inv(V.T)
    Y1 = 1.3
    target = simplex_moment([0.1, 0.2], V, Vinv_t @ np.array([Y1, Y1]))
    errs = []
    for k in range(1, 12):
        y = Vinv_t @ np.array([Y1, Y1 + 10.0 ** -k])
        errs.append(abs(simplex_moment([0.1, 0.2], V, y) - target))
    # first-order approach to the confluent value, down to rounding level
    for k, e in enumerate(errs):
        assert e <= 2 * errs[0] * 10.0 ** -k + 1e-14


def test_divided_difference_matches_distinct_formula():
    z = [0, 0.5, -1.25, 2 + 1j]
    direct = sum(cmath.exp(zi) / np.prod([zi - zj for zj in z if zj is not zi]) for zi in z)
    assert exp_divided_difference(z) == pytest.approx(direct, rel=1e-13)
    # all equal nodes: exp(z) / n!
    assert exp_divided_difference([0.3] * 4) == pytest.approx(math.exp(0.3) / 6, rel=1e-14)


def test_simplex_even_permutation_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(20):
        V = rand_matrix(rng, 3)
        y = rng.normal(size=3) * 3 + 1j * rng.normal(size=3)
        cyc = V[:, [1, 2, 0]]
        assert simplex_moment([0, 0, 0], cyc, y) == pytest.approx(
            simplex_moment([0, 0, 0], V, y), rel=1e-12)


# ---- box --------------------------------------------------------------------

def test_box_examples():
    assert box_moment([0, 0], [2, 3], [0, 0]) == pytest.approx(6)
    assert box_moment([0, 0], [1, 1], [1, 0]) == pytest.approx(2 * math.sinh(0.5), rel=1e-15)


def test_square_as_two_triangles():
    rng = np.random.default_rng(2)
    for _ in range(10):
        y = rng.normal(size=2) * 4 + 1j * rng.normal(size=2)
        box = box_moment([0.5, 0.5], [1, 1], y)
        t1 = simplex_moment([0, 0], np.eye(2), y)
        t2 = simplex_moment([1, 1], -np.eye(2), y)
        assert abs(box - t1 - t2) <= 1e-12 * abs(box)


def test_polygon_moment_matches_pieces():
    sq = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    y = np.array([0.4 - 0.3j, 1.1])
    assert shape_moment(sq, y) == pytest.approx(box_moment([0.5, 0.5], [1, 1], y), rel=1e-12)


# ---- invariants -------------------------------------------------------------

def _shapes(rng, d):
    return [Ball(rng.uniform(-0.3, 0.3, d), rng.uniform(0.2, 0.9)),
            Simplex(rng.uniform(-0.3, 0.3, d), rand_matrix(rng, d)),
            Box(rng.uniform(-0.3, 0.3, d), rng.uniform(0.2, 1.0, d))]


def _shift(shape, c):
    if isinstance(shape, Ball):
        return Ball(shape.center + c, shape.radius)
    if isinstance(shape, Simplex):
        return Simplex(shape.base + c, shape.matrix)
    return Box(shape.center + c, shape.widths)


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
@settings(max_examples=40, deadline=None)
def test_translation_covariance(seed, d):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=d) + 1j * rng.normal(size=d)
    y *= rng.uniform(0, 5) / np.linalg.norm(y)
    c = rng.uniform(-1, 1, d)
    for s in _shapes(rng, d):
        lhs = shape_moment(_shift(s, c), y)
        rhs = np.exp(c @ y) * shape_moment(s, y)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_conjugate_symmetry(seed):
    rng = np.random.default_rng(seed)
    incs = [Ball(rng.uniform(-.4, .4, 2), 0.2, 0.1), Simplex([0, 0], rand_matrix(rng, 2), -0.2)]
    W = MomentSampler.from_inclusions(incs, [1.0, 0.0])
    theta = complex(rng.uniform(-1.4, 1.4), rng.uniform(-3, 3))
    B = np.eye(2)
    a = W(SphereDirection(B, theta.conjugate()))
    b = W(SphereDirection(B, theta)).conjugate()
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_difference_moment_holomorphic_in_theta():
    cfg1 = OrderField(0.5, [Ball([0.2, 0.1], 0.3, 0.1), Box([-0.3, 0.2], [0.2, 0.3], 0.05)])
    cfg2 = OrderField(0.5, [Simplex([-0.2, -0.4], np.eye(2) * 0.3, 0.1)])
    B = np.eye(2)
    for theta in [0.3 - 1.2j, -0.7 + 0.4j, 1.1 - 2j]:
        def W(t):
            return difference_moment(cfg1, cfg2, SphereDirection(B, t), B[0])

        def cr(eps):
            dx = (W(theta + eps) - W(theta - eps)) / (2 * eps)
            dy = (W(theta + 1j * eps) - W(theta - 1j * eps)) / (2 * eps)
            return abs(dy - 1j * dx)

        r1, r2 = cr(1e-3), cr(5e-4)
        assert r1 < 1e-5 * abs(W(theta))
        assert r2 < r1 / 3 or r2 < 1e-11 * abs(W(theta))


def test_difference_moment_examples():
    B = np.eye(2)
    cfg = OrderField(0.5, [Ball([0.2, 0.1], 0.3, 0.1), Ball([-0.4, 0.2], 0.2, -0.05)])
    dirs = [SphereDirection(B, t) for t in np.linspace(0, 2 * np.pi, 64, endpoint=False)]
    assert all(difference_moment(cfg, cfg, d, B[0]) == 0 for d in dirs)
    single = OrderField(0.5, [Ball([0.2, 0.1], 0.3, 0.1)])
    empty = OrderField(0.5, [])
    for d in dirs[:8]:
        y = direction_vector(d) + B[0]
        ref = 0.1 * np.exp(np.array([0.2, 0.1]) @ y) * ball_moment(0.3, y)
        assert difference_moment(single, empty, d, B[0]) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(UnsupportedError):
        difference_moment(single, OrderField(0.4, []), dirs[0], B[0])


def test_identical_fields_cancel_exactly():
    import copy
    cfg = OrderField(0.5, [Ball((0.1, 0.2), 0.3, 0.2), Simplex((-0.4, -0.3), 0.3 * np.eye(2), -0.1),
                           Box((0.3, -0.4), (0.2, 0.1), 0.15)])
    W = MomentSampler.from_fields(cfg, copy.deepcopy(cfg), (1.0, 0.0))
    for t in np.linspace(0, 2 * np.pi, 17):
        assert W.at_frequency(np.array([math.cos(t) + 1, math.sin(t)])) == 0
