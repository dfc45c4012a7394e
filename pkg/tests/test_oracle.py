import math

import numpy as np
import pytest

from vorder.errors import DomainError, OraclePrecisionError
from vorder.moments import ball_moment, shape_moment, simplex_moment
from vorder.oracle import QuadratureSpec, quadrature_moment, random_case
from vorder.shapes import Ball, Box, Polygon, Simplex


def test_unit_disk_at_zero_is_pi():
    q = quadrature_moment(Ball((0, 0), 1.0), (0, 0))
    assert abs(q.value - math.pi) < 1e-12
    assert q.error <= 1e-11 * math.pi


def test_unit_triangle_matches_closed_form():
    q = quadrature_moment(Simplex((0, 0), np.eye(2)), (1, 2))
    assert abs(q.value - simplex_moment((0, 0), np.eye(2), (1, 2))) < 1e-10


def test_complex_probe_frequency_on_disk():
    th = 0.3 - 1.5j
    y = np.array([np.cos(th), np.sin(th)]) + np.array([1.0, 0.0])
    q = quadrature_moment(Ball((0, 0), 1.0), y)
    assert abs(q.value - ball_moment(1.0, y)) <= 1e-6 * abs(q.value)


def test_box_is_product_of_intervals():
    y = np.array([0.7, -1.3, 0.4])
    box = Box((0.1, 0.2, -0.3), (0.4, 0.6, 0.8))
    want = np.prod([(np.exp(y[i] * (c + w / 2)) - np.exp(y[i] * (c - w / 2))) / y[i]
                    for i, (c, w) in enumerate(zip(box.center, box.widths))])
    assert abs(quadrature_moment(box, y).value - want) < 1e-12 * abs(want)


def test_polygon_sums_its_triangles():
    poly = Polygon([(-0.3, -0.2), (0.4, -0.1), (0.3, 0.3), (-0.1, 0.4)])
    y = (0.8, -0.5)
    total = sum(quadrature_moment(t, y).value for t in poly.triangles())
    assert abs(quadrature_moment(poly, y).value - total) < 1e-12


@pytest.mark.parametrize("kind", ["ball", "simplex", "box"])
def test_tensor_and_adaptive_agree(kind):
    rng = np.random.default_rng(3)
    for d in (2, 3):
        shape, y = random_case(rng, kind, d, complex_y=True)
        a = quadrature_moment(shape, y)
        b = quadrature_moment(shape, y, QuadratureSpec("adaptive"))
        assert abs(a.value - b.value) <= 1e-10 * abs(a.value)


def test_tensor_and_monte_carlo_agree_within_three_sigma():
    rng = np.random.default_rng(11)
    kinds = ["ball", "simplex", "box"]
    for j in range(50):
        shape, y = random_case(rng, kinds[j % 3], 2 + j % 2, complex_y=bool(j % 4 == 0),
                               y_max=4.0)
        t = quadrature_moment(shape, y)
        mc = quadrature_moment(shape, y, QuadratureSpec("montecarlo", samples=40_000, seed=j))
        assert abs(t.value - mc.value) <= 3 * mc.error, (j, shape)


def test_escalation_shrinks_error_estimate():
    rng = np.random.default_rng(5)
    for kind in ("ball", "simplex", "box"):
        for d in (2, 3):
            shape, y = random_case(rng, kind, d, complex_y=True)
            for spec in (QuadratureSpec(), QuadratureSpec("adaptive")):
                h = np.array(quadrature_moment(shape, y, spec).history)
                assert len(h) >= 1 and np.all(np.diff(h) <= 0)


def test_monte_carlo_error_scales_like_inverse_root():
    shape, y = Ball((0, 0), 0.5), (1.0, 0.5)
    e1 = quadrature_moment(shape, y, QuadratureSpec("montecarlo", samples=10_000)).error
    e2 = quadrature_moment(shape, y, QuadratureSpec("montecarlo", samples=40_000)).error
    assert 1.6 < e1 / e2 < 2.4


def test_frequency_budget_and_bad_inputs():
    with pytest.raises(DomainError):
        quadrature_moment(Ball((0, 0), 1.0), (41.0, 0))
    with pytest.raises(DomainError):
        quadrature_moment(Ball((0, 0), 1.0), (1.0, 0, 0))
    with pytest.raises(DomainError):
        quadrature_moment(Ball((0, 0), 1.0), (1.0, 0), QuadratureSpec("simpson"))


def test_non_convergence_carries_best_estimate():
    spec = QuadratureSpec(start_order=4, max_order=12, rtol=1e-15)
    with pytest.raises(OraclePrecisionError) as info:
        quadrature_moment(Ball((0, 0), 1.0), (30.0, 20.0), spec)
    assert info.value.value is not None and info.value.error > 0


def test_random_case_respects_frequency_bound():
    rng = np.random.default_rng(0)
    for kind in ("ball", "simplex", "box"):
        for _ in range(20):
            shape, y = random_case(rng, kind, 3, complex_y=True, y_max=10.0)
            assert np.linalg.norm(y) <= 10.0 + 1e-12
            assert abs(shape_moment(shape, y)) > 0
