"""
Exponential moments of balls, simplices and boxes
=================================================

The moment of a region D at a (complex) frequency y is the integral of
exp(x . y) over D.  Closed forms exist for the three basic shapes; each one
is checked here against brute-force quadrature.
"""

# %%
import numpy as np

from vorder import Ball, Box, Simplex, ball_moment, shape_moment
from vorder.directions import SphereDirection, basis_from
from vorder.oracle import QuadratureSpec, quadrature_moment

# %% A real frequency: closed form against mapped Gauss rules.
y = np.array([1.0, 2.0])
for shape in (Ball((0.1, -0.2), 0.6), Simplex((0, 0), np.eye(2)), Box((0, 0), (1.0, 0.5))):
    q = quadrature_moment(shape, y)
    print(f"{shape.kind:8s} closed {shape_moment(shape, y):.15f}  quadrature {q.value:.15f}"
          f"  est. error {q.error:.1e}")

# %% Complex angles.  Along theta = 0.3 - iR the frequency omega(theta) + e1
# grows like e^R, and the ball moment depends on it only through
# f = 2 cos(theta / 2).
B = basis_from([1.0, 0.0])
for R in (0.5, 1.5, 2.5):
    d = SphereDirection(B, 0.3 - 1j * R)
    yc = np.array([np.cos(d.theta), np.sin(d.theta)]) + B[0]
    q = quadrature_moment(Ball((0, 0), 0.5), yc)
    print(f"R={R}: ball via angle {ball_moment(0.5, d):.10e}  quadrature {q.value:.10e}")

# %% Monte Carlo gives an independent, if noisy, estimate.
mc = quadrature_moment(Simplex((0, 0), np.eye(2)), y, QuadratureSpec("montecarlo", samples=100_000))
print(f"Monte Carlo {mc.value:.5f} +- {mc.error:.1e}")
