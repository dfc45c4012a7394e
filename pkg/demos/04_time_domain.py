"""
Back to the time domain
=======================

Time-domain fluxes come from a trapezoid rule on a cotangent contour in the
Laplace plane.  Each node needs one complex solve.  Two self-checks follow:
the imaginary residue of the inversion, and a forward Laplace transform of
the recovered signal compared with a direct solve at p = 2.
"""

# %%
import numpy as np

from vorder import Ball, OrderField
from vorder.geometry import unit_disk
from vorder.pde import ContourSpec, ExcitationSpec, build_mesh, invert_laplace, time_domain_flux
from vorder.pde.timedomain import laplace_round_trip

# %% A scalar sanity check: 2 / p^3 inverts to t^2.
t = np.array([0.5, 1.0, 3.0])
re, im = invert_laplace(lambda p: 2 / p ** 3, t)
print("t^2 recovered:", re, " max |imag|:", np.abs(im).max())

# %%
order = OrderField(0.5, [Ball((0.2, 0.1), 0.3, 0.2)])
mesh = build_mesh(unit_disk(), 0.15)
exc = ExcitationSpec()
tf = time_domain_flux(order, exc, mesh, [0.5, 1.0, 2.0])
tf64 = time_domain_flux(order, exc, mesh, [0.5, 1.0, 2.0], ContourSpec(64))
print("fluxes:\n", tf.values)
print("relative imaginary residue:", tf.relative_residue)
print("change when doubling nodes:", np.abs(tf64.values - tf.values).max() / np.abs(tf.values).max())

# %%
rt = laplace_round_trip(order, exc, mesh, p=2.0)
print(f"round trip at p=2: error {rt.error:.2e}, budget {rt.budget:.2e}, ok={rt.ok}")
