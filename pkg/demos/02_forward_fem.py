"""
Laplace-domain forward problem
==============================

For a piecewise-constant order alpha(x) and boundary data t^k exp(x . omega0),
the Laplace transform in time gives -Lap u + p^alpha u = 0 with trace
k! p^{-k-1} exp(x . omega0).  At p = 1 the coefficient is 1 whatever alpha is,
so the exact solution k! exp(x . omega0) measures the discretisation error.
"""

# %%
import math

import numpy as np

from vorder import Ball, OrderField
from vorder.geometry import unit_disk
from vorder.pde import (ExcitationSpec, boundary_flux, build_mesh, flux_panel,
                        laplace_domain_solution)

order = OrderField(0.5, [Ball((0.2, 0.1), 0.3, 0.2)])
exc = ExcitationSpec(k=2, omega0=(1.0, 0.0))
exact = lambda x: 2 * np.exp(np.atleast_2d(x) @ np.array([1.0, 0.0]))

# %% Halving h should divide the L2 error by about four.
prev = None
for h in (0.08, 0.04, 0.02):
    mesh = build_mesh(unit_disk(), h)
    err = laplace_domain_solution(1.0, order, exc, mesh).l2_error(exact)
    note = f"  ratio {prev / err:.2f}" if prev else ""
    print(f"h={h:<5} nodes={mesh.n_nodes:6d}  L2 error {err:.3e}{note}")
    prev = err

# %% Fluxes are variational pairings <d_nu u, psi> against boundary tests.
mesh = build_mesh(unit_disk(), 0.04)
tests = flux_panel(4, 0)
for p in (0.5, 1.0, 2.0):
    vals = boundary_flux(laplace_domain_solution(p, order, exc, mesh), tests).values
    print(f"p={p}: " + "  ".join(f"{v.real:+.6f}" for v in vals))
print("at p = 1 the fluxes are k! =", math.factorial(exc.k), "times those of exp(x . omega0)")
