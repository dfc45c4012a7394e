"""
The orthogonality identity
==========================

If two orders share a background, the linearised flux difference paired with
z_omega = exp(x . omega) equals minus the exponential moment of
alpha1 - alpha2 at omega + omega0.  The residual of that identity on a finite
element mesh shrinks under refinement.
"""

# %%
from vorder import Ball, OrderField
from vorder.geometry import unit_disk
from vorder.pde import ExcitationSpec, build_mesh, identity_residual, unit_circle_directions

a1 = OrderField(0.5, [Ball((0.2, 0.1), 0.3, 0.2)])
a2 = OrderField(0.5, [])
dirs = unit_circle_directions(32)

# %%
prev = None
for h in (0.08, 0.04, 0.02):
    rep = identity_residual(a1, a2, ExcitationSpec(), build_mesh(unit_disk(), h), dirs)
    note = f"  ratio {prev / rep.max:.2f}" if prev else ""
    print(f"h={h:<5} max residual {rep.max:.3e} ({rep.relative_max:.1e} of max|W|){note}")
    prev = rep.max

# %% Identical orders give a vanishing residual.
rep = identity_residual(a1, a1, ExcitationSpec(), build_mesh(unit_disk(), 0.08), dirs)
print("identical orders:", rep.max)
