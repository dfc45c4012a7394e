"""
Recovering balls from their moments
===================================

Along theta~ - iR each ball contributes C exp(cosh R (x . w~) + ...) times a
Bessel profile, so the ball with the largest projection dominates as R grows.
Peeling fits and subtracts the terms one by one; a least-squares refit on
real directions then polishes every parameter.
"""

# %%
import numpy as np

from vorder import Ball, MomentSampler
from vorder.directions import basis_from
from vorder.inverse import (HalfLineProbe, MomentTrace, circle_directions, fit_inclusions,
                            peel_spherical)

w0 = np.array([1.0, 0.0])
truth = [Ball((0.3, 0.2), 0.2, 0.3), Ball((-0.4, -0.1), 0.25, -0.2)]
W = MomentSampler.from_inclusions(truth, w0)

# %% One half-line probe.
probe = HalfLineProbe(0.3, basis_from(w0), np.linspace(2.0, 4.0, 21))
peel = peel_spherical(W, probe)
for st in peel.diagnostics["probes"][0]["stages"]:
    print(f"projection {st['projection']:+.6f}  radius {st['radius']:.6f}  amplitude {st['amplitude']:+.6f}")
print("true projections:", [round(float(b.center @ probe.omega_tilde), 6) for b in truth])

# %% Refit on 64 real directions, checked on a held-out grid.
trace = MomentTrace.sample(W, circle_directions(64))
hold = MomentTrace.sample(W, circle_directions(40, 0.37))
fit = fit_inclusions(trace, ("ball", 2), peel, holdout=hold)
for b in fit.inclusions:
    print(b)
print("residuals:", fit.residuals)
