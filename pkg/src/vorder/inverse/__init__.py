"""Recovery of inclusions from moment data, and admissibility checks."""

from .assumptions import AssumptionReport, Check, check_assumptions
from .fit import fit_inclusions
from .peel import ProbeResult, RecoveryReport, peel_probe, peel_spherical
from .polytope import (ConeReport, SupportFit, cone_condition, group_sum_terms, recover_hull,
                       support_fit, support_function, support_grid, vertex_group_sum)
from .probe import (HalfLineProbe, MomentTrace, circle_directions, probe_fan,
                    sphere_directions)
