"""
Checking the admissibility conditions
=====================================

A pair of order fields is admissible when the values stay in (0, 1) with
sup < 2 inf, balls sit inside the domain, and the polygonal difference has a
hull vertex owned by a single region.  A ring of alternating trapezoids
breaks the last condition: every outer corner is shared.
"""

# %%
import json

from vorder import Ball, OrderField, Polygon
from vorder.inverse import check_assumptions
from vorder.io import json_text

c = 0.1
empty = OrderField(0.5, [])


def show(title, rep):
    print(f"-- {title}: ok={rep.ok}")
    for chk in rep.checks:
        print(f"   {chk.name:22s} {chk.status}")


# %%
show("ball order with range [0.4, 0.7]",
     check_assumptions(OrderField(0.4, [Ball((0, 0), 0.3, 0.3)]), OrderField(0.4, [])))

# %%
p1 = Polygon([(-.3, -.2), (.3, -.25), (.2, .3)], c)
p2 = Polygon([(-.35, -.2), (.3, -.3), (.1, .35), (-.2, .2)], c)
rep = check_assumptions(OrderField(0.5, [p1]), OrderField(0.5, [p2]))
show("two convex polygons", rep)
print("   witness:", json.loads(json_text(rep["isolated_hull_vertex"].witness["witness"])))

# %%
O, I = 0.6, 0.3
out = [(-O, -O), (O, -O), (O, O), (-O, O)]
inn = [(-I, -I), (I, -I), (I, I), (-I, I)]
ring = [Polygon([out[i], out[(i + 1) % 4], inn[(i + 1) % 4], inn[i]], c * (-1) ** i) for i in range(4)]
rep = check_assumptions(OrderField(0.5, ring), empty)
show("ring of trapezoids", rep)
for s in rep["isolated_hull_vertex"].witness["shared"]:
    print("   shared vertex", [round(float(v), 3) for v in s["vertex"]], "values", s["values"])
