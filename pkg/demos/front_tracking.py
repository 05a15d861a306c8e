"""
Direct simulation against the similarity solution
=================================================

Start a Landau-transformed finite-difference simulation from the
self-similar profile at t = 1 and run it to t = 4.  The melt front should
keep s2(t)/sqrt(t) = omega2, and the error should drop by about four when
the grid is refined (second order).
"""

import numpy as np

from stefanlie.reduction import reduce
from stefanlie.solver import solve_self_similar
from stefanlie.validate import (SolutionSampler, far_field_point, front_error, front_track,
                                initial_from_sampler, manufactured_self_similar)

P = manufactured_self_similar()
R = reduce(P, "X2")
sol = solve_self_similar(R)
smp = SolutionSampler(R, sol)

x_far = far_field_point(smp, 1.0, 4.0)
init = initial_from_sampler(smp, 1.0)
print(f"omega2 = {sol.params['omega2']:.10f}, truncation at x = {x_far:.3f}")

prev = None
for n in (200, 400, 800):
    tr = front_track(P, init, 4.0, n, x_far, out_times=np.linspace(1, 4, 7))
    err = front_error(smp, tr)["max_rel_error"]
    ratio = "" if prev is None else f"  ratio {prev / err:.2f}"
    print(f"{n:4d} points, {tr.steps:6d} steps: max rel error {err:.3e}{ratio}")
    prev = err

for t, s2 in zip(tr.times, tr.s2):
    print(f"  t = {t:.1f}  s2/sqrt(t) = {s2 / np.sqrt(t):.8f}")
