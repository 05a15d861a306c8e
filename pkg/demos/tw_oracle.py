"""
A traveling wave with a closed-form answer
==========================================

Constant diffusivities, q = 3.5 and h(u) = u.  The phase-1 first integral
d1 u' + mu u = C1 makes the whole problem solvable by hand: mu = 1,
u(0) = 1, C1 = -1.5 and delta = ln 1.25.  We solve it two ways and compare.
"""

import math
import os

import numpy as np

from stefanlie.problem import load_problem
from stefanlie.reduction import reduce
from stefanlie.solver import solve_traveling_wave
from stefanlie.validate import SolutionSampler, pde_residual

_, P = load_problem(os.path.join(os.path.dirname(__file__), "problems", "tw_constant.json"))
R = reduce(P, "X1")
print(R.describe())

sol = solve_traveling_wave(R, method="both")
mu, delta = sol.params["mu"], sol.params["delta"]
print(f"\nfirst integral: mu = {mu:.15f}, delta = {delta:.15f}")
print(f"shooting:       mu = {sol.diagnostics['mu_shooting']:.15f}, "
      f"delta = {sol.diagnostics['delta_shooting']:.15f}")
print(f"ln 1.25       = {math.log(1.25):.15f}")

# the solid profile is a pure exponential behind the melt front
xi = np.linspace(delta, delta + 5, 6)
print("\nv(xi) vs exp(-(xi - delta)):", np.max(np.abs(sol.v(xi) - np.exp(-(xi - delta)))))

# back in (t, x): residual of the heat equations away from the fronts
print("PDE residual:", pde_residual(P, SolutionSampler(R, sol)))
