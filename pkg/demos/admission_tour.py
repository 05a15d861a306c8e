"""
Which symmetries survive the boundary conditions?
=================================================

The heat equations alone admit a rich algebra for special diffusivities
(exponential, power, the -4/3 power).  The free-boundary conditions cut it
back down: only the traveling-wave generator d_t + mu d_x or the scaling
2t d_t + x d_x can survive, depending on how the surface laws depend on t.
"""

from stefanlie.expr import parse, classify_diffusivity
from stefanlie.problem import canonical_from_dict
from stefanlie.symmetry import admitted_symmetries, check_invariance, classify_mai

# classify a few diffusivity pairs
for d1, d2 in [("1 + u^2", "exp(v)"), ("exp(u)", "exp(v)"), ("exp(u)", "v^2"),
               ("u^(-4/3)", "v^(-4/3)")]:
    c1 = classify_diffusivity(parse(d1), "u")
    c2 = classify_diffusivity(parse(d2), "v")
    fam = classify_mai(c1, c2)
    print(f"d1 = {d1:10s} d2 = {d2:10s} -> case {fam.table_case}, dim {fam.dimension}")
    for op in fam.extensions:
        print(f"    extension: {op.label}")

# the same exp/power pair with three kinds of surface laws
base = dict(d1="exp(u)", d2="v^2", h="u", u_m=0.5, v_m=1.0, v_inf=0.5)
for label, extra in [("t-independent", dict(q="3")),
                     ("1/sqrt(t)", dict(q="3", time_dependence="inv_sqrt_t")),
                     ("growing in t", dict(q="3 + t"))]:
    P = canonical_from_dict({**base, **extra})
    res = admitted_symmetries(P)
    print(f"\nsurface laws {label}: admitted {sorted(res.forms()) or 'nothing'}")
    for r in res.rejected:
        print(f"    rejected {r.operator_label:28s} item ({r.item}) {r.condition}")

# the extension operator fails on the melt manifold: eta^u = 2 there
fam = classify_mai(classify_diffusivity(parse("exp(u)"), "u"),
                   classify_diffusivity(parse("v^2"), "v"))
rep = check_invariance(fam.extensions[0], canonical_from_dict({**base, "q": "3"}))
v = rep.verdict("S2_u_melt")
print(f"\n{fam.extensions[0].label}: u = u_m residual {v.expression} ({v.residual:g})")
