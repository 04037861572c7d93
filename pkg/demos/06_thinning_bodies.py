"""Capacity dichotomy for rotational bodies with thinning tails.

A body {q <= x1 <= R, x2^2 + x3^2 <= rho(x1)^2} is truncated at growing
radii.  For rho(r) = exp(-r^2) the tail pinches off so fast that the
capacity saturates; for rho(r) = 1/r it keeps growing with no bound in
sight.  Alongside the capacities, a two-plate charge problem driven by a
fixed screened-equilibrium source is solved at each radius and compared
against the swept candidate measure from the sweeping construction.

The dichotomy is a trend observed at finite truncation and resolution; it
does not certify solvability or non-solvability of the limit problem.
"""

from vequil.analysis import thinness_demo

for profile, s, label in (
    ("exp_s_gt1", 2.0, "rho(r) = exp(-r^2)   (finite capacity)"),
    ("power_s", 1.0, "rho(r) = 1/r         (divergent capacity)"),
):
    rep = thinness_demo(profile, s, [5.0, 10.0, 20.0])
    print(f"\n{label}")
    print("  radius  nodes  capacity   mass center   gap to swept candidate  swept mass")
    for st in rep.stages:
        print(f"   {st.radius:5.1f}  {st.n_body_nodes:5d}  {st.capacity:.5f}   "
              f"{st.minimizer_mass_center:8.3f}      {st.gap_to_balayage_candidate:10.3e}"
              f"        {st.swept_mass:.4f}")
    caps = [st.capacity for st in rep.stages]
    incr = (caps[-1] - caps[-2]) / caps[-1]
    print(f"  capacity increment over the last radius doubling: {incr:.2%}")

print("\nNote:", thinness_demo("exp_s_gt1", 2.0, [5.0], include_gap=False).note)
