"""Minimizing the field-weighted energy over the admissible class.

Each plate's weights live in a box 0 <= w <= sigma intersected with the
g-mass plane <g, w> = a.  The two solvers take unrelated routes: projected
gradient relies on an exact Euclidean projection; the conditional-gradient
method only ever calls a fractional-knapsack oracle.  Agreement of their
values and of the independent KKT certificate is the correctness argument.
"""

import numpy as np

from vequil import (
    Condenser,
    KernelSpec,
    SolverConfig,
    condenser_gram,
    make_plate,
    r_map,
    semimetric_distance,
    solve,
    verify_kkt,
)
from vequil.condenser import FieldSpec

rng = np.random.default_rng(11)

nodes_pos = rng.uniform(-1, 1, (18, 3)) * [1.0, 1.0, 0.4] + [-2.0, 0.0, 0.0]
nodes_neg = rng.uniform(-1, 1, (18, 3)) * [1.0, 1.0, 0.4] + [2.0, 0.0, 0.0]
c = Condenser(
    plates=(
        make_plate(0, +1, nodes_pos, g=1.0, mass=1.0, sigma=0.12),
        make_plate(1, -1, nodes_neg, g=1.0, mass=1.3, sigma=0.15),
    )
)
K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
field = FieldSpec(
    case="case1",
    case1_values=(0.3 * nodes_pos[:, 1], np.zeros(18)),  # linear external field
)

print("algorithm             value            iterations  KKT residual")
reports = {}
for algorithm in ("projected_gradient", "frank_wolfe"):
    rep = solve(c, K, field, SolverConfig(algorithm=algorithm, grad_tol=1e-10))
    cert = verify_kkt(c, K, field, rep.minimizer, tol=1e-8)
    reports[algorithm] = rep
    print(f"{algorithm:<20}  {rep.value:.12f}  {rep.iterations:>6}      {cert.max_residual:.2e}")

pg, fw = reports["projected_gradient"], reports["frank_wolfe"]
print(f"\nvalue difference      : {abs(pg.value - fw.value):.2e}")
print(f"semimetric distance   : {semimetric_distance(c, K, pg.minimizer, fw.minimizer):.2e}")

print("\nuniqueness: 6 random starts, pairwise distances")
sols = [solve(c, K, field, SolverConfig(grad_tol=1e-12, seed=s)) for s in range(6)]
worst = 0.0
for i in range(6):
    for j in range(i + 1, 6):
        worst = max(worst, semimetric_distance(c, K, sols[i].minimizer, sols[j].minimizer))
print(f"  worst pairwise semimetric distance = {worst:.2e}")
print("  (unique minimizer: strictly PD kernel + disjoint plates)")

m = r_map(c, pg.minimizer)
print(f"\nminimizer masses: {[f'{w.sum():.4f}' for w in pg.minimizer.weights]}, "
      f"net charge {m.total:+.4f}")
