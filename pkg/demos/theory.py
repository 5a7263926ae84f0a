"""Convergence constants for a small instance and for the ideal case.

Estimates restricted constants on a 3x4 grid and shows that the admissible
learning-rate interval needs beta/alpha <= 16/15, which random designs miss
by orders of magnitude. The second half scans the interval at alpha = beta.
"""
import numpy as np

from graphiht.graph import WgmModel, grid_graph
from graphiht.harness import gen_instance
from graphiht.theory import (InfeasibleRangeError, contraction_params,
                             estimate_rsc_rss, eta_range)

graph = grid_graph(3, 4)
model = WgmModel(3, 1)
ds, _ = gen_instance(graph, model, m=60, seed=1)
est = estimate_rsc_rss(ds, graph, model, family="model")
print(f"alpha={est.alpha:.4g} beta(per-sample)={est.beta:.4g} "
      f"beta(average)={est.beta_full:.4g} ratio={est.ratio:.1f}")
try:
    print("eta interval", eta_range(est.alpha, est.beta))
except InfeasibleRangeError as exc:
    print("eta interval infeasible:", exc)

lo, hi = eta_range(1.0, 1.0)
print(f"\nalpha = beta = 1: eta in ({lo}, {hi})")
print(f"{'eta':>6s} {'alpha0':>8s} {'delta':>8s} {'lambda':>8s} {'rate':>8s}")
for eta in np.linspace(lo, hi, 9)[1:-1]:
    c = contraction_params(1.0, 1.0, eta)
    print(f"{eta:6.3f} {c.alpha0:8.4f} {c.delta:8.4f} {c.lambda_:8.4f} {c.rate():8.4f}")
