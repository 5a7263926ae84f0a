"""Recover one graph-sparse signal with every solver and compare the traces.

A 16x16 grid, a connected 8-vertex ground truth and 80 noiseless Gaussian
measurements, a well-posed instance on which the methods converge. The table shows residual and estimation error after a fixed
budget of sample gradients, plus the epoch at which each method first
reached a few residual levels.
"""
import numpy as np

from graphiht.graph import WgmModel, grid_graph
from graphiht.harness import gen_instance
from graphiht.solvers import SolverConfig, run_solver

graph = grid_graph(16, 16)
model = WgmModel(8, 1)
ds, x_star = gen_instance(graph, model, m=80, noise_sigma=0.0, seed=42)
print(f"n={ds.n} measurements, p={ds.p} coefficients, ||y|| = {np.linalg.norm(ds.y):.3f}")

configs = {
    "iht": SolverConfig("iht", 0.3, model),
    "sto-iht": SolverConfig("sto-iht", 0.3, model, batch_B=8, minibatch_b=8),
    "graph-sto-iht": SolverConfig("graph-sto-iht", 0.3, model, batch_B=8, minibatch_b=8),
    "graph-svrg": SolverConfig("graph-svrg", 0.02, model),
    "graph-scsg": SolverConfig("graph-scsg", 0.05, model, batch_B=40, minibatch_b=1),
}
levels = (10.0, 1.0, 1e-3)
print(f"{'method':14s} {'residual':>10s} {'error':>10s} " +
      " ".join(f"{'ep<' + format(v, 'g'):>8s}" for v in levels))
for name, cfg in configs.items():
    cfg = cfg.with_(max_epochs=40, seed=42, residual_stop=1e-6)
    x, trace = run_solver(ds, graph, cfg, x_star=x_star)
    marks = " ".join(f"{trace.first_below(v):8.2f}" for v in levels)
    print(f"{name:14s} {trace.residual[-1]:10.4g} {np.linalg.norm(x - x_star):10.4g} {marks}")
