"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The convergence criteria (1, 2, 3, 9) run the full 16x16 experiments and take
a few minutes in total; their sweeps are cached and shared.
"""
import functools
import math
import time

import numpy as np
import pytest

from graphiht.graph import WgmModel, grid_graph, is_in_model
from graphiht.harness import ExperimentSpec, gen_instance, run_sweep, write_traces
from graphiht.objectives import Dataset, full_gradient, grad_batch
from graphiht.projections import exact_project, head_project, model_supports, tail_project
from graphiht.solvers import (SolverConfig, run_graph_scsg_iht, run_graph_svrg_iht,
                              run_solver)
from graphiht.theory import (contraction_params, estimate_rsc_rss, eta_range,
                             fit_convergence_slope)

SEEDS = 10
ETA = 0.01
LONG_EPOCHS = 150


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number}: {detail}"


@functools.lru_cache(maxsize=None)
def recovery_runs():
    graph = grid_graph(16, 16)
    model = WgmModel(32, 1)
    t0 = time.perf_counter()
    traces = []
    for seed in range(42, 42 + SEEDS):
        ds, x_star = gen_instance(graph, model, 80, 0.0, seed)
        cfg = SolverConfig("graph-svrg", ETA, model, seed=seed, max_epochs=50,
                           residual_stop=1e-6)
        traces.append(run_solver(ds, graph, cfg, x_star=x_star)[1])
    return traces, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def sweep(methods, s, B, b):
    spec = ExperimentSpec(rows=16, cols=16, s_values=(s,), eta_values=(ETA,),
                          methods=methods, B_values=(B,), b_values=(b,), trials=SEEDS,
                          seed_base=42, max_epochs=LONG_EPOCHS, residual_stop=1e-3)
    return run_sweep(spec)


def median_hit(traces, key):
    (vals,) = traces.first_below(1e-3, key=key).values()
    return float(np.median(vals)), vals


def test_criterion_1_recovery(capsys):
    traces, wall = recovery_runs()
    hits = sum(t.residual[-1] < 1e-6 for t in traces)
    finals = ", ".join(f"{t.residual[-1]:.3g}" for t in traces)
    ok = hits >= 8 and wall < 60
    report(capsys, 1, ok, f"{hits}/{SEEDS} runs below 1e-6 within 50 epochs, "
           f"wall {wall:.1f}s; final residuals {finals}")


@pytest.mark.parametrize("s", [32, 64])
def test_criterion_2_sparsity_ordering(capsys, s):
    svrg, _ = median_hit(sweep(("graph-svrg",), s, "s", 1), "epoch")
    sto, _ = median_hit(sweep(("graph-sto-iht",), s, "s", "s"), "epoch")
    ok = math.isfinite(svrg) and svrg <= sto
    report(capsys, 2, ok, f"s={s}: median epochs to 1e-3 within {LONG_EPOCHS}: "
           f"GraphSVRG {svrg}, GraphSto-IHT {sto}")


def test_criterion_3_batch_effect(capsys):
    scsg, _ = median_hit(sweep(("graph-scsg",), 32, "n/2", 1), "data_points")
    svrg, _ = median_hit(sweep(("graph-svrg",), 32, "s", 1), "data_points")
    ok = math.isfinite(scsg) and scsg <= svrg
    report(capsys, 3, ok, f"median sample gradients to 1e-3 within {LONG_EPOCHS} epochs: "
           f"GraphSCSG {scsg}, GraphSVRG {svrg}")


def test_criterion_4_degeneracy(capsys):
    graph = grid_graph(16, 16)
    model = WgmModel(32, 1)
    ds, _ = gen_instance(graph, model, 80, 0.0, 42)
    n = ds.n
    svrg = SolverConfig("graph-svrg", ETA, model, inner_loops=n, seed=7, max_epochs=6)
    scsg = SolverConfig("graph-scsg", ETA, model, batch_B=n, minibatch_b=1,
                        scsg_option="fixed", seed=7, max_epochs=6)
    xa, ta = run_graph_svrg_iht(ds, graph, svrg)
    xb, tb = run_graph_scsg_iht(ds, graph, scsg)
    ok = (np.array_equal(xa, xb) and ta.residual == tb.residual
          and ta.data_points == tb.data_points)
    report(capsys, 4, ok, f"{len(ta)} checkpoints over 6 epochs, bitwise equal: {ok}")


def test_criterion_5_unbiased(capsys):
    rng = np.random.default_rng(5)
    ds = Dataset(rng.standard_normal((10, 12)), rng.standard_normal(10))
    worst = 0.0
    for _ in range(20):
        x, x_tilde = rng.standard_normal((2, 12))
        mu = full_gradient(ds, x_tilde)
        v = np.mean([grad_batch(ds, [i], x) - grad_batch(ds, [i], x_tilde) + mu
                     for i in range(ds.n)], axis=0)
        worst = max(worst, float(np.abs(v - full_gradient(ds, x)).max()))
    report(capsys, 5, worst <= 1e-12, f"max deviation {worst:.2e}")


def test_criterion_6_projection_oracles(capsys):
    graph = grid_graph(3, 3)
    model = WgmModel(3, 1)
    head_model = model.relaxed(model.head_slack)
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    head_min, tail_max, bad = math.inf, 0.0, 0
    for _ in range(1000):
        x = rng.standard_normal(9)
        ex = exact_project(x, graph, model)
        head = head_project(x, graph, model)
        tail = tail_project(x, graph, model)
        head_min = min(head_min, np.linalg.norm(head.vector) / np.linalg.norm(ex.vector))
        tail_max = max(tail_max, np.linalg.norm(x - tail.vector) / np.linalg.norm(x - ex.vector))
        bad += not is_in_model(graph, tail.support, model)
        bad += not is_in_model(graph, head.support, head_model)
    wall = time.perf_counter() - t0
    ok = head_min >= 0.25 and tail_max <= 2.0 and bad == 0 and wall < 30
    report(capsys, 6, ok, f"head min ratio {head_min:.4f}, tail max ratio {tail_max:.4f}, "
           f"{bad} out-of-model supports, {wall:.1f}s")


def test_criterion_7_lemma_contraction(capsys):
    # 8 x 12 design over a 3 x 4 grid
    graph = grid_graph(3, 4)
    model = WgmModel(3, 1)
    rng = np.random.default_rng(7)
    a = rng.standard_normal((8, 12))
    ds = Dataset(a, rng.standard_normal(8))
    est = estimate_rsc_rss(ds, graph, model, family="model")
    tau = 1.0 / est.beta
    factor = math.sqrt(est.alpha * est.beta * tau ** 2 - 2 * est.alpha * tau + 1)
    table = model_supports(graph, model)
    table = table[table.sum(axis=1) == model.s]
    worst = math.inf
    for _ in range(100):
        omega = table[rng.integers(len(table))]
        x, y = np.zeros((2, 12))
        x[omega] = rng.standard_normal(model.s)
        y[omega] = rng.standard_normal(model.s)
        d = x - y
        # per-sample gradient difference a_i a_i^T d, restricted to omega
        diffs = a * (a @ d)[:, None]
        diffs[:, ~omega] = 0.0
        lhs = np.mean(np.linalg.norm(d - tau * diffs, axis=1))
        worst = min(worst, factor * np.linalg.norm(d) - lhs)
    report(capsys, 7, worst >= -1e-10,
           f"alpha={est.alpha:.4g}, beta={est.beta:.4g}, min slack {worst:.3g}")


def test_criterion_8_theory(capsys):
    lo, hi = eta_range(1.0, 1.0)
    part1 = abs(lo - 0.75) <= 1e-12 and abs(hi - 1.25) <= 1e-12
    resid = max(abs(e * e - 2 * e + 15 / 16) for e in (lo, hi))
    part2 = resid <= 1e-12
    rng = np.random.default_rng(8)
    worst, worst_app, count, holds = 0.0, 0.0, 0, 0
    for alpha in (0.1, 0.5, 1.0, 2.0, 10.0):
        # the endpoint ratio 16/15 leaves a single point with no interior
        for ratio in np.linspace(1.0, 16 / 15, 6)[:-1]:
            beta = alpha * ratio
            a_lo, a_hi = eta_range(alpha, beta)
            for eta in rng.uniform(a_lo, a_hi, 100):
                c = contraction_params(alpha, beta, eta)
                worst = max(worst, c.rate())
                worst_app = max(worst_app, c.rate(appendix=True))
                holds += c.converges()
                count += 1
    part3 = holds == count
    report(capsys, 8, part1 and part2 and part3,
           f"interval ({lo}, {hi}), back-substitution residual {resid:.1e}; "
           f"delta/(1-lambda) < 1 in {holds}/{count} samples, max {worst:.3f} "
           f"(sqrt(1-alpha0^2) variant max {worst_app:.3f})")


def test_criterion_9_linear_rate(capsys):
    traces, _ = recovery_runs()
    fits = [fit_convergence_slope(t, floor=1e-8) for t in traces]
    good = [slope < 0 and r2 >= 0.9 for slope, r2 in fits]
    summary = ", ".join(f"({slope:.3f}, {r2:.2f})" for slope, r2 in fits)
    report(capsys, 9, all(good), f"{sum(good)}/{len(fits)} traces with slope < 0 "
           f"and R^2 >= 0.9; (slope, R^2): {summary}")


def test_criterion_10_determinism(capsys, tmp_path):
    specs = [
        ExperimentSpec(rows=8, cols=8, s_values=(6, 8), eta_values=(0.05,),
                       methods=("graph-svrg", "graph-scsg", "graph-sto-iht"),
                       B_values=("s",), b_values=(1, 2), trials=2, max_epochs=3),
        ExperimentSpec(rows=6, cols=10, s_values=(5,), g=2, eta_values=(0.1, 0.01),
                       methods=("iht", "sto-iht"), b_values=(3,), trials=2,
                       noise_sigma=0.1, max_epochs=3),
    ]
    same = True
    for k, spec in enumerate(specs):
        paths = [tmp_path / f"{k}_{j}.csv" for j in range(3)]
        write_traces(run_sweep(spec), paths[0])
        write_traces(run_sweep(spec), paths[1])
        write_traces(run_sweep(spec, jobs=2), paths[2])
        blobs = {p.read_bytes() for p in paths}
        same &= len(blobs) == 1
    report(capsys, 10, same, f"{len(specs)} specs rerun serially and with 2 jobs, "
           f"identical CSV bytes: {same}")
