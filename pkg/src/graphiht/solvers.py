"""Hard-thresholding solvers: IHT, StoIHT, GraphSto-IHT, GraphSVRG-IHT and
GraphSCSG-IHT.

All methods start from ``x = 0``, charge every per-sample gradient to a
:class:`GradientAccount`, and record a checkpoint every ``ceil(n / 4)``
sample gradients. Batches come from one per-run generator; inner-loop
lengths of the geometric SCSG option come from a second, independent one.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Graph, WgmModel
from .objectives import Dataset, GradientAccount, grad_batch, residual_norm, loss
from .objectives import LEAST_SQUARES
from .projections import SearchHint, head_project, tail_project, top_k

__all__ = [
    "METHODS",
    "SolverConfig",
    "Trace",
    "DivergenceError",
    "graph_step",
    "draw_batch",
    "draw_inner_length",
    "run_solver",
    "run_graph_svrg_iht",
    "run_graph_scsg_iht",
    "run_graph_sto_iht",
    "run_iht",
    "run_sto_iht",
]

METHODS = ("iht", "sto-iht", "graph-sto-iht", "graph-svrg", "graph-scsg")
SCSG_OPTIONS = ("geometric", "fixed")


class DivergenceError(FloatingPointError):
    """An iterate became non-finite. ``trace`` holds the checkpoints so far."""

    def __init__(self, iteration, trace=None):
        super().__init__(f"non-finite iterate at step {iteration}")
        self.iteration = iteration
        self.trace = trace


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by all solvers.

    ``inner_loops`` defaults to ``n`` for GraphSVRG-IHT. ``outer_loops`` of
    ``None`` leaves the run bounded by ``max_epochs`` and ``residual_stop``
    only. For the single-loop methods each step counts as an outer loop.
    """

    method: str = "graph-svrg"
    eta: float = 0.01
    model: WgmModel = field(default_factory=lambda: WgmModel(1))
    outer_loops: int | None = None
    inner_loops: int | None = None
    batch_B: int = 1
    minibatch_b: int = 1
    scsg_option: str = "geometric"
    seed: int = 42
    max_epochs: float = 50.0
    residual_stop: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.scsg_option not in SCSG_OPTIONS:
            raise ValueError(f"scsg_option must be one of {SCSG_OPTIONS}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.outer_loops is not None and self.outer_loops < 0:
            raise ValueError("outer_loops must be nonnegative")
        if self.inner_loops is not None and self.inner_loops < 1:
            raise ValueError("inner_loops must be positive")
        if not 1 <= self.minibatch_b <= self.batch_B:
            raise ValueError("need 1 <= b <= B")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")

    def checked(self, n: int) -> "SolverConfig":
        if self.batch_B > n:
            raise ValueError(f"batch size B={self.batch_B} exceeds n={n}")
        return self

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


class Trace:
    """Checkpoint log of one run."""

    columns = ("epoch", "data_points", "residual", "est_error", "support_size",
               "elapsed_ms")

    def __init__(self, n: int):
        self.n = n
        self.data_points: list[int] = []
        self.residual: list[float] = []
        self.est_error: list[float | None] = []
        self.support_size: list[int] = []
        self.elapsed_ms: list[int] = []

    def __len__(self):
        return len(self.data_points)

    @property
    def epoch(self) -> np.ndarray:
        return np.asarray(self.data_points, dtype=np.float64) / self.n

    def record(self, data_points, residual, est_error, support_size, elapsed_ms):
        if self.data_points and data_points <= self.data_points[-1]:
            return
        self.data_points.append(int(data_points))
        self.residual.append(float(residual))
        self.est_error.append(None if est_error is None else float(est_error))
        self.support_size.append(int(support_size))
        self.elapsed_ms.append(int(elapsed_ms))

    def rows(self):
        ep = self.epoch
        for k in range(len(self)):
            yield (float(ep[k]), self.data_points[k], self.residual[k],
                   self.est_error[k], self.support_size[k], self.elapsed_ms[k])

    def first_below(self, level: float, key: str = "epoch") -> float:
        """Epoch (or data-point count) of the first checkpoint with residual
        at most ``level``; ``inf`` if never reached."""
        res = np.asarray(self.residual)
        hit = np.flatnonzero(res <= level)
        if len(hit) == 0:
            return math.inf
        vals = self.epoch if key == "epoch" else np.asarray(self.data_points)
        return float(vals[hit[0]])


def graph_step(x, grad, eta: float, graph: Graph, model: WgmModel,
               hints=None) -> np.ndarray:
    """Head-project the gradient, take a step, tail-project the result.

    ``hints`` is an optional ``(head, tail)`` pair of :class:`SearchHint`
    objects that carries the projection searches over from the previous step.
    """
    hh, th = hints if hints is not None else (None, None)
    tau = head_project(grad, graph, model, hh).vector
    return tail_project(x - eta * tau, graph, model, th).vector


def draw_batch(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Uniform subset of ``range(n)`` without replacement.

    A full batch is ``arange(n)`` and consumes no randomness, so a run anchored
    on full batches shares its stream with one that takes full gradients.
    """
    if size >= n:
        return np.arange(n)
    if size == 1:
        return np.array([rng.integers(n)])
    return np.sort(rng.choice(n, size, replace=False))


def draw_inner_length(rng: np.random.Generator, B: int, b: int) -> int:
    """Geometric count on ``{0, 1, ...}`` with mean ``B / b``; zero becomes one."""
    gamma = B / (B + b)
    k = int(rng.geometric(1.0 - gamma)) - 1
    return max(k, 1)


class _Run:
    """Bookkeeping shared by all solver loops."""

    def __init__(self, dataset, config, account, x_star):
        self.dataset = dataset
        self.config = config
        self.account = account if account is not None else GradientAccount()
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=np.float64)
        self.n = dataset.n
        self.trace = Trace(self.n)
        self.every = math.ceil(self.n / 4)
        self.start_count = self.account.sample_gradients_evaluated
        self.budget = config.max_epochs * self.n
        self.next_mark = self.every
        self.t0 = time.perf_counter()
        self.done = False
        self.steps = 0
        batch_seq, k_seq = np.random.SeedSequence(config.seed).spawn(2)
        self.batch_rng = np.random.default_rng(batch_seq)
        self.k_rng = np.random.default_rng(k_seq)
        self.hints = (SearchHint(), SearchHint())

    @property
    def used(self):
        return self.account.sample_gradients_evaluated - self.start_count

    def metric(self, x):
        if self.dataset.kind == LEAST_SQUARES:
            return residual_norm(self.dataset, x)
        return loss(self.dataset, x)

    def checkpoint(self, x):
        res = self.metric(x)
        err = None if self.x_star is None else float(np.linalg.norm(x - self.x_star))
        ms = int(round(1000 * (time.perf_counter() - self.t0)))
        self.trace.record(self.used, res, err, np.count_nonzero(x), ms)
        if res <= self.config.residual_stop:
            self.done = True

    def after_step(self, x):
        """Validate the iterate, checkpoint on schedule, update stop flags."""
        self.steps += 1
        if not np.all(np.isfinite(x)):
            raise DivergenceError(self.steps, self.trace)
        if self.used >= self.next_mark:
            self.checkpoint(x)
            self.next_mark = (self.used // self.every + 1) * self.every
        if self.used >= self.budget:
            self.done = True

    def finish(self, x):
        if not self.trace.data_points or self.trace.data_points[-1] != self.used:
            self.checkpoint(x)
        return x, self.trace


def _graph_vr_loop(dataset, graph, config, account, x_star, anchor_size,
                   inner_length, mini):
    """Shared outer/inner loop of the variance-reduced graph methods."""
    run = _Run(dataset, config, account, x_star)
    model = config.model
    x = np.zeros(dataset.p)
    run.checkpoint(x)
    j = 0
    while not run.done and (config.outer_loops is None or j < config.outer_loops):
        j += 1
        x_tilde = x
        anchor = grad_batch(dataset, draw_batch(run.batch_rng, run.n, anchor_size),
                            x_tilde, run.account)
        if run.used >= run.budget:
            break
        for _ in range(inner_length(run)):
            idx = draw_batch(run.batch_rng, run.n, mini)
            v = (grad_batch(dataset, idx, x, run.account)
                 - grad_batch(dataset, idx, x_tilde, run.account) + anchor)
            x = graph_step(x, v, config.eta, graph, model, run.hints)
            run.after_step(x)
            if run.done:
                break
    return run.finish(x)


def run_graph_svrg_iht(dataset: Dataset, graph: Graph, config: SolverConfig,
                       account: GradientAccount | None = None, x_star=None):
    """GraphSVRG-IHT: full-gradient anchor, ``K`` single-sample corrected steps
    per outer loop. Returns ``(x, trace)``."""
    config.checked(dataset.n)
    K = config.inner_loops or dataset.n
    return _graph_vr_loop(dataset, graph, config, account, x_star,
                          dataset.n, lambda run: K, 1)


def run_graph_scsg_iht(dataset: Dataset, graph: Graph, config: SolverConfig,
                       account: GradientAccount | None = None, x_star=None):
    """GraphSCSG-IHT: anchor on a size-``B`` batch, corrected steps on size-``b``
    mini-batches. The inner length is geometric with mean ``B / b`` or, for
    the fixed option, ``inner_loops`` if given and ``ceil(B / b)`` otherwise."""
    config.checked(dataset.n)
    B, b = config.batch_B, config.minibatch_b
    if config.scsg_option == "fixed":
        K = config.inner_loops or math.ceil(B / b)
        length = lambda run: K  # noqa: E731
    else:
        length = lambda run: draw_inner_length(run.k_rng, B, b)  # noqa: E731
    return _graph_vr_loop(dataset, graph, config, account, x_star, B, length, b)


def _single_loop(dataset, config, account, x_star, batch_size, step):
    run = _Run(dataset, config, account, x_star)
    x = np.zeros(dataset.p)
    run.checkpoint(x)
    j = 0
    while not run.done and (config.outer_loops is None or j < config.outer_loops):
        j += 1
        idx = draw_batch(run.batch_rng, run.n, batch_size)
        x = step(x, grad_batch(dataset, idx, x, run.account))
        run.after_step(x)
    return run.finish(x)


def run_graph_sto_iht(dataset: Dataset, graph: Graph, config: SolverConfig,
                      account: GradientAccount | None = None, x_star=None):
    """GraphSto-IHT: plain size-``b`` stochastic gradient plus the graph step."""
    config.checked(dataset.n)
    model = config.model
    hints = (SearchHint(), SearchHint())
    return _single_loop(dataset, config, account, x_star, config.minibatch_b,
                        lambda x, g: graph_step(x, g, config.eta, graph, model,
                                                hints))


def run_iht(dataset: Dataset, config: SolverConfig,
            account: GradientAccount | None = None, x_star=None):
    """Full-gradient IHT with top-``s`` thresholding."""
    s = config.model.s
    return _single_loop(dataset, config, account, x_star, dataset.n,
                        lambda x, g: top_k(x - config.eta * g, s).vector)


def run_sto_iht(dataset: Dataset, config: SolverConfig,
                account: GradientAccount | None = None, x_star=None):
    """StoIHT: size-``b`` stochastic gradient with top-``s`` thresholding."""
    config.checked(dataset.n)
    s = config.model.s
    return _single_loop(dataset, config, account, x_star, config.minibatch_b,
                        lambda x, g: top_k(x - config.eta * g, s).vector)


def run_solver(dataset: Dataset, graph: Graph, config: SolverConfig,
               account: GradientAccount | None = None, x_star=None):
    """Dispatch on ``config.method``."""
    if config.method == "graph-svrg":
        return run_graph_svrg_iht(dataset, graph, config, account, x_star)
    if config.method == "graph-scsg":
        return run_graph_scsg_iht(dataset, graph, config, account, x_star)
    if config.method == "graph-sto-iht":
        return run_graph_sto_iht(dataset, graph, config, account, x_star)
    if config.method == "iht":
        return run_iht(dataset, config, account, x_star)
    return run_sto_iht(dataset, config, account, x_star)
