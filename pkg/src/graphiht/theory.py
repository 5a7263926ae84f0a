"""Convergence constants of the variance-reduced graph IHT analysis.

Two smoothness constants are reported for least squares. ``beta`` bounds each
sample, ``max_i max_S ||a_{i,S}||**2``, which is what the per-sample
contraction argument needs. ``beta_full`` is the largest restricted
eigenvalue of ``A^T A / n``, the smoothness of the average loss.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph import Graph, WgmModel, connected_components, random_connected_support
from .objectives import LEAST_SQUARES, Dataset
from .projections import MAX_EXACT_VERTICES, model_supports

__all__ = [
    "RscRssEstimate",
    "EtaRange",
    "InfeasibleRangeError",
    "InsufficientDataError",
    "ContractionParams",
    "estimate_rsc_rss",
    "restricted_constants",
    "eta_range",
    "contraction_params",
    "fit_convergence_slope",
]

ETA_DISCRIMINANT = 3.75


class InfeasibleRangeError(ValueError):
    """No learning rate satisfies the contraction condition."""


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class RscRssEstimate:
    alpha: float
    beta: float
    beta_full: float
    scope: str
    exact: bool = True

    @property
    def ratio(self) -> float:
        return self.beta / self.alpha


def restricted_constants(a_matrix, masks):
    """``(alpha, beta, beta_full)`` over the supports given as boolean rows.

    ``alpha``/``beta_full`` are the extreme eigenvalues of ``A_S^T A_S / n``;
    ``beta`` is the largest restricted squared row norm.
    """
    a = np.asarray(a_matrix, dtype=np.float64)
    n = a.shape[0]
    masks = np.asarray(masks, dtype=bool)
    row_sq = a * a
    alpha, beta_full = math.inf, 0.0
    for mask in masks:
        idx = np.flatnonzero(mask)
        if len(idx) == 0:
            continue
        sub = a[:, idx]
        ev = np.linalg.eigvalsh(sub.T @ sub / n)
        alpha = min(alpha, float(ev[0]))
        beta_full = max(beta_full, float(ev[-1]))
    beta = float((row_sq @ masks.T.astype(np.float64)).max()) if len(masks) else 0.0
    return alpha, beta, beta_full


def _sum_family(graph, model):
    """Supports of ``M + M_H + M_T``: size ``s + head_size + s``, at most
    ``3 g`` components. Only maximal supports are listed; eigenvalue
    interlacing makes smaller members irrelevant."""
    p = graph.num_vertices
    k = min(p, 2 * model.s + model.head_size)
    rows = []
    for combo in itertools.combinations(range(p), k):
        if connected_components(graph, combo) <= 3 * model.g:
            row = np.zeros(p, dtype=bool)
            row[list(combo)] = True
            rows.append(row)
    return np.array(rows).reshape(-1, p)


def estimate_rsc_rss(dataset: Dataset, graph: Graph, model: WgmModel,
                     family: str = "sum", samples: int = 2000,
                     rng=None) -> RscRssEstimate:
    """Restricted strong convexity and smoothness constants.

    :param family: ``"model"`` for supports in the model itself, ``"sum"`` for
        unions of a model, a head and a tail support.
    :param samples: number of random supports when the graph is too large to
        enumerate. Sampled values bound ``alpha`` from above and ``beta`` from
        below and are flagged ``exact=False``.
    """
    if dataset.kind != LEAST_SQUARES:
        raise ValueError("restricted constants need a constant Hessian (least squares)")
    if graph.num_vertices != dataset.p:
        raise ValueError("graph and dataset dimensions differ")
    if family not in ("model", "sum"):
        raise ValueError(f"family must be 'model' or 'sum', got {family!r}")
    exact = graph.num_vertices <= MAX_EXACT_VERTICES
    if exact:
        masks = model_supports(graph, model) if family == "model" else _sum_family(graph, model)
    else:
        rng = np.random.default_rng(rng)
        if family == "model":
            size, comps = model.s, model.g
        else:
            size = min(graph.num_vertices, 2 * model.s + model.head_size)
            comps = 3 * model.g
        masks = np.zeros((samples, graph.num_vertices), dtype=bool)
        for k in range(samples):
            masks[k, random_connected_support(graph, size, min(comps, size), rng)] = True
    alpha, beta, beta_full = restricted_constants(dataset.a_matrix, masks)
    if not alpha > 1e-12 * max(beta_full, 1.0):
        raise ValueError("restricted strong convexity fails: smallest restricted "
                         f"eigenvalue is {alpha:.3g}")
    scope = f"{family} family, s={model.s}, g={model.g}, {len(masks)} supports"
    return RscRssEstimate(alpha, beta, beta_full, scope, exact)


class EtaRange(NamedTuple):
    low: float
    high: float


def eta_range(alpha: float, beta: float) -> EtaRange:
    """Learning rates for which ``sqrt(a b eta^2 - 2 a eta + 1) < 1/4``.

    The endpoints are the roots of ``a b eta^2 - 2 a eta + 15/16``. Raises
    :class:`InfeasibleRangeError` when ``beta / alpha > 16 / 15``.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    disc = 4 * alpha * alpha - ETA_DISCRIMINANT * alpha * beta
    if disc < 0:
        if disc > -1e-12 * alpha * alpha:
            disc = 0.0  # beta / alpha is 16/15 up to rounding
        else:
            raise InfeasibleRangeError(
                f"need beta/alpha <= 16/15, got {beta / alpha:.6g}")
    root = math.sqrt(disc)
    den = 2 * alpha * beta
    return EtaRange((2 * alpha - root) / den, (2 * alpha + root) / den)


def _sqrt(v):
    return math.sqrt(v) if v >= 0 else math.nan


def _div(a, b):
    return a / b if b != 0 else math.nan


@dataclass(frozen=True)
class ContractionParams:
    """Constants of the per-epoch contraction.

    ``delta`` uses ``sqrt(1 - alpha0)`` and ``delta_appendix`` uses
    ``sqrt(1 - alpha0**2)``; ``lambda_`` and ``lambda_appendix`` are the two
    written forms of the iterate factor. Undefined pieces are ``nan``.
    """

    alpha0: float
    beta0: float
    sigma1_coeff: float
    sigma1_coeff_gamma: float
    delta: float
    delta_appendix: float
    lambda_: float
    lambda_appendix: float
    gamma: float
    tau: float
    eta: float
    c_h: float
    c_t: float

    @property
    def lambdas_agree(self) -> bool:
        return abs(self.lambda_ - self.lambda_appendix) <= 1e-12 * max(1.0, abs(self.lambda_))

    def rate(self, appendix: bool = False) -> float:
        """``delta / (1 - lambda)``; below one means the bound contracts."""
        d = self.delta_appendix if appendix else self.delta
        lam = self.lambda_appendix if appendix else self.lambda_
        return _div(d, 1.0 - lam)

    def converges(self, appendix: bool = False) -> bool:
        return self.lambda_ < 1 and self.rate(appendix) < 1


def contraction_params(alpha: float, beta: float, eta: float, tau: float | None = None,
                       c_h: float = 1.0, c_t: float = 1.0) -> ContractionParams:
    """Evaluate the contraction constants.

    :param tau: auxiliary step of the head-projection lemma; defaults to ``eta``.
    :param c_h: head approximation factor in ``(0, 1]``.
    :param c_t: tail approximation factor, at least 1.
    """
    if not (alpha > 0 and beta > 0 and eta > 0):
        raise ValueError("alpha, beta and eta must be positive")
    tau = eta if tau is None else tau
    if not tau > 0:
        raise ValueError("tau must be positive")
    rad = alpha * beta * tau * tau - 2 * alpha * tau + 1
    if rad < 0:
        raise ValueError(f"alpha*beta*tau^2 - 2*alpha*tau + 1 = {rad:.3g} is negative")
    alpha0 = c_h * alpha * tau - math.sqrt(rad)
    beta0 = (1 + c_h) * tau
    r_eta = _sqrt(alpha * beta * eta * eta - 2 * alpha * eta + 1)
    s1 = _sqrt(1 - alpha0)
    s2 = _sqrt(1 - alpha0 * alpha0)
    delta = (1 + c_t) * (r_eta + s1)
    delta_app = (1 + c_t) * (r_eta + s2)
    lam = (1 + c_t) * 2 * r_eta
    lam_app = 2 * (1 + c_t) * (delta_app / (1 + c_t) - s2)
    sig_lemma = _div(beta0, alpha0) + _sqrt(_div(alpha0 * beta0, 1 - alpha0))
    sig_gamma = _div(beta0, alpha0) + _div(alpha0 * beta0, s2)
    gamma = (1 + c_t) * (sig_gamma + eta)
    return ContractionParams(alpha0, beta0, sig_lemma, sig_gamma, delta, delta_app,
                             lam, lam_app, gamma, tau, eta, c_h, c_t)


def fit_convergence_slope(trace, floor: float = 1e-8, x_axis: str = "epoch"):
    """Least-squares line through ``ln(residual)`` against epoch.

    ``trace`` is a :class:`~graphiht.solvers.Trace` or a pair of arrays
    ``(x, residual)``. Only checkpoints with residual above ``floor`` are used.
    Returns ``(slope, r_squared)``.
    """
    if isinstance(trace, tuple):
        xs, res = (np.asarray(v, dtype=np.float64) for v in trace)
    else:
        xs = trace.epoch if x_axis == "epoch" else np.asarray(trace.data_points, float)
        res = np.asarray(trace.residual, dtype=np.float64)
    keep = np.isfinite(res) & (res > floor)
    if keep.sum() < 5:
        raise InsufficientDataError(
            f"need at least 5 checkpoints above {floor:g}, have {int(keep.sum())}")
    xs, ly = xs[keep], np.log(res[keep])
    slope, icpt = np.polyfit(xs, ly, 1)
    fit = slope * xs + icpt
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if ss_tot == 0:
        slope = 0.0
    return float(slope), float(r2)
