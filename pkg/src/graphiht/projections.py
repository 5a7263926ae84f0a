"""Approximate head and tail projections onto the weighted graph model.

Both projections run the PCSF engine with prizes ``x_i**2`` (normalized by
their maximum) and edge costs normalized by the largest weight, scaled by a
multiplier ``lam``. A geometric bisection on ``lam`` steers the support size
into a target window: larger ``lam`` makes edges dearer and supports smaller.

:func:`exact_project` enumerates the model by brute force and is meant as a
test oracle on graphs with at most 16 vertices.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _gw
from .graph import Graph, WgmModel, connected_components, forest_weight

__all__ = [
    "ProjectionOutcome",
    "head_project",
    "tail_project",
    "exact_project",
    "top_k",
    "SearchHint",
    "model_supports",
    "MAX_EXACT_VERTICES",
]

MAX_EXACT_VERTICES = 16
MAX_BISECTIONS = 30
_LAM_MIN, _LAM_MAX = 1e-12, 1e12


@dataclass(frozen=True, eq=False)
class ProjectionOutcome:
    """Selected support and the input restricted to it."""

    support: np.ndarray
    vector: np.ndarray
    iterations_used: int = 0

    @property
    def achieved_sparsity(self) -> int:
        return len(self.support)

    @property
    def captured(self) -> float:
        """Squared norm of the restricted vector."""
        return float(self.vector @ self.vector)


def _outcome(x, support, iterations=0):
    support = np.asarray(support, dtype=np.int64)
    vec = np.zeros_like(x)
    vec[support] = x[support]
    return ProjectionOutcome(support, vec, iterations)


def _check_input(x, graph):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if len(x) != graph.num_vertices:
        raise ValueError(f"vector has length {len(x)}, graph has "
                         f"{graph.num_vertices} vertices")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector contains non-finite entries")
    return x


class _Searcher:
    """Runs the PCSF engine at a given cost multiplier on fixed prizes."""

    def __init__(self, x, graph, g):
        self.graph = graph
        self.g = g
        # scale first so huge iterates cannot overflow when squared
        u = x / np.abs(x).max()
        self.prizes = u * u
        wmax = graph.weights.max() if graph.num_edges else 0.0
        self.wmax = wmax
        self.costs = graph.weights / wmax if wmax > 0 else np.zeros(graph.num_edges)
        self.eu = np.ascontiguousarray(graph.edges[:, 0])
        self.ev = np.ascontiguousarray(graph.edges[:, 1])
        self.n = graph.num_vertices

    def trim(self, mask, edge_keep, magnitude, target, budget):
        """Leaf-trim to at most ``target`` vertices, then keep trimming until
        the induced forest weight fits ``budget``."""
        g = self.graph
        edge_keep = edge_keep.copy()
        size = int(mask.sum())
        if size > target:
            size = target
            mask = _gw.trim_leaves(self.n, mask, edge_keep, g.indptr, g.nbr,
                                   g.nbr_edge, magnitude, size)
        # any forest on k vertices weighs at most (k - 1) * wmax
        if (size - 1) * self.wmax <= budget + 1e-9:
            return mask
        while size > 0 and forest_weight(g, np.flatnonzero(mask)) > budget + 1e-9:
            size -= 1
            mask = _gw.trim_leaves(self.n, mask, edge_keep, g.indptr, g.nbr,
                                   g.nbr_edge, magnitude, size)
        return mask

    def solve(self, lam):
        costs = self.costs * lam
        sel = _gw.gw_grow(self.n, self.graph.indptr, self.graph.nbr_edge,
                          self.eu, self.ev, costs, self.prizes, self.g)
        tree, edge_keep, _ = _gw.strong_prune(self.n, sel, self.eu, self.ev,
                                              costs, self.prizes, self.g)
        return tree >= 0, edge_keep


class SearchHint:
    """Mutable warm start for consecutive projections of similar vectors.

    Holds the cost multiplier that produced the previous result; the next
    search starts there instead of at 1.
    """

    def __init__(self, lam: float | None = None):
        self.lam = lam

    def __repr__(self):
        return f"SearchHint({self.lam!r})"


def _bisect(search, low_size, high_size, score, total, hint):
    """Geometric search on the cost multiplier.

    Starts at the hinted multiplier (default 1), widens the bracket by a
    factor 4 per step until both sides are known, then bisects in log space.
    ``score(mask, edge_keep)`` maps a forest to ``(support, captured)``.
    Returns the best scored support over all iterates and the number of PCSF
    solves.
    """
    lo = hi = None
    lam = hint.lam if hint is not None and hint.lam else 1.0
    best = None
    best_lam = lam
    iterations = 0
    while iterations < MAX_BISECTIONS:
        iterations += 1
        mask, edge_keep = search.solve(lam)
        size = int(mask.sum())
        cand = score(mask, edge_keep)
        if best is None or cand[1] > best[1]:
            best, best_lam = cand, lam
        if low_size <= size <= high_size:
            break
        if cand[1] >= total * (1 - 1e-12):
            break  # nothing left to capture
        if size > high_size:
            lo = lam
        else:
            hi = lam
        if lo is None:
            lam = hi / 4.0
        elif hi is None:
            lam = lo * 4.0
        else:
            lam = math.sqrt(lo * hi)
        if not _LAM_MIN < lam < _LAM_MAX:
            break
    if hint is not None:
        hint.lam = best_lam
    return best, iterations


def head_project(x, graph: Graph, model: WgmModel,
                 hint: SearchHint | None = None) -> ProjectionOutcome:
    """Support with at most ``model.head_size`` vertices in at most ``g``
    components capturing a large share of ``||x||``.

    The search stops at the first iterate whose size lies in
    ``[s, head_size]``. Larger forests are trimmed to ``head_size`` by leaf
    removal, and further while they exceed the relaxed cost budget. The
    candidate of largest captured mass over all iterates is returned.
    """
    x = _check_input(x, graph)
    if not np.any(x):
        return _outcome(x, [])
    search = _Searcher(x, graph, model.g)
    sq = x * x
    mag = np.abs(x)
    cap = model.head_size
    budget = model.relaxed(model.head_slack, search.wmax).cost_budget

    def score(mask, edge_keep):
        mask = search.trim(mask, edge_keep, mag, cap, budget)
        supp = np.flatnonzero(mask)
        return supp, float(sq[supp].sum())

    best, its = _bisect(search, min(model.s, graph.num_vertices), cap, score,
                        float(sq.sum()), hint)
    return _outcome(x, best[0], its)


def tail_project(x, graph: Graph, model: WgmModel,
                 hint: SearchHint | None = None) -> ProjectionOutcome:
    """Support of at most ``s`` vertices in at most ``g`` components leaving a
    small residual ``||x - x_S||``.

    The search aims for forests of ``s`` to ``model.tail_size`` vertices.
    Every forest found is trimmed back to ``s`` by repeatedly removing the
    leaf of smallest magnitude, which keeps each tree connected, and then
    until the forest weight fits the cost budget. The candidate of largest
    captured mass is returned.
    """
    x = _check_input(x, graph)
    if not np.any(x):
        return _outcome(x, [])
    search = _Searcher(x, graph, model.g)
    sq = x * x
    mag = np.abs(x)
    cap = model.tail_size

    def score(mask, edge_keep):
        mask = search.trim(mask, edge_keep, mag, model.s, model.cost_budget)
        supp = np.flatnonzero(mask)
        return supp, float(sq[supp].sum())

    best, its = _bisect(search, min(model.s, graph.num_vertices), cap, score,
                        float(sq.sum()), hint)
    return _outcome(x, best[0], its)


@functools.lru_cache(maxsize=32)
def model_supports(graph: Graph, model: WgmModel) -> np.ndarray:
    """Boolean ``(k, p)`` matrix listing every support in the model.

    Rows are ordered by size, then lexicographically. Exponential in ``p``.
    """
    p = graph.num_vertices
    if p > MAX_EXACT_VERTICES:
        raise ValueError(f"exact enumeration is limited to {MAX_EXACT_VERTICES} "
                         f"vertices, graph has {p}")
    rows = [np.zeros(p, dtype=bool)]
    for k in range(1, min(model.s, p) + 1):
        for combo in itertools.combinations(range(p), k):
            if connected_components(graph, combo) > model.g:
                continue
            if forest_weight(graph, combo) > model.cost_budget + 1e-9:
                continue
            row = np.zeros(p, dtype=bool)
            row[list(combo)] = True
            rows.append(row)
    out = np.array(rows)
    out.setflags(write=False)
    return out


def exact_project(x, graph: Graph, model: WgmModel) -> ProjectionOutcome:
    """Exact best in-model approximation of ``x`` by exhaustive search.

    Among maximizers the first support in enumeration order wins, so a
    smaller support is preferred when extra vertices add no mass.
    """
    x = _check_input(x, graph)
    table = model_supports(graph, model)
    mass = table @ (x * x)
    return _outcome(x, np.flatnonzero(table[int(np.argmax(mass))]))


def top_k(x, s: int) -> ProjectionOutcome:
    """Keep the ``s`` largest magnitudes; ties go to the lower index."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if not 0 <= s <= len(x):
        raise ValueError(f"need 0 <= s <= {len(x)}, got {s}")
    keep = np.sort(np.argsort(-np.abs(x), kind="stable")[:s])
    return _outcome(x, keep)
