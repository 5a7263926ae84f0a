"""Prize-collecting Steiner forest via Goemans-Williamson moat growing.

The unrooted growth phase stops once at most ``g`` clusters are still active.
Every tree of the grown forest is then strongly pruned around its most
valuable root, and the ``g`` trees of largest net worth are returned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _gw
from .graph import Graph

__all__ = ["PcsfInstance", "Forest", "solve_pcsf", "forest_objective"]


@dataclass(frozen=True, eq=False)
class PcsfInstance:
    graph: Graph
    prizes: np.ndarray
    costs: np.ndarray
    target_components: int = 1

    def __post_init__(self):
        prizes = np.ascontiguousarray(self.prizes, dtype=np.float64)
        costs = np.ascontiguousarray(self.costs, dtype=np.float64)
        if prizes.shape != (self.graph.num_vertices,):
            raise ValueError("need one prize per vertex")
        if costs.shape != (self.graph.num_edges,):
            raise ValueError("need one cost per edge")
        if np.any(prizes < 0) or np.any(costs < 0):
            raise ValueError("prizes and costs must be nonnegative")
        if not (np.all(np.isfinite(prizes)) and np.all(np.isfinite(costs))):
            raise ValueError("prizes and costs must be finite")
        if self.target_components < 1:
            raise ValueError("target_components must be positive")
        object.__setattr__(self, "prizes", prizes)
        object.__setattr__(self, "costs", costs)


@dataclass(frozen=True, eq=False)
class Forest:
    """Output forest: sorted vertex support and indices into ``graph.edges``."""

    vertices: np.ndarray
    edges: np.ndarray
    num_trees: int

    def vertex_mask(self, p: int) -> np.ndarray:
        mask = np.zeros(p, dtype=bool)
        mask[self.vertices] = True
        return mask


def _run(graph: Graph, prizes, costs, g):
    eu = np.ascontiguousarray(graph.edges[:, 0])
    ev = np.ascontiguousarray(graph.edges[:, 1])
    sel = _gw.gw_grow(graph.num_vertices, graph.indptr, graph.nbr_edge,
                      eu, ev, costs, prizes, g)
    tree, edge_keep, ntrees = _gw.strong_prune(graph.num_vertices, sel, eu, ev,
                                                costs, prizes, g)
    return tree, edge_keep, ntrees


def solve_pcsf(instance: PcsfInstance) -> Forest:
    """Approximately minimize forfeited prize plus edge cost over forests with
    at most ``target_components`` trees. Deterministic for a fixed instance."""
    tree, edge_keep, ntrees = _run(instance.graph, instance.prizes,
                                   instance.costs, instance.target_components)
    return Forest(np.flatnonzero(tree >= 0).astype(np.int64),
                  np.flatnonzero(edge_keep).astype(np.int64), int(ntrees))


def forest_objective(instance: PcsfInstance, forest: Forest) -> float:
    mask = forest.vertex_mask(instance.graph.num_vertices)
    return float(instance.prizes[~mask].sum() + instance.costs[forest.edges].sum())
