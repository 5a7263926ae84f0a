"""Undirected weighted graphs over coefficient indices and the weighted graph
model (WGM) of supports.

Vertices are the integers ``0..p-1``. A support is a sorted ``int64`` array of
unique vertex indices; :func:`as_support` normalizes any iterable to that form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.sparse.csgraph import minimum_spanning_tree

__all__ = [
    "Graph",
    "WgmModel",
    "GenerationError",
    "as_support",
    "grid_graph",
    "connected_components",
    "forest_weight",
    "is_in_model",
    "random_connected_support",
    "load_edge_list",
    "save_edge_list",
]


class GenerationError(RuntimeError):
    """Raised when a random support cannot be placed on the graph."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with nonnegative edge weights.

    ``edges`` is an ``(m, 2)`` int array with ``u < v`` per row and ``weights``
    the matching ``(m,)`` float array. Instances are immutable; the CSR
    adjacency (``indptr``, ``nbr``, ``nbr_edge``) is built once at construction.
    """

    num_vertices: int
    edges: np.ndarray
    weights: np.ndarray
    indptr: np.ndarray = field(init=False, repr=False)
    nbr: np.ndarray = field(init=False, repr=False)
    nbr_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = int(self.num_vertices)
        if p < 1:
            raise ValueError(f"num_vertices must be positive, got {p}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(weights) != len(edges):
            raise ValueError("edges and weights differ in length")
        if len(edges):
            if edges.min() < 0 or edges.max() >= p:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self loops are not allowed")
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError("edge weights must be finite and nonnegative")
            edges = np.sort(edges, axis=1)
            keys = edges[:, 0] * p + edges[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate undirected edge")
        edges.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "num_vertices", p)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)

        m = len(edges)
        ends = np.concatenate([edges[:, 0], edges[:, 1]])
        others = np.concatenate([edges[:, 1], edges[:, 0]])
        eids = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((others, ends))
        indptr = np.zeros(p + 1, dtype=np.int64)
        np.add.at(indptr, ends + 1, 1)
        indptr = np.cumsum(indptr)
        for name, arr in (("indptr", indptr),
                          ("nbr", others[order].astype(np.int64)),
                          ("nbr_edge", eids[order].astype(np.int64))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> np.ndarray:
        return self.nbr[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(np.any(self.neighbors(u) == v))

    def adjacency(self) -> csr_matrix:
        """Symmetric sparse weight matrix (zero-weight edges stored as tiny)."""
        p = self.num_vertices
        # csgraph treats explicit zeros as missing edges
        w = np.where(self.weights > 0, self.weights, 1e-300)
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        return csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(p, p))


@dataclass(frozen=True)
class WgmModel:
    """Parameters of the ``(G, s, g, C)`` weighted graph model.

    ``cost_budget`` defaults to ``s - g``, which admits every ``s``-vertex
    support with ``g`` components on a unit-weight graph. ``head_slack`` and
    ``tail_slack`` bound the support size of the approximate projections at
    ``ceil(slack * s)`` before the tail output is trimmed back to ``s``.
    """

    s: int
    g: int = 1
    cost_budget: float | None = None
    head_slack: float = 2.5
    tail_slack: float = 1.5

    def __post_init__(self):
        if self.s < 1 or self.g < 1 or self.g > self.s:
            raise ValueError(f"need 1 <= g <= s, got s={self.s}, g={self.g}")
        if self.cost_budget is None:
            object.__setattr__(self, "cost_budget", float(self.s - self.g))
        if self.cost_budget < 0:
            raise ValueError("cost_budget must be nonnegative")
        if self.head_slack < 1 or self.tail_slack < 1:
            raise ValueError("sparsity slack must be >= 1")

    @property
    def head_size(self) -> int:
        return int(math.ceil(self.head_slack * self.s - 1e-9))

    @property
    def tail_size(self) -> int:
        return int(math.ceil(self.tail_slack * self.s - 1e-9))

    def relaxed(self, slack: float, max_weight: float = 1.0) -> "WgmModel":
        """Model with sparsity ``ceil(slack * s)`` and the budget widened by the
        weight of the extra edges such a support may need."""
        s2 = int(math.ceil(slack * self.s - 1e-9))
        return WgmModel(s2, self.g, self.cost_budget + (s2 - self.s) * max_weight,
                        self.head_slack, self.tail_slack)


def as_support(indices, p: int | None = None) -> np.ndarray:
    supp = np.unique(np.asarray(indices, dtype=np.int64).reshape(-1))
    if p is not None and len(supp) and (supp[0] < 0 or supp[-1] >= p):
        raise ValueError(f"support index out of range [0, {p})")
    return supp


def grid_graph(rows: int, cols: int) -> Graph:
    """4-connected ``rows x cols`` lattice, row-major vertex order, unit weights."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    edges = np.concatenate([horiz, vert]).reshape(-1, 2)
    return Graph(rows * cols, edges, np.ones(len(edges)))


def _induced(graph: Graph, supp: np.ndarray):
    mask = np.zeros(graph.num_vertices, dtype=bool)
    mask[supp] = True
    keep = mask[graph.edges[:, 0]] & mask[graph.edges[:, 1]]
    pos = np.full(graph.num_vertices, -1, dtype=np.int64)
    pos[supp] = np.arange(len(supp))
    e = pos[graph.edges[keep]]
    w = graph.weights[keep]
    k = len(supp)
    w = np.where(w > 0, w, 1e-300)
    mat = csr_matrix((w, (e[:, 0], e[:, 1])), shape=(k, k))
    return mat


def connected_components(graph: Graph, support) -> int:
    """Number of connected components of the subgraph induced by ``support``."""
    supp = as_support(support, graph.num_vertices)
    if len(supp) == 0:
        return 0
    n, _ = _cc(_induced(graph, supp), directed=False)
    return int(n)


def forest_weight(graph: Graph, support) -> float:
    """Weight of a minimum spanning forest of the induced subgraph."""
    supp = as_support(support, graph.num_vertices)
    if len(supp) < 2:
        return 0.0
    mst = minimum_spanning_tree(_induced(graph, supp))
    w = mst.data
    return float(np.sum(np.where(w > 1e-200, w, 0.0)))


def is_in_model(graph: Graph, support, model: WgmModel) -> bool:
    supp = as_support(support, graph.num_vertices)
    if len(supp) > model.s:
        return False
    if connected_components(graph, supp) > model.g:
        return False
    return forest_weight(graph, supp) <= model.cost_budget + 1e-9


def _component_sizes(s: int, g: int) -> list[int]:
    base, extra = divmod(s, g)
    return [base + (1 if i < extra else 0) for i in range(g)]


def _walk_component(graph, size, taken, blocked, rng, max_steps):
    free = np.flatnonzero(~taken & ~blocked)
    if len(free) == 0:
        return None
    cur = int(free[rng.integers(len(free))])
    comp = [cur]
    members = {cur}
    steps = 0
    while len(comp) < size:
        steps += 1
        if steps > max_steps:
            return None
        nb = graph.neighbors(cur)
        if len(nb) == 0:
            return None
        nxt = int(nb[rng.integers(len(nb))])
        if nxt not in members:
            if taken[nxt] or blocked[nxt]:
                continue
            members.add(nxt)
            comp.append(nxt)
        cur = nxt
    return comp


def random_connected_support(graph: Graph, s: int, g: int, rng,
                             max_retries: int = 100) -> np.ndarray:
    """Support of exactly ``s`` vertices in exactly ``g`` components.

    Each component is grown by a random walk started at a vertex that is
    neither taken nor adjacent to an earlier component; component sizes differ
    by at most one.
    """
    if g < 1 or s < g:
        raise ValueError(f"need 1 <= g <= s, got s={s}, g={g}")
    if s > graph.num_vertices:
        raise GenerationError(f"s={s} exceeds the number of vertices")
    rng = np.random.default_rng(rng)
    sizes = _component_sizes(s, g)
    for _ in range(max_retries):
        taken = np.zeros(graph.num_vertices, dtype=bool)
        blocked = np.zeros(graph.num_vertices, dtype=bool)
        ok = True
        for size in sizes:
            comp = _walk_component(graph, size, taken, blocked, rng,
                                   max_steps=50 * size + 100)
            if comp is None:
                ok = False
                break
            taken[comp] = True
            for v in comp:
                blocked[graph.neighbors(v)] = True
        if ok:
            return np.flatnonzero(taken).astype(np.int64)
    raise GenerationError(
        f"could not place {g} components of total size {s} after "
        f"{max_retries} attempts")


def load_edge_list(path) -> Graph:
    """Read ``p <num_vertices> <num_edges>`` followed by ``e <u> <v> <w>`` lines."""
    path = Path(path)
    lines = [ln.split() for ln in path.read_text().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0][0] != "p" or len(lines[0]) != 3:
        raise ValueError(f"{path}: first line must be 'p <num_vertices> <num_edges>'")
    p, m = int(lines[0][1]), int(lines[0][2])
    edges, weights = [], []
    for k, parts in enumerate(lines[1:], start=2):
        if parts[0] != "e" or len(parts) != 4:
            raise ValueError(f"{path}: malformed edge line {k}: {' '.join(parts)}")
        edges.append((int(parts[1]), int(parts[2])))
        weights.append(float(parts[3]))
    if len(edges) != m:
        raise ValueError(f"{path}: header announces {m} edges, found {len(edges)}")
    try:
        return Graph(p, np.array(edges, dtype=np.int64).reshape(-1, 2), weights)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def save_edge_list(graph: Graph, path) -> None:
    out = [f"p {graph.num_vertices} {graph.num_edges}"]
    out += [f"e {u} {v} {w!r}" for (u, v), w in zip(graph.edges.tolist(),
                                                   graph.weights.tolist())]
    Path(path).write_text("\n".join(out) + "\n")
