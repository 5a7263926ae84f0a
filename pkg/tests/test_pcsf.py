import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as cc

from graphiht.graph import Graph, grid_graph
from graphiht.pcsf import Forest, PcsfInstance, forest_objective, solve_pcsf


def brute_force(inst):
    """Exact optimum over vertex subsets whose induced subgraph has at most
    ``g`` components; each subset is spanned by its minimum spanning forest
    (Kruskal over the cost-sorted edges)."""
    g = inst.graph
    p = g.num_vertices
    order = np.argsort(inst.costs, kind="stable")
    edges = [(int(g.edges[e, 0]), int(g.edges[e, 1]), float(inst.costs[e])) for e in order]
    prizes = inst.prizes.tolist()
    best = sum(prizes)
    for bits in range(1, 1 << p):
        forfeited = sum(prizes[v] for v in range(p) if not bits >> v & 1)
        if forfeited >= best:
            continue
        parent = list(range(p))

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        comps = bin(bits).count("1")
        cost = 0.0
        for u, v, c in edges:
            if bits >> u & 1 and bits >> v & 1:
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
                    cost += c
                    comps -= 1
        if comps <= inst.target_components:
            best = min(best, forfeited + cost)
    return best


def check_forest(inst, forest: Forest):
    g = inst.graph
    mask = forest.vertex_mask(g.num_vertices)
    e = g.edges[forest.edges]
    assert np.all(mask[e[:, 0]] & mask[e[:, 1]])
    assert forest.num_trees == len(forest.vertices) - len(forest.edges)
    if len(forest.vertices):
        k = len(forest.vertices)
        pos = np.full(g.num_vertices, -1)
        pos[forest.vertices] = np.arange(k)
        adj = csr_matrix((np.ones(len(e)), (pos[e[:, 0]], pos[e[:, 1]])), shape=(k, k))
        ncomp, _ = cc(adj, directed=False)
        # acyclic: components of the edge set equal vertices minus edges
        assert ncomp == forest.num_trees
    assert forest.num_trees <= inst.target_components


def random_instance(rng):
    p = int(rng.integers(2, 11))
    pairs = [(u, v) for u in range(p) for v in range(u + 1, p)]
    keep = rng.random(len(pairs)) < rng.uniform(0.2, 0.7)
    edges = np.array([pr for pr, k in zip(pairs, keep) if k], dtype=np.int64).reshape(-1, 2)
    graph = Graph(p, edges, rng.uniform(0.1, 2.0, len(edges)))
    prizes = rng.uniform(0, 3, p) * (rng.random(p) < 0.8)
    return PcsfInstance(graph, prizes, graph.weights.copy(), int(rng.integers(1, 4)))


class TestExamples:
    def path(self, prizes, g=1):
        graph = Graph(3, np.array([[0, 1], [1, 2]]), np.ones(2))
        return PcsfInstance(graph, np.asarray(prizes, float), np.ones(2), g)

    def test_path_end_prizes(self):
        # connecting both ends costs 2 while dropping one end forfeits 1
        inst = self.path([1, 0, 1])
        forest = solve_pcsf(inst)
        assert forest_objective(inst, forest) == pytest.approx(1.0)
        assert brute_force(inst) == pytest.approx(1.0)
        np.testing.assert_array_equal(forest.vertices, [0])

    def test_zero_prizes(self):
        forest = solve_pcsf(self.path([0, 0, 0]))
        assert len(forest.vertices) == 0 and forest.num_trees == 0

    def test_two_far_singletons(self):
        graph = Graph(6, np.array([[k, k + 1] for k in range(5)]), np.ones(5))
        prizes = np.array([5.0, 0, 0, 0, 0, 5.0])
        inst = PcsfInstance(graph, prizes, graph.weights.copy(), 2)
        forest = solve_pcsf(inst)
        np.testing.assert_array_equal(forest.vertices, [0, 5])
        assert forest.num_trees == 2 and len(forest.edges) == 0

    def test_objective_identities(self):
        inst = self.path([1, 0, 1])
        empty = Forest(np.array([], dtype=np.int64), np.array([], dtype=np.int64), 0)
        assert forest_objective(inst, empty) == 2.0
        full = Forest(np.arange(3), np.arange(2), 1)
        assert forest_objective(inst, full) == 2.0

    def test_validation(self):
        graph = grid_graph(2, 2)
        with pytest.raises(ValueError):
            PcsfInstance(graph, -np.ones(4), np.ones(4))
        with pytest.raises(ValueError):
            PcsfInstance(graph, np.ones(3), np.ones(4))
        with pytest.raises(ValueError):
            PcsfInstance(graph, np.ones(4), np.ones(4), 0)


class TestApproximation:
    def test_two_approx_random(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            inst = random_instance(rng)
            forest = solve_pcsf(inst)
            check_forest(inst, forest)
            opt = brute_force(inst)
            got = forest_objective(inst, forest)
            assert got <= 2 * opt + 1e-9
            if opt > 0:
                worst = max(worst, got / opt)
        assert worst <= 2.0

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        graph = grid_graph(6, 6)
        inst = PcsfInstance(graph, rng.uniform(0, 2, 36), graph.weights.copy(), 2)
        a, b = solve_pcsf(inst), solve_pcsf(inst)
        np.testing.assert_array_equal(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.edges, b.edges)

    def test_grid_forest_valid(self):
        rng = np.random.default_rng(3)
        graph = grid_graph(10, 10)
        for g in (1, 2, 4):
            inst = PcsfInstance(graph, rng.uniform(0, 1.5, 100) ** 3,
                                graph.weights * 0.3, g)
            check_forest(inst, solve_pcsf(inst))
