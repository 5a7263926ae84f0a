"""Head and tail projections against the brute-force optimum on small grids.

Prints the empirical approximation factors: captured norm of the head
projection relative to the best in-model support, and tail distance relative
to the best in-model distance.
"""
import numpy as np

from graphiht.graph import WgmModel, grid_graph, is_in_model
from graphiht.projections import exact_project, head_project, tail_project

rng = np.random.default_rng(0)
for rows, cols, s, g in [(3, 3, 3, 1), (3, 4, 4, 1), (4, 4, 4, 2)]:
    graph = grid_graph(rows, cols)
    model = WgmModel(s, g)
    head_r, tail_r = [], []
    for _ in range(300):
        x = rng.standard_normal(graph.num_vertices)
        ex = exact_project(x, graph, model)
        head = head_project(x, graph, model)
        tail = tail_project(x, graph, model)
        assert is_in_model(graph, tail.support, model)
        head_r.append(np.linalg.norm(head.vector) / np.linalg.norm(ex.vector))
        tail_r.append(np.linalg.norm(x - tail.vector) / np.linalg.norm(x - ex.vector))
    print(f"{rows}x{cols} s={s} g={g}: head ratio min {min(head_r):.3f} "
          f"mean {np.mean(head_r):.3f}; tail ratio max {max(tail_r):.3f} "
          f"mean {np.mean(tail_r):.3f}")
