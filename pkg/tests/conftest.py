import random

import numpy as np
import pytest

from zkl.graphstore import Graph


def random_graph(rng: random.Random, n: int) -> Graph:
    """Mixed-style random graph: plain sparse, copying-flavored, or dense."""
    style = rng.randrange(4)
    lists = []
    for u in range(n):
        if style == 0:
            deg = rng.randrange(0, 6)
            lists.append(sorted(rng.sample(range(n), min(deg, n))))
        elif style == 1:
            # copy a recent list and perturb it
            if u and rng.random() < 0.7 and lists[u - 1]:
                base = list(lists[rng.randrange(max(u - 4, 0), u)])
            else:
                base = []
            extra = rng.randrange(0, 4)
            base.extend(rng.randrange(n) for _ in range(extra))
            lists.append(sorted(set(base)))
        elif style == 2:
            # dense: anything up to complete for small n, degree-capped above
            deg = rng.randrange(0, n + 1 if n <= 200 else 200)
            lists.append(sorted(rng.sample(range(n), deg)))
        else:
            # clustered ids around u
            deg = rng.randrange(0, 8)
            vals = {min(max(u + rng.randrange(-9, 10), 0), n - 1) for _ in range(deg)}
            lists.append(sorted(vals))
    return Graph.from_lists(lists)


def adversarial_graphs():
    """Edge-case fixtures: empty lists, cliques, one long list, paths."""
    out = [
        Graph.from_lists([[]]),
        Graph.from_lists([[], [], []]),
        Graph.from_lists([[1], [2], [0]]),
        Graph.from_lists([list(range(12)) for _ in range(12)]),  # clique
        Graph.from_lists([[i + 1] for i in range(19)] + [[]]),  # path
        Graph.from_lists([[], list(range(200)), []] + [[] for _ in range(197)]),
        Graph.from_lists([[0], [0], [0], [0]]),  # star into node 0
        Graph.from_lists(
            [list(range(0, 50, 2)), list(range(0, 50, 2))]
            + [[] for _ in range(48)]
        ),
    ]
    return out


@pytest.fixture
def rng():
    return random.Random(0xA11CE)
