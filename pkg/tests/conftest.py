import numpy as np

from gpnet.sparse import build_adjacency, sym_normalize


def random_connected_edges(rng, n, extra_edge_prob=0.2):
    """Edge list of a connected undirected graph: spanning path + random extras."""
    edges = [(i, i + 1) for i in range(n - 1)]
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < extra_edge_prob:
                edges.append((i, j))
    return np.array(edges, dtype=np.int64)


def toy_operator(n=8, seed=0, extra_edge_prob=0.3, self_loops=True):
    """Symmetric-normalized operator of a random connected graph."""
    rng = np.random.default_rng(seed)
    edges = random_connected_edges(rng, n, extra_edge_prob)
    return sym_normalize(build_adjacency(edges, n=n, add_self_loops=self_loops))


def dense_power_sum(S_dense, exponents):
    """Brute-force sum of matrix powers, the oracle for channel sums."""
    n = S_dense.shape[0]
    out = np.zeros((n, n))
    P = np.eye(n)
    for p in range(max(exponents) + 1):
        if p in exponents:
            out += P
        P = P @ S_dense
    return out
