"""Desk-scale numeric reference for a single transformer-style graph
attention layer, double precision throughout.

The layer computes, for each node i with neighbors N(i):

    out_i = W1 v_i + sum_{j in N(i)} a_ij (W2 v_j + W6 e_ij)
    a_ij  = softmax_j( (W3 v_i)^T (W4 v_j + W6 e_ij) / sqrt(d) )

Single head, no bias, no output nonlinearity.  Isolated nodes keep the
skip term only (the attention sum is empty).  This is an oracle for
checking other implementations, not a training kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DenseLayerParams:
    """The five weight matrices and the scaling dimension d.

    W1..W4 share the shape (d_out, d_in); W6 is (d_out, d_edge) and is used
    both inside the attention logits and in the update, which ties the key
    dimension to the output dimension.
    """

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    w4: np.ndarray
    w6: np.ndarray
    d: int

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4", "w6"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        shape = self.w1.shape
        for name in ("w2", "w3", "w4"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} shape {getattr(self, name).shape} != w1 shape {shape}")
        if self.w6.shape[0] != shape[0]:
            raise ValueError(f"w6 has {self.w6.shape[0]} rows, expected {shape[0]}")
        if self.d <= 0 or self.d != shape[0]:
            raise ValueError(f"d={self.d} must equal the key dimension {shape[0]}")


@dataclass
class FeatureGraph:
    """Node features (n, d_in), adjacency lists, and per-edge features."""

    node_features: np.ndarray
    neighbors: list[list[int]]
    edge_features: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.node_features = np.asarray(self.node_features, dtype=np.float64)
        if self.node_features.ndim != 2:
            raise ValueError("node_features must be a 2-d array")
        if len(self.neighbors) != self.node_features.shape[0]:
            raise ValueError("neighbor lists must cover every node")
        self.edge_features = {
            k: np.asarray(v, dtype=np.float64) for k, v in self.edge_features.items()
        }
        dims = {v.shape for v in self.edge_features.values()}
        if len(dims) > 1:
            raise ValueError(f"edge feature dimensions differ: {sorted(dims)}")
        for i, nbrs in enumerate(self.neighbors):
            for j in nbrs:
                if (i, j) not in self.edge_features:
                    raise ValueError(f"missing edge features for ({i}, {j})")


def attention_coefficients(graph: FeatureGraph, params: DenseLayerParams, i: int) -> np.ndarray:
    """Attention over N(i); raises on an empty neighborhood."""
    nbrs = graph.neighbors[i]
    if not nbrs:
        raise ValueError(f"node {i} has no neighbors; coefficients undefined")
    query = params.w3 @ graph.node_features[i]
    logits = np.empty(len(nbrs))
    for k, j in enumerate(nbrs):
        key = params.w4 @ graph.node_features[j] + params.w6 @ graph.edge_features[(i, j)]
        logits[k] = query @ key
    logits /= np.sqrt(params.d)
    logits -= logits.max()  # numerical stability
    weights = np.exp(logits)
    return weights / weights.sum()


def layer_forward(graph: FeatureGraph, params: DenseLayerParams) -> np.ndarray:
    """One layer over all nodes; isolated nodes get only the skip term."""
    if params.w1.shape[1] != graph.node_features.shape[1]:
        raise ValueError(
            f"w1 expects input dimension {params.w1.shape[1]}, "
            f"features have {graph.node_features.shape[1]}"
        )
    n = graph.node_features.shape[0]
    out = np.empty((n, params.w1.shape[0]))
    for i in range(n):
        acc = params.w1 @ graph.node_features[i]
        nbrs = graph.neighbors[i]
        if nbrs:
            alpha = attention_coefficients(graph, params, i)
            for a, j in zip(alpha, nbrs):
                acc = acc + a * (
                    params.w2 @ graph.node_features[j]
                    + params.w6 @ graph.edge_features[(i, j)]
                )
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# Randomized invariant suite (used by tests and the gat-check command)

def random_instance(rng: np.random.Generator, max_nodes: int = 20, max_dim: int = 8):
    n = int(rng.integers(2, max_nodes + 1))
    d_in = int(rng.integers(1, max_dim + 1))
    d_out = int(rng.integers(1, max_dim + 1))
    d_edge = int(rng.integers(1, max_dim + 1))
    features = rng.normal(size=(n, d_in))
    neighbors: list[list[int]] = [[] for _ in range(n)]
    edge_features: dict[tuple[int, int], np.ndarray] = {}
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < 0.3:
                neighbors[i].append(j)
                edge_features[(i, j)] = rng.normal(size=d_edge)
    graph = FeatureGraph(features, neighbors, edge_features)
    params = DenseLayerParams(
        w1=rng.normal(size=(d_out, d_in)),
        w2=rng.normal(size=(d_out, d_in)),
        w3=rng.normal(size=(d_out, d_in)),
        w4=rng.normal(size=(d_out, d_in)),
        w6=rng.normal(size=(d_out, d_edge)),
        d=d_out,
    )
    return graph, params


def permute_instance(graph: FeatureGraph, perm: np.ndarray) -> FeatureGraph:
    """Relabel nodes by perm (old index -> new index)."""
    n = graph.node_features.shape[0]
    features = np.empty_like(graph.node_features)
    neighbors: list[list[int]] = [[] for _ in range(n)]
    edge_features = {}
    for i in range(n):
        features[perm[i]] = graph.node_features[i]
        neighbors[perm[i]] = [int(perm[j]) for j in graph.neighbors[i]]
        for j in graph.neighbors[i]:
            edge_features[(int(perm[i]), int(perm[j]))] = graph.edge_features[(i, j)]
    return FeatureGraph(features, neighbors, edge_features)


def check_invariants(seed: int = 0, rounds: int = 100) -> list[str]:
    """Run the invariant suite; returns a list of failure descriptions."""
    rng = np.random.default_rng(seed)
    failures = []
    for r in range(rounds):
        graph, params = random_instance(rng)
        n = graph.node_features.shape[0]
        for i in range(n):
            if graph.neighbors[i]:
                total = attention_coefficients(graph, params, i).sum()
                if abs(total - 1.0) > 1e-12:
                    failures.append(f"round {r}: attention row {i} sums to {total!r}")
        out = layer_forward(graph, params)
        if not np.all(np.isfinite(out)):
            failures.append(f"round {r}: non-finite output")
        perm = rng.permutation(n)
        permuted_out = layer_forward(permute_instance(graph, perm), params)
        expected = np.empty_like(out)
        for i in range(n):
            expected[perm[i]] = out[i]
        if not np.allclose(permuted_out, expected, atol=1e-9, rtol=0):
            failures.append(f"round {r}: permutation equivariance violated")
        i = int(rng.integers(0, n))
        outside = [j for j in range(n) if j != i and j not in graph.neighbors[i]]
        if outside:
            j = outside[int(rng.integers(0, len(outside)))]
            bumped = FeatureGraph(
                graph.node_features.copy(), graph.neighbors, dict(graph.edge_features)
            )
            bumped.node_features[j] += rng.normal(size=bumped.node_features.shape[1])
            if not np.allclose(layer_forward(bumped, params)[i], out[i], atol=1e-12, rtol=0):
                failures.append(f"round {r}: locality violated for node {i}")
    return failures
