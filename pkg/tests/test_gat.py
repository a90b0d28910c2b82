import math

import numpy as np
import pytest

from statetrack.gat import (
    DenseLayerParams,
    FeatureGraph,
    attention_coefficients,
    check_invariants,
    layer_forward,
)


def _scalar_params(w1=1.0, w2=1.0, w3=1.0, w4=1.0, w6=0.0):
    return DenseLayerParams(
        w1=[[w1]], w2=[[w2]], w3=[[w3]], w4=[[w4]], w6=[[w6]], d=1
    )


def _graph(features, neighbors, edge_value=0.0):
    edge_features = {
        (i, j): np.array([edge_value]) for i, nbrs in enumerate(neighbors) for j in nbrs
    }
    return FeatureGraph(np.array(features, dtype=float).reshape(-1, 1), neighbors, edge_features)


class TestAttention:
    def test_single_neighbor_is_one(self):
        graph = _graph([2.0, -3.0], [[1], []])
        alpha = attention_coefficients(graph, _scalar_params(w3=0.7, w4=-2.1), 0)
        assert alpha.shape == (1,)
        assert alpha[0] == pytest.approx(1.0, abs=0)

    def test_hand_computed_quarter_three_quarters(self):
        # Scalar case: query 1, neighbor values 0 and ln 3, unit weights, no
        # edge term.  Logits are 0 and ln 3, so softmax gives 1/4 and 3/4.
        graph = _graph([1.0, 0.0, math.log(3.0)], [[1, 2], [], []])
        alpha = attention_coefficients(graph, _scalar_params(), 0)
        assert alpha[0] == pytest.approx(0.25, abs=1e-9)
        assert alpha[1] == pytest.approx(0.75, abs=1e-9)

    def test_uniform_edge_shift_leaves_alpha_unchanged(self):
        graph_zero = _graph([1.0, 0.0, math.log(3.0)], [[1, 2], [], []], edge_value=0.0)
        graph_shift = _graph([1.0, 0.0, math.log(3.0)], [[1, 2], [], []], edge_value=5.0)
        base = attention_coefficients(graph_zero, _scalar_params(), 0)
        shifted = attention_coefficients(graph_shift, _scalar_params(w6=1.0), 0)
        assert np.allclose(base, shifted, atol=1e-12)

    def test_empty_neighborhood_rejected(self):
        graph = _graph([1.0], [[]])
        with pytest.raises(ValueError, match="no neighbors"):
            attention_coefficients(graph, _scalar_params(), 0)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            neighbors = [
                [j for j in range(n) if j != i and rng.random() < 0.5] for i in range(n)
            ]
            graph = FeatureGraph(
                rng.normal(size=(n, 3)),
                neighbors,
                {(i, j): rng.normal(size=2) for i, ns in enumerate(neighbors) for j in ns},
            )
            params = DenseLayerParams(
                w1=rng.normal(size=(4, 3)),
                w2=rng.normal(size=(4, 3)),
                w3=rng.normal(size=(4, 3)),
                w4=rng.normal(size=(4, 3)),
                w6=rng.normal(size=(4, 2)),
                d=4,
            )
            for i in range(n):
                if neighbors[i]:
                    assert abs(attention_coefficients(graph, params, i).sum() - 1.0) <= 1e-12


class TestLayerForward:
    def test_isolated_node_keeps_skip_term(self):
        graph = _graph([5.0], [[]])
        out = layer_forward(graph, _scalar_params(w1=3.0))
        assert out[0, 0] == pytest.approx(15.0, abs=0)

    def test_identity_configuration(self):
        rng = np.random.default_rng(8)
        features = rng.normal(size=(4, 3))
        neighbors = [[1], [0, 2], [3], []]
        graph = FeatureGraph(
            features,
            neighbors,
            {(i, j): np.zeros(1) for i, ns in enumerate(neighbors) for j in ns},
        )
        params = DenseLayerParams(
            w1=np.eye(3), w2=np.zeros((3, 3)), w3=np.eye(3), w4=np.eye(3),
            w6=np.zeros((3, 1)), d=3,
        )
        assert np.allclose(layer_forward(graph, params), features, atol=0)

    def test_hand_computed_two_node_path(self):
        # Both nodes have a single neighbor, so attention is 1; with unit
        # weights each output is v_i + v_j: [1, 2] -> [3, 3].
        graph = _graph([1.0, 2.0], [[1], [0]])
        out = layer_forward(graph, _scalar_params(w6=1.0))
        assert out[0, 0] == pytest.approx(3.0, abs=1e-9)
        assert out[1, 0] == pytest.approx(3.0, abs=1e-9)

    def test_shape_mismatch_names_matrix(self):
        with pytest.raises(ValueError, match="w4"):
            DenseLayerParams(
                w1=np.eye(2), w2=np.eye(2), w3=np.eye(2), w4=np.eye(3),
                w6=np.zeros((2, 1)), d=2,
            )
        params = DenseLayerParams(
            w1=np.eye(2), w2=np.eye(2), w3=np.eye(2), w4=np.eye(2),
            w6=np.zeros((2, 1)), d=2,
        )
        graph = _graph([1.0], [[]])  # 1-d features vs 2-d weights
        with pytest.raises(ValueError, match="w1"):
            layer_forward(graph, params)


def test_invariant_suite_clean():
    assert check_invariants(seed=0, rounds=25) == []
