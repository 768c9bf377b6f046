import numpy as np
import pytest

from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.graph import build_graph
from nethermind.labelprop.propagation import build_label_matrix, propagate_closed, propagate_iterative, to_result
from nethermind.labelprop.tensor import Tensor


def _chain_system(chain_graph):
    """Chain with node 0 in class 0 and node 2 in class 1 (support rows must come first)"""
    order = [0, 2, 1]
    s = chain_graph[np.ix_(order, order)]
    labels = build_label_matrix(np.array([0, 1]), 2, 3)
    return Tensor(s), labels


class TestClosedForm:
    def test_chain_oracle(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        scores = propagate_closed(s, labels, 0.5).F_star.data
        # rows are nodes 0, 2, 1
        np.testing.assert_allclose(scores[[0, 2, 1], 0], [7 / 6, np.sqrt(2) / 3, 1 / 6], atol=1e-6)
        assert abs(scores[2, 0] - scores[2, 1]) <= 1e-12

    def test_matches_dense_solve(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        expected = np.linalg.solve(np.eye(3) - 0.5 * s.data, labels.Y.data)
        np.testing.assert_allclose(propagate_closed(s, labels, 0.5).F_star.data, expected, rtol=1e-12)

    def test_vanishing_alpha(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        np.testing.assert_allclose(propagate_closed(s, labels, 1e-12).F_star.data, labels.Y.data, atol=1e-9)

    def test_no_labels(self, chain_graph):
        labels = build_label_matrix(np.array([], dtype=np.int64), 2, 3)
        np.testing.assert_array_equal(propagate_closed(Tensor(chain_graph), labels, 0.5).F_star.data, np.zeros((3, 2)))

    def test_probabilities(self):
        rng = np.random.default_rng(0)
        graph = build_graph(Tensor(rng.normal(size=(12, 2))), Tensor(np.ones(12)), k=4)
        result = propagate_closed(graph.S_norm, build_label_matrix(np.repeat(np.arange(3), 2), 3, 12))
        np.testing.assert_allclose(result.probs.sum(axis=1), np.ones(12), atol=1e-9)
        np.testing.assert_array_equal(result.preds, np.argmax(result.F_star.data, axis=1))

    def test_ties_go_to_lowest_class(self):
        assert to_result(Tensor([[0.3, 0.3, 0.1], [0.0, 0.2, 0.2]]), 0.5).preds.tolist() == [0, 1]

    def test_alpha_range(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        with pytest.raises(ConfigError):
            propagate_closed(s, labels, 1.0)
        with pytest.raises(ConfigError):
            propagate_closed(s, labels, 0.0)

    def test_label_row_mismatch(self, chain_graph):
        with pytest.raises(ConfigError):
            propagate_closed(Tensor(chain_graph), build_label_matrix(np.array([0]), 2, 4), 0.5)


class TestIterative:
    def test_single_step(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        y = labels.Y.data
        expected = 0.5 * s.data @ y + 0.5 * y
        np.testing.assert_allclose(propagate_iterative(s, labels, 0.5, 1).F_star.data, expected, rtol=1e-15)

    def test_fixed_point(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        closed = propagate_closed(s, labels, 0.5)
        iterative = propagate_iterative(s, labels, 0.5, 100)
        np.testing.assert_allclose(iterative.F_star.data, 0.5 * closed.F_star.data, atol=1e-9)
        np.testing.assert_array_equal(iterative.preds, closed.preds)

    def test_geometric_convergence_bound(self):
        rng = np.random.default_rng(1)
        alpha = 0.9
        graph = build_graph(Tensor(rng.normal(size=(20, 2))), Tensor(np.ones(20)), k=6)
        labels = build_label_matrix(np.repeat(np.arange(4), 2), 4, 20)
        limit = (1 - alpha) * propagate_closed(graph.S_norm, labels, alpha).F_star.data
        # contraction holds in the 2-norm, so the bound uses the Frobenius norm of the first step
        first_step = np.linalg.norm(propagate_iterative(graph.S_norm, labels, alpha, 1).F_star.data - labels.Y.data)

        errors = []
        for steps in (10, 100):
            error = np.abs(propagate_iterative(graph.S_norm, labels, alpha, steps).F_star.data - limit).max()
            assert error <= first_step * alpha**steps / (1 - alpha) + 1e-12
            errors.append(error)
        assert errors[1] < errors[0]

    def test_step_count(self, chain_graph):
        s, labels = _chain_system(chain_graph)
        with pytest.raises(ConfigError):
            propagate_iterative(s, labels, 0.5, 0)
