from math import exp, fsum, log

import numpy as np
import pytest

from botclust.crp import ConcentrationParams, log_crp_clique, log_posterior
from botclust.errors import DomainError, ParameterError
from botclust.evidence import ClusteringState, build_clique_index, singleton_state, state_from_partition
from oracles import crp_prob, enumerate_minimal_selectors, dense_adjacency, exact_posterior, messages_from_pairs, random_pairs, set_partitions

THREE = [("a1", "s1"), ("a1", "s2"), ("a2", "s2")]


def test_single_node_clique_has_probability_one():
    for alpha in (0.01, 1.0, 7.5):
        assert log_crp_clique([1], alpha) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 3.0])
def test_two_node_clique(alpha):
    apart = exp(log_crp_clique([1, 1], alpha))
    together = exp(log_crp_clique([2], alpha))
    assert apart == pytest.approx(alpha / (alpha + 1), rel=1e-12)
    assert together == pytest.approx(1 / (alpha + 1), rel=1e-12)
    assert apart + together == pytest.approx(1.0, abs=1e-12)


def test_three_node_clique_alpha_one():
    assert exp(log_crp_clique([1, 1, 1], 1.0)) == pytest.approx(1 / 6)
    assert exp(log_crp_clique([3], 1.0)) == pytest.approx(1 / 3)
    assert exp(log_crp_clique([2, 1], 1.0)) == pytest.approx(1 / 6)
    assert exp(log_crp_clique([1, 1, 1], 1.0)) + exp(log_crp_clique([3], 1.0)) + 3 * exp(
        log_crp_clique([2, 1], 1.0)
    ) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("sizes", [[1], [3, 1], [2, 2, 1], [5]])
@pytest.mark.parametrize("alpha", [0.1, 1.0, 5.0])
def test_matches_gamma_product(sizes, alpha):
    assert exp(log_crp_clique(sizes, alpha)) == pytest.approx(crp_prob(sizes, alpha), rel=1e-12)


def test_large_clique_stays_finite():
    value = log_crp_clique([3000, 2000, 1], 0.5)
    assert np.isfinite(value) and value < 0


@pytest.mark.parametrize("alpha", [0.0, -1.0])
def test_rejects_nonpositive_alpha(alpha):
    with pytest.raises(ParameterError):
        log_crp_clique([1], alpha)
    with pytest.raises(ParameterError):
        ConcentrationParams(alpha, 1.0)


def test_rejects_empty_sizes():
    with pytest.raises(ParameterError):
        log_crp_clique([], 1.0)


@pytest.mark.parametrize("n", range(1, 9))
@pytest.mark.parametrize("alpha", [0.1, 1.0, 5.0])
def test_normalizes_over_set_partitions(n, alpha):
    total = fsum(exp(log_crp_clique([len(b) for b in part], alpha)) for part in set_partitions(range(n)))
    assert abs(total - 1.0) < 1e-9


def test_alpha_increase_favors_singletons():
    for n in (2, 4, 9):
        gaps = [log_crp_clique([1] * n, a) - log_crp_clique([n], a) for a in (0.1, 0.5, 1.0, 2.0, 10.0)]
        assert all(b > a for a, b in zip(gaps, gaps[1:]))


class TestLogPosterior:
    def test_single_node(self):
        index = build_clique_index(messages_from_pairs([("a", "s")]))
        assert log_posterior(singleton_state(index), index, ConcentrationParams(0.3, 2.0)) == pytest.approx(0.0)

    @pytest.mark.parametrize("alpha", [0.2, 1.0, 4.0])
    def test_fully_connected_graph_is_one_crp(self, alpha):
        pairs = [("a", "s")] * 5
        index = build_clique_index(messages_from_pairs(pairs))
        params = ConcentrationParams(alpha, 9.0)
        for labels in ([0, 0, 1, 1, 2], [0, 0, 0, 0, 0], [0, 1, 2, 3, 4]):
            state = state_from_partition(index, labels)
            sizes = np.bincount(labels).tolist()
            assert log_posterior(state, index, params) == pytest.approx(log_crp_clique(sizes, alpha))

    def test_three_message_singleton_state(self):
        index = build_clique_index(messages_from_pairs(THREE))
        state = singleton_state(index)
        # cliques {0,1}, {0}, {1,2}, {2}: only the two-node cliques contribute
        expected = 2 * log(crp_prob([1, 1], 1.0))
        assert log_posterior(state, index, ConcentrationParams(1.0, 1.0)) == pytest.approx(expected)

    def test_kind_resolution_and_override(self):
        index = build_clique_index(messages_from_pairs(THREE))
        state = singleton_state(index)
        params = ConcentrationParams(2.0, 0.5)
        expected = log(crp_prob([1, 1], 2.0)) + log(crp_prob([1, 1], 0.5))
        assert log_posterior(state, index, params) == pytest.approx(expected)
        overridden = ConcentrationParams(2.0, 0.5, overrides={0: 3.0})
        expected = log(crp_prob([1, 1], 3.0)) + log(crp_prob([1, 1], 0.5))
        assert log_posterior(state, index, overridden) == pytest.approx(expected)

    def test_non_minimal_state_is_rejected(self):
        pairs = [("a", "s"), ("a", "s"), ("a", "t")]
        index = build_clique_index(messages_from_pairs(pairs))
        qa, qs = index.node_cliques[0]
        state = ClusteringState.from_tables(index, {qa: [[0], [1, 2]], qs: [[0, 1]]})
        with pytest.raises(DomainError):
            log_posterior(state, index, ConcentrationParams())

    @pytest.mark.parametrize("seed", range(12))
    def test_global_normalization_against_dense_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        pairs = random_pairs(rng, int(rng.integers(1, 7)))
        index = build_clique_index(messages_from_pairs(pairs))
        params = ConcentrationParams(float(rng.choice([0.1, 1.0, 5.0])), float(rng.choice([0.1, 1.0, 5.0])))
        exact, z = exact_posterior(pairs, params.alpha_address, params.alpha_campaign)
        assert np.isfinite(z) and z > 0
        assert abs(fsum(exact.values()) - 1.0) < 1e-9
        # every clustering in the support scores the same through the table path
        weights = {}
        for labels in exact:
            state = state_from_partition(index, labels)
            assert state.labels() == labels
            weights[labels] = exp(log_posterior(state, index, params))
        assert fsum(weights.values()) == pytest.approx(z, rel=1e-9)
        for labels, p in exact.items():
            assert weights[labels] / z == pytest.approx(p, rel=1e-9)
