from collections import Counter, defaultdict
from math import fsum

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from botclust.crp import ConcentrationParams
from botclust.errors import DataIntegrityError, ParameterError, UnknownAddressError
from botclust.evidence import build_clique_index
from botclust.gibbs import ChainConfig, ChainSample, run_chain
from botclust.predictor import (
    fit_predictor,
    mixture_predict,
    posterior_predict,
    posterior_predict_many,
    predict_campaign_dist,
)
from botclust.synthetic import WorldConfig, generate_trace
from oracles import exact_posterior, messages_from_pairs, random_pairs


def dense_predict(labels, pairs, address):
    """Straight transcription of the two count ratios, no smoothing."""
    n = len(pairs)
    from_a = [i for i in range(n) if pairs[i][0] == address]
    out = defaultdict(float)
    for c in set(labels[i] for i in from_a):
        p_c = sum(labels[i] == c for i in from_a) / len(from_a)
        in_c = [i for i in range(n) if labels[i] == c]
        for s in set(pairs[i][1] for i in in_c):
            out[s] += p_c * sum(pairs[i][1] == s for i in in_c) / len(in_c)
    return dict(out)


class TestFit:
    def test_campaign_ratio(self):
        msgs = messages_from_pairs([("a", "s1")] * 3 + [("b", "s2")])
        model = fit_predictor([0, 0, 0, 0], msgs)
        assert model.campaign_given_cluster[0] == {"s1": 0.75, "s2": 0.25}
        assert predict_campaign_dist(model, "b") == {"s1": 0.75, "s2": 0.25}

    def test_address_in_one_cluster(self):
        msgs = messages_from_pairs([("a", "s"), ("a", "t"), ("b", "t")])
        model = fit_predictor(ChainSample((0, 0, 1), 1), msgs)
        assert model.cluster_given_address["a"] == {0: 1.0}

    def test_singletons_give_point_masses(self):
        msgs = messages_from_pairs([("a", "s"), ("a", "t"), ("b", "u")])
        model = fit_predictor([0, 1, 2], msgs)
        assert model.campaign_given_cluster == {0: {"s": 1.0}, 1: {"t": 1.0}, 2: {"u": 1.0}}

    def test_smoothing_stays_in_observed_support(self):
        msgs = messages_from_pairs([("a", "s")] * 3 + [("a", "t"), ("b", "u")])
        model = fit_predictor([0, 0, 0, 0, 1], msgs, smoothing=1.0)
        assert model.campaign_given_cluster[0] == pytest.approx({"s": 4 / 6, "t": 2 / 6})
        assert "u" not in model.campaign_given_cluster[0]

    def test_length_mismatch(self):
        with pytest.raises(DataIntegrityError):
            fit_predictor([0, 0], messages_from_pairs([("a", "s")]))

    def test_negative_smoothing(self):
        with pytest.raises(ParameterError):
            fit_predictor([0], messages_from_pairs([("a", "s")]), smoothing=-0.1)


class TestPredict:
    def test_even_split_over_two_clusters(self):
        msgs = messages_from_pairs([("a", "s1"), ("a", "s2")])
        model = fit_predictor([0, 1], msgs)
        assert model.cluster_given_address["a"] == {0: 0.5, 1: 0.5}
        assert predict_campaign_dist(model, "a") == {"s1": 0.5, "s2": 0.5}

    def test_point_mass(self):
        msgs = messages_from_pairs([("a", "s"), ("b", "s")])
        assert predict_campaign_dist(fit_predictor([0, 0], msgs), "a") == {"s": 1.0}

    def test_sorted_by_probability(self):
        msgs = messages_from_pairs([("a", "z"), ("a", "y"), ("a", "y"), ("a", "x")])
        dist = predict_campaign_dist(fit_predictor([0, 0, 0, 0], msgs), "a")
        assert list(dist) == ["y", "x", "z"]

    def test_unknown_address(self):
        model = fit_predictor([0], messages_from_pairs([("a", "s")]))
        with pytest.raises(UnknownAddressError) as err:
            predict_campaign_dist(model, "nowhere")
        assert "nowhere" in str(err.value)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=80, deadline=None)
    def test_matches_dense_counts(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 30))
        pairs = random_pairs(rng, n)
        labels = [int(x) for x in rng.integers(0, max(1, n // 3), size=n)]
        model = fit_predictor(labels, messages_from_pairs(pairs))
        for dist in model.campaign_given_cluster.values():
            assert abs(fsum(dist.values()) - 1) < 1e-9
        for a in {p[0] for p in pairs}:
            got = predict_campaign_dist(model, a)
            want = dense_predict(labels, pairs, a)
            assert got == pytest.approx(want, abs=1e-12)
            assert abs(fsum(got.values()) - 1) < 1e-9 and min(got.values()) >= 0


class TestPosteriorPredict:
    def test_one_sample_equals_single_fit(self):
        msgs = messages_from_pairs([("a", "s"), ("a", "t"), ("b", "t")])
        sample = ChainSample((0, 1, 1), 3)
        assert posterior_predict([sample], msgs, "a") == predict_campaign_dist(fit_predictor(sample, msgs), "a")

    def test_identical_samples_match_exactly(self):
        msgs = messages_from_pairs([("a", "s"), ("a", "t"), ("b", "t"), ("a", "t")])
        sample = ChainSample((0, 1, 1, 0), 3)
        single = predict_campaign_dist(fit_predictor(sample, msgs), "a")
        assert posterior_predict([sample] * 7, msgs, "a") == single

    def test_uniform_mean(self):
        pairs = [("a", "s"), ("b", "s"), ("b", "s"), ("b", "s"), ("b", "t"), ("c", "t")]
        msgs = messages_from_pairs(pairs)
        low = [0, 0, 0, 1, 0, 0]  # a's cluster holds s,s,s,t,t
        high = [0, 0, 0, 0, 0, 1]  # a's cluster holds s,s,s,s,t
        assert predict_campaign_dist(fit_predictor(low, msgs), "a")["s"] == pytest.approx(0.6)
        assert predict_campaign_dist(fit_predictor(high, msgs), "a")["s"] == pytest.approx(0.8)
        assert posterior_predict([low, high], msgs, "a")["s"] == pytest.approx(0.7)

    def test_empty_samples(self):
        with pytest.raises(DataIntegrityError):
            posterior_predict([], messages_from_pairs([("a", "s")]), "a")

    def test_mixture_normalizes_weights(self):
        msgs = messages_from_pairs([("a", "s"), ("a", "t")])
        got = mixture_predict([([0, 0], 3.0), ([0, 1], 1.0)], msgs, ["a"])["a"]
        assert got == pytest.approx({"s": 0.5, "t": 0.5})
        assert posterior_predict_many([[0, 1]], msgs, ["a"]) == {"a": {"s": 0.5, "t": 0.5}}

    @pytest.mark.parametrize("seed", range(4))
    def test_chain_average_matches_exact_weights(self, seed):
        rng = np.random.default_rng(100 + seed)
        pairs = random_pairs(rng, 4, 2, 3)
        msgs = messages_from_pairs(pairs)
        exact, _ = exact_posterior(pairs, 1.0, 1.0)
        index = build_clique_index(msgs)
        samples = run_chain(index, ConcentrationParams(), ChainConfig(100, 1, 30_000, seed=seed))
        addresses = sorted({p[0] for p in pairs})
        want = mixture_predict(exact.items(), msgs, addresses)
        got = posterior_predict_many(samples, msgs, addresses)
        for a in addresses:
            for s in set(want[a]) | set(got[a]):
                assert abs(got[a].get(s, 0.0) - want[a].get(s, 0.0)) < 0.02


def test_truth_clustering_recovers_single_campaign_botnets():
    trace = generate_trace(WorldConfig(num_botnets=4, addresses_per_botnet=8, campaigns_per_botnet=1, seed=3))
    msgs = trace.messages
    model = fit_predictor(trace.truth_botnet, msgs)
    campaign_of = {}
    for m, b in zip(msgs, trace.truth_botnet):
        campaign_of.setdefault(b, Counter())[m.campaign_id] += 1
    for m, b in zip(msgs, trace.truth_botnet):
        dist = predict_campaign_dist(model, m.address_id)
        assert next(iter(dist)) == campaign_of[b].most_common(1)[0][0]
