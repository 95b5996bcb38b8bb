"""Campaign prediction from clusterings.

P(s | a, C) = sum_c P(s | c, C) P(c | a, C), with both multinomials estimated
by counting training messages.  Averaging over chain samples approximates the
posterior predictive.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DataIntegrityError, ParameterError, UnknownAddressError
from .evidence import MessageRecord


@dataclass
class PredictorModel:
    campaign_given_cluster: dict[int, dict[str, float]]
    cluster_given_address: dict[str, dict[int, float]]
    smoothing: float = 0.0

    @property
    def addresses(self):
        return self.cluster_given_address.keys()


def _labels_of(sample) -> Sequence[int]:
    return sample.labels if hasattr(sample, "labels") else sample


def _normalize(counts: Mapping, eps: float) -> dict:
    total = sum(counts.values()) + eps * len(counts)
    return {k: (v + eps) / total for k, v in counts.items()}


def fit_predictor(sample, messages: Sequence[MessageRecord], smoothing: float = 0.0) -> PredictorModel:
    """Estimate both multinomials from one clustering of the training messages.

    ``sample`` is a ChainSample or a plain label sequence indexed by node id.
    Smoothing is added to observed counts only, so unseen campaigns keep
    probability zero.
    """
    if smoothing < 0:
        raise ParameterError(f"smoothing must be >= 0, got {smoothing}")
    labels = _labels_of(sample)
    if len(labels) != len(messages):
        raise DataIntegrityError(f"clustering covers {len(labels)} nodes, training set has {len(messages)}")
    by_cluster: dict[int, Counter] = defaultdict(Counter)
    by_address: dict[str, Counter] = defaultdict(Counter)
    for m in messages:
        c = labels[m.node_id]
        by_cluster[c][m.campaign_id] += 1
        by_address[m.address_id][c] += 1
    return PredictorModel(
        campaign_given_cluster={c: _normalize(cnt, smoothing) for c, cnt in by_cluster.items()},
        cluster_given_address={a: _normalize(cnt, smoothing) for a, cnt in by_address.items()},
        smoothing=smoothing,
    )


def _sorted_dist(dist: Mapping[str, float]) -> dict[str, float]:
    return dict(sorted(dist.items(), key=lambda kv: (-kv[1], kv[0])))


def predict_campaign_dist(model: PredictorModel, address: str) -> dict[str, float]:
    """Distribution over campaigns for ``address``, most probable first."""
    clusters = model.cluster_given_address.get(address)
    if clusters is None:
        raise UnknownAddressError(address)
    out: dict[str, float] = defaultdict(float)
    for c, pc in clusters.items():
        for s, ps in model.campaign_given_cluster[c].items():
            out[s] += pc * ps
    return _sorted_dist(out)


def mixture_predict(
    weighted: Iterable[tuple[Sequence[int], float]],
    messages: Sequence[MessageRecord],
    addresses: Iterable[str],
    smoothing: float = 0.0,
) -> dict[str, dict[str, float]]:
    """Weighted average of per-clustering predictions for several addresses.

    Weights are normalized to sum to one.  Each distinct clustering is fitted
    once.
    """
    addresses = list(addresses)
    merged: dict[tuple[int, ...], float] = {}
    for labels, w in weighted:
        key = tuple(_labels_of(labels))
        merged[key] = merged.get(key, 0.0) + w
    if not merged:
        raise DataIntegrityError("no clusterings to average over")
    z = sum(merged.values())
    out: dict[str, dict[str, float]] = {a: defaultdict(float) for a in addresses}
    for labels, w in merged.items():
        model = fit_predictor(labels, messages, smoothing)
        for a in addresses:
            for s, p in predict_campaign_dist(model, a).items():
                out[a][s] += p * w / z
    return {a: _sorted_dist(d) for a, d in out.items()}


def posterior_predict(samples, messages, address: str, smoothing: float = 0.0) -> dict[str, float]:
    """Uniform average over chain samples of the single-clustering prediction."""
    samples = list(samples)
    if not samples:
        raise DataIntegrityError("samples must be non-empty")
    if len(samples) == 1:
        return predict_campaign_dist(fit_predictor(samples[0], messages, smoothing), address)
    return mixture_predict(((s, 1.0) for s in samples), messages, [address], smoothing)[address]


def posterior_predict_many(samples, messages, addresses, smoothing: float = 0.0) -> dict[str, dict[str, float]]:
    return mixture_predict(((s, 1.0) for s in samples), messages, addresses, smoothing)
