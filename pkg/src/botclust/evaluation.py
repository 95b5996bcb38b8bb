"""Train/test protocol, ROC analysis and parameter tuning."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .baselines import GenerativeParams, generative_fit, threshold_cluster
from .crp import ConcentrationParams
from .errors import DataIntegrityError, ParameterError
from .evidence import MessageRecord, build_clique_index
from .gibbs import ChainConfig, ChainSample, run_chain
from .predictor import posterior_predict_many
from .synthetic import SECONDS_PER_HOUR

METHODS = ("mgc", "threshold", "generative")


def renumber(messages: Iterable[MessageRecord]) -> list[MessageRecord]:
    """Sort by (timestamp, node_id) and assign contiguous node ids."""
    ordered = sorted(messages, key=lambda m: (m.timestamp, m.node_id))
    return [replace(m, node_id=i) for i, m in enumerate(ordered)]


def split_train_test(
    messages: Sequence[MessageRecord],
    train_hours: float = 16.0,
    test_hours: float = 8.0,
    min_campaign_count: int = 5,
    start: int | None = None,
) -> tuple[list[MessageRecord], list[MessageRecord]]:
    """Training window then test window, both renumbered from zero.

    Campaigns with fewer than ``min_campaign_count`` messages across both
    windows are dropped, and test messages from addresses absent in training
    are excluded.
    """
    if train_hours <= 0 or test_hours < 0:
        raise ParameterError("train_hours must be > 0 and test_hours >= 0")
    if not messages:
        raise DataIntegrityError("no messages to split")
    t0 = min(m.timestamp for m in messages) if start is None else start
    t1 = t0 + train_hours * SECONDS_PER_HOUR
    t2 = t1 + test_hours * SECONDS_PER_HOUR
    window = [m for m in messages if t0 <= m.timestamp < t2]
    counts = Counter(m.campaign_id for m in window)
    window = [m for m in window if counts[m.campaign_id] >= min_campaign_count]
    train = [m for m in window if m.timestamp < t1]
    if not train:
        raise DataIntegrityError("training window is empty")
    seen = {m.address_id for m in train}
    test = [m for m in window if m.timestamp >= t1 and m.address_id in seen]
    return renumber(train), renumber(test)


# --------------------------------------------------------------------------
# ROC


@dataclass(frozen=True)
class ScoredExample:
    address_id: str
    campaign_id: str
    score: float
    label: bool


@dataclass(frozen=True)
class RocCurve:
    # (false positive rate, true positive rate, threshold); first point has threshold inf
    points: list[tuple[float, float, float]]
    auc: float


def build_examples(
    predictions: Mapping[str, Mapping[str, float]],
    test: Sequence[MessageRecord],
    universe: Iterable[str],
) -> list[ScoredExample]:
    """One positive per distinct test (address, campaign) pair, one negative per other catalog campaign.

    Test campaigns outside the catalog are skipped; missing predictions score 0.
    """
    universe = sorted(set(universe))
    catalog = set(universe)
    pairs = sorted({(m.address_id, m.campaign_id) for m in test if m.campaign_id in catalog})
    out = []
    for a, s in pairs:
        dist = predictions.get(a, {})
        out.append(ScoredExample(a, s, float(dist.get(s, 0.0)), True))
        for other in universe:
            if other != s:
                out.append(ScoredExample(a, other, float(dist.get(other, 0.0)), False))
    return out


def _split_scores(examples: Sequence[ScoredExample]):
    pos = np.array([e.score for e in examples if e.label], dtype=float)
    neg = np.array([e.score for e in examples if not e.label], dtype=float)
    if not len(pos) or not len(neg):
        raise DataIntegrityError("ROC needs at least one positive and one negative example")
    return pos, neg


def build_roc(examples: Sequence[ScoredExample]) -> RocCurve:
    """ROC over all distinct score thresholds; AUC by the trapezoidal rule."""
    pos, neg = _split_scores(examples)
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    # counts of scores >= threshold
    tp = len(pos) - np.searchsorted(pos_sorted, thresholds, side="left")
    fp = len(neg) - np.searchsorted(neg_sorted, thresholds, side="left")
    tpr = np.concatenate([[0.0], tp / len(pos)])
    fpr = np.concatenate([[0.0], fp / len(neg)])
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))
    points = [(0.0, 0.0, float("inf"))] + [
        (float(f), float(t), float(th)) for f, t, th in zip(fpr[1:], tpr[1:], thresholds)
    ]
    return RocCurve(points, auc)


def rank_auc(examples: Sequence[ScoredExample]) -> float:
    """Mann-Whitney U / (n_pos n_neg) with midranks for ties."""
    pos, neg = _split_scores(examples)
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: len(pos)].sum() - len(pos) * (len(pos) + 1) / 2
    return float(u / (len(pos) * len(neg)))


# --------------------------------------------------------------------------
# method pipelines


@dataclass(frozen=True)
class MethodConfig:
    method: str = "mgc"
    params: ConcentrationParams = ConcentrationParams()
    chain: ChainConfig = ChainConfig()
    threshold: float = 0.5
    generative: GenerativeParams = GenerativeParams()
    generative_iterations: int = 20
    smoothing: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; expected one of {METHODS}")


def fit_clusterings(train: Sequence[MessageRecord], config: MethodConfig) -> list[ChainSample]:
    """Clusterings of the training messages: a chain for mgc, a single one for baselines."""
    if config.method == "threshold":
        return [ChainSample(threshold_cluster(train, config.threshold), 0)]
    index = build_clique_index(train)
    if config.method == "generative":
        labels, _ = generative_fit(index, config.generative, config.generative_iterations, seed=config.chain.seed)
        return [ChainSample(labels, config.generative_iterations)]
    return run_chain(index, config.params, config.chain)


def evaluate_predictions(
    predictions: Mapping[str, Mapping[str, float]],
    train: Sequence[MessageRecord],
    test: Sequence[MessageRecord],
) -> RocCurve:
    return build_roc(build_examples(predictions, test, {m.campaign_id for m in train}))


def run_method(train, test, config: MethodConfig) -> RocCurve:
    samples = fit_clusterings(train, config)
    addresses = sorted({m.address_id for m in test})
    predictions = posterior_predict_many(samples, train, addresses, config.smoothing)
    return evaluate_predictions(predictions, train, test)


def grid_aucs(train, validation, grid: Sequence[tuple[float, float]], chain: ChainConfig, smoothing=0.0) -> list[float]:
    return [
        run_method(train, validation, MethodConfig("mgc", ConcentrationParams(a, s), chain, smoothing=smoothing)).auc
        for a, s in grid
    ]


def tune_alphas(
    train: Sequence[MessageRecord],
    validation: Sequence[MessageRecord],
    grid: Sequence[tuple[float, float]],
    chain: ChainConfig,
    smoothing: float = 0.0,
) -> tuple[float, float]:
    """The (alpha_address, alpha_campaign) pair with the highest validation AUC; first wins ties."""
    if not grid:
        raise ParameterError("grid must be non-empty")
    aucs = grid_aucs(train, validation, grid, chain, smoothing)
    return tuple(grid[int(np.argmax(aucs))])


def tune_threshold(train, validation, thresholds: Sequence[float], smoothing: float = 0.0) -> float:
    """Threshold-baseline counterpart of :func:`tune_alphas`."""
    if not thresholds:
        raise ParameterError("thresholds must be non-empty")
    aucs = [run_method(train, validation, MethodConfig("threshold", threshold=t, smoothing=smoothing)).auc for t in thresholds]
    return thresholds[int(np.argmax(aucs))]
