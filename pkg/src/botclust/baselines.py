"""Reference clusterings: threshold agglomeration of campaigns and a generative edge model."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from math import comb, exp, log, log1p
from typing import Sequence

import numpy as np

from .crp import log_crp_clique
from .errors import DataIntegrityError, ParameterError
from .evidence import CAMPAIGN, CliqueIndex, MessageRecord


# --------------------------------------------------------------------------
# threshold-based agglomerative clustering


@dataclass(frozen=True)
class CampaignCluster:
    campaigns: frozenset[str]
    nodes: tuple[int, ...]
    address_counts: Counter

    @classmethod
    def from_messages(cls, messages: Sequence[MessageRecord]) -> "CampaignCluster":
        if not messages:
            raise DataIntegrityError("a campaign cluster needs at least one message")
        return cls(
            frozenset(m.campaign_id for m in messages),
            tuple(sorted(m.node_id for m in messages)),
            Counter(m.address_id for m in messages),
        )

    def __len__(self):
        return len(self.nodes)

    def merged(self, other: "CampaignCluster") -> "CampaignCluster":
        return CampaignCluster(
            self.campaigns | other.campaigns,
            tuple(sorted(self.nodes + other.nodes)),
            self.address_counts + other.address_counts,
        )


def _covered(c: CampaignCluster, other: CampaignCluster) -> int:
    # messages of c whose address also occurs in other
    small, large = (c.address_counts, other.address_counts)
    return sum(k for a, k in small.items() if a in large)


def overlap_fraction(c: CampaignCluster, c2: CampaignCluster) -> float:
    """Half the fraction of c's messages with an address seen in c2, plus vice versa."""
    if not len(c) or not len(c2):
        raise DataIntegrityError("overlap of an empty cluster")
    return _covered(c, c2) / (2 * len(c)) + _covered(c2, c) / (2 * len(c2))


def threshold_cluster(messages: Sequence[MessageRecord], threshold: float) -> tuple[int, ...]:
    """Greedy best-first merging of campaign clusters while overlap exceeds ``threshold``.

    Cluster ids follow the sorted campaign ids; a merged cluster keeps the
    smaller id and ties between equal overlaps go to the smallest id pair, so
    the result does not depend on message order.  Returns a label per node.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"threshold must be in [0, 1], got {threshold}")
    by_campaign: dict[str, list[MessageRecord]] = {}
    for m in messages:
        by_campaign.setdefault(m.campaign_id, []).append(m)
    clusters = {k: CampaignCluster.from_messages(by_campaign[s]) for k, s in enumerate(sorted(by_campaign))}

    overlaps: dict[tuple[int, int], float] = {}
    ids = sorted(clusters)
    for x in range(len(ids)):
        for y in range(x + 1, len(ids)):
            overlaps[(ids[x], ids[y])] = overlap_fraction(clusters[ids[x]], clusters[ids[y]])

    while overlaps:
        best = min(overlaps, key=lambda pair: (-overlaps[pair], pair))
        if not overlaps[best] > threshold:
            break
        keep, gone = best
        clusters[keep] = clusters[keep].merged(clusters.pop(gone))
        overlaps = {p: v for p, v in overlaps.items() if gone not in p and keep not in p}
        for other in clusters:
            if other != keep:
                pair = (min(keep, other), max(keep, other))
                overlaps[pair] = overlap_fraction(clusters[pair[0]], clusters[pair[1]])

    n = len(messages)
    node_cluster = [-1] * n
    for k, c in clusters.items():
        for i in c.nodes:
            node_cluster[i] = k
    relabel: dict[int, int] = {}
    return tuple(relabel.setdefault(k, len(relabel)) for k in node_cluster)


# --------------------------------------------------------------------------
# generative edge model

THETA_NAMES = ("theta_s_in", "theta_s_out", "theta_a_in", "theta_a_out")


@dataclass(frozen=True)
class GenerativeParams:
    theta_s_in: float = 0.6
    theta_s_out: float = 0.4
    theta_a_in: float = 0.6
    theta_a_out: float = 0.4
    alpha: float = 1.0

    def __post_init__(self):
        for name in THETA_NAMES:
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must lie strictly inside (0, 1), got {v}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")

    def thetas(self) -> tuple[float, float, float, float]:
        return tuple(getattr(self, name) for name in THETA_NAMES)


class PairEvidence:
    """Two binary pair channels (shared campaign, shared address) over n nodes.

    Built either from a CliqueIndex, where each channel is an equivalence
    relation given by group labels, or from arbitrary symmetric 0/1 matrices.
    """

    CHANNELS = ("campaign", "address")

    def __init__(self, n: int, groups=None, matrices=None):
        self.n = n
        self._groups = groups
        self._nbrs = []
        if groups is not None:
            for labels in groups:
                members: dict[int, list[int]] = {}
                for i, g in enumerate(labels):
                    members.setdefault(g, []).append(i)
                self._nbrs.append([members[g] for g in labels])
        else:
            for M in matrices:
                self._nbrs.append([list(np.flatnonzero(M[i])) for i in range(n)])
            self._edges = [int(np.triu(M, 1).sum()) for M in matrices]

    @classmethod
    def from_index(cls, index: CliqueIndex) -> "PairEvidence":
        camp = [qs for _, qs in index.node_cliques]
        addr = [qa for qa, _ in index.node_cliques]
        return cls(index.n, groups=(camp, addr))

    @classmethod
    def from_matrices(cls, campaign: np.ndarray, address: np.ndarray) -> "PairEvidence":
        mats = []
        for M in (campaign, address):
            M = np.asarray(M, dtype=bool).copy()
            if M.shape[0] != M.shape[1] or not np.array_equal(M, M.T):
                raise DataIntegrityError("channel matrices must be square and symmetric")
            np.fill_diagonal(M, False)
            mats.append(M)
        return cls(len(mats[0]), matrices=mats)

    def neighbors(self, channel: int, i: int):
        # for group channels the list includes i itself
        return self._nbrs[channel][i]

    def counts(self, labels: Sequence[int]) -> list[tuple[int, int, int, int]]:
        """Per channel: (edge & same cluster, no edge & same, edge & different, no edge & different)."""
        n = self.n
        sizes = Counter(labels)
        same = sum(comb(k, 2) for k in sizes.values())
        total = comb(n, 2)
        out = []
        for ch in range(2):
            if self._groups is not None:
                g = self._groups[ch]
                edges = sum(comb(k, 2) for k in Counter(g).values())
                edges_same = sum(comb(k, 2) for k in Counter(zip(g, labels)).values())
            else:
                edges = self._edges[ch]
                nb = self._nbrs[ch]
                edges_same = sum(1 for i in range(n) for j in nb[i] if j > i and labels[j] == labels[i])
            out.append((edges_same, same - edges_same, edges - edges_same, total - same - edges + edges_same))
        return out


def _as_evidence(evidence) -> PairEvidence:
    return PairEvidence.from_index(evidence) if isinstance(evidence, CliqueIndex) else evidence


def _channel_loglik(counts, t_in, t_out):
    n11, n10, n01, n00 = counts
    return n11 * log(t_in) + n10 * log1p(-t_in) + n01 * log(t_out) + n00 * log1p(-t_out)


def generative_log_joint(clustering: Sequence[int], evidence, params: GenerativeParams) -> float:
    """log P_CRP(C | alpha) + sum over unordered pairs of both channels' Bernoulli terms."""
    ev = _as_evidence(evidence)
    labels = getattr(clustering, "labels", clustering)
    if len(labels) != ev.n:
        raise DataIntegrityError(f"clustering covers {len(labels)} nodes, graph has {ev.n}")
    cs, ca = ev.counts(labels)
    prior = log_crp_clique(Counter(labels).values(), params.alpha)
    return (
        prior
        + _channel_loglik(cs, params.theta_s_in, params.theta_s_out)
        + _channel_loglik(ca, params.theta_a_in, params.theta_a_out)
    )


def generative_gradient(clustering: Sequence[int], evidence, params: GenerativeParams) -> dict[str, float]:
    """Exact partial derivatives of the joint log likelihood w.r.t. the four thetas."""
    ev = _as_evidence(evidence)
    labels = getattr(clustering, "labels", clustering)
    grads = {}
    for (n11, n10, n01, n00), (k_in, k_out) in zip(
        ev.counts(labels), (("theta_s_in", "theta_s_out"), ("theta_a_in", "theta_a_out"))
    ):
        t_in, t_out = getattr(params, k_in), getattr(params, k_out)
        grads[k_in] = n11 / t_in - n10 / (1 - t_in)
        grads[k_out] = n01 / t_out - n00 / (1 - t_out)
    return grads


def _logit(p):
    return log(p) - log1p(-p)


def _sigmoid(u):
    return 1.0 / (1.0 + exp(-u))


_LOGIT_BOUND = 30.0


def _theta_ascent(labels, ev: PairEvidence, params: GenerativeParams, steps: int, history=None) -> GenerativeParams:
    """Gradient ascent on the logits of the thetas with a backtracking guard."""
    current = generative_log_joint(labels, ev, params)
    counts = ev.counts(labels)
    # per-parameter curvature scale: number of pairs informing it
    scale = {}
    for (n11, n10, n01, n00), (k_in, k_out) in zip(
        counts, (("theta_s_in", "theta_s_out"), ("theta_a_in", "theta_a_out"))
    ):
        scale[k_in] = max(n11 + n10, 1)
        scale[k_out] = max(n01 + n00, 1)
    step = 4.0
    for _ in range(steps):
        grads = generative_gradient(labels, ev, params)
        # chain rule: d/du = d/dtheta * theta (1 - theta)
        direction = {k: grads[k] * getattr(params, k) * (1 - getattr(params, k)) / scale[k] for k in THETA_NAMES}
        if max(abs(d) for d in direction.values()) < 1e-12:
            break
        while step > 1e-8:
            cand = {}
            for k in THETA_NAMES:
                u = min(max(_logit(getattr(params, k)) + step * direction[k], -_LOGIT_BOUND), _LOGIT_BOUND)
                cand[k] = _sigmoid(u)
            proposal = replace(params, **cand)
            value = generative_log_joint(labels, ev, proposal)
            if value >= current:
                params, current = proposal, value
                step = min(step * 2, 64.0)
                break
            step /= 2
        else:
            break
        if history is not None:
            history.append(current)
    return params


def _generative_sweep(labels: list[int], ev: PairEvidence, params: GenerativeParams, rng: np.random.Generator) -> None:
    terms = []
    for t_in, t_out in ((params.theta_s_in, params.theta_s_out), (params.theta_a_in, params.theta_a_out)):
        # log-ratio of "same cluster" vs "different cluster" for an edge / a non-edge
        terms.append((log(t_in) - log(t_out), log1p(-t_in) - log1p(-t_out)))
    log_alpha = log(params.alpha)
    sizes = Counter(labels)
    next_label = max(labels) + 1 if labels else 0
    us = rng.random(ev.n)
    for i in range(ev.n):
        old = labels[i]
        sizes[old] -= 1
        if not sizes[old]:
            del sizes[old]
        score = {c: log(k) for c, k in sizes.items()}
        for c, k in sizes.items():
            score[c] += k * (terms[0][1] + terms[1][1])
        for ch in range(2):
            on, off = terms[ch]
            for j in ev.neighbors(ch, i):
                if j != i:
                    c = labels[j]
                    score[c] += on - off
        keys = sorted(score)
        keys.append(None)
        values = [score[c] for c in keys[:-1]] + [log_alpha]
        top = max(values)
        w = np.exp(np.array(values) - top)
        cum = np.cumsum(w)
        pick = keys[min(int(np.searchsorted(cum, us[i] * cum[-1], side="right")), len(keys) - 1)]
        if pick is None:
            pick = next_label
            next_label += 1
        labels[i] = pick
        sizes[pick] += 1


def _canonical(labels: Sequence[int]) -> tuple[int, ...]:
    relabel: dict[int, int] = {}
    return tuple(relabel.setdefault(k, len(relabel)) for k in labels)


def generative_fit(
    evidence,
    init: GenerativeParams,
    iterations: int,
    seed: int = 0,
    ascent_steps: int = 20,
    history: list | None = None,
) -> tuple[tuple[int, ...], GenerativeParams]:
    """Alternate Gibbs sweeps over cluster labels with theta ascent.

    ``history``, when given, receives ``(iteration, log_joint)`` after every
    accepted ascent step.
    """
    if iterations < 1:
        raise ParameterError(f"iterations must be >= 1, got {iterations}")
    ev = _as_evidence(evidence)
    rng = np.random.default_rng(seed)
    labels = list(range(ev.n))
    params = init
    for it in range(iterations):
        _generative_sweep(labels, ev, params, rng)
        trace: list[float] = []
        params = _theta_ascent(labels, ev, params, ascent_steps, trace)
        if history is not None:
            history.extend((it, v) for v in trace)
    return _canonical(labels), params
