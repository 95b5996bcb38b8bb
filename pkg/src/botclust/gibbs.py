"""Gibbs sampling over minimal clusterings, one node's row at a time.

Resampling node ``i`` means detaching it from its two tables and choosing,
for each of its cliques, an existing table or a new one.  A choice is
admissible iff the merged component would not hold two tables of one clique.
The conditional weight of a choice is ``|t|`` for joining table ``t`` and
``alpha_q`` for opening a new table, multiplied over the two cliques.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, log
from typing import NamedTuple, Sequence

import numpy as np

from .crp import ConcentrationParams, log_crp_clique
from .errors import ConfigError
from .evidence import ClusteringState, CliqueIndex, singleton_state


class CandidateAssignment(NamedTuple):
    """Table per clique of the node; ``None`` opens a new table."""

    address_table: int | None
    campaign_table: int | None


@dataclass(frozen=True)
class ChainConfig:
    burn_in_sweeps: int = 50
    thinning: int = 5
    kept_samples: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.burn_in_sweeps < 0:
            raise ConfigError(f"burn_in_sweeps must be >= 0, got {self.burn_in_sweeps}")
        if self.thinning < 1:
            raise ConfigError(f"thinning must be >= 1, got {self.thinning}")
        if self.kept_samples < 1:
            raise ConfigError(f"kept_samples must be >= 1, got {self.kept_samples}")


@dataclass(frozen=True)
class ChainSample:
    """A kept clustering: cluster label per node (first-occurrence numbering)."""

    labels: tuple[int, ...]
    sweep_index: int

    @property
    def clustering(self) -> list[list[int]]:
        clusters: dict[int, list[int]] = {}
        for i, lab in enumerate(self.labels):
            clusters.setdefault(lab, []).append(i)
        return sorted(clusters.values())


def _admissible(state: ClusteringState, i: int) -> list[CandidateAssignment]:
    # assumes i is detached
    qa, qs = state.index.node_cliques[i]
    comp = state.comp
    a_tables = sorted(state.clique_tables[qa])
    s_tables = sorted(state.clique_tables[qs])
    s_info = []
    for s in s_tables:
        c = comp[s]
        s_info.append((s, c, state.component_cliques(c)))
    out = [CandidateAssignment(None, None)]
    for s, c, cliques in s_info:
        if qa not in cliques:
            out.append(CandidateAssignment(None, s))
    for a in a_tables:
        ca = comp[a]
        a_cliques = state.component_cliques(ca)
        if qs not in a_cliques:
            out.append(CandidateAssignment(a, None))
        for s, cs, s_cliques in s_info:
            if cs == ca or a_cliques.isdisjoint(s_cliques):
                out.append(CandidateAssignment(a, s))
    return out


def enumerate_candidates(state: ClusteringState, index: CliqueIndex, i: int) -> list[CandidateAssignment]:
    """Detach node ``i`` and list every admissible reseating.

    The state is left with ``i`` detached; apply one candidate with
    :func:`apply_candidate` to restore a complete state.  ``(None, None)``
    comes first and is always admissible.
    """
    index._check(i)
    state.detach(i)
    return _admissible(state, i)


def apply_candidate(state: ClusteringState, i: int, candidate: CandidateAssignment) -> None:
    state.attach(i, candidate.address_table, candidate.campaign_table)


def candidate_log_weight(
    state: ClusteringState,
    index: CliqueIndex,
    i: int,
    candidate: CandidateAssignment,
    params: ConcentrationParams,
) -> float:
    """Sum of the CRP terms of node ``i``'s two cliques after applying ``candidate``.

    ``state`` must have ``i`` detached (as left by :func:`enumerate_candidates`).
    """
    total = 0.0
    for q, table in zip(index.node_cliques[i], candidate):
        if index.duplicate_of[q] is not None:
            continue
        sizes = [len(state.members[t]) + (t == table) for t in state.clique_tables[q]]
        if table is None:
            sizes.append(1)
        total += log_crp_clique(sizes, params.alpha(index, q))
    return total


def _log_alphas(index: CliqueIndex, params: ConcentrationParams) -> list[float | None]:
    # None marks a twin clique, which contributes no factor
    return [
        None if index.duplicate_of[q] is not None else log(params.alpha(index, q))
        for q in range(len(index.cliques))
    ]


def _step(state: ClusteringState, i: int, log_alphas: Sequence[float], u: float) -> None:
    state.detach(i)
    cands = _admissible(state, i)
    if len(cands) == 1:
        state.attach(i, None, None)
        return
    qa, qs = state.index.node_cliques[i]
    la, ls = log_alphas[qa], log_alphas[qs]
    members = state.members
    if ls is None:
        lw = [la if a is None else log(len(members[a])) for a, _ in cands]
    else:
        lw = [
            (la if a is None else log(len(members[a]))) + (ls if s is None else log(len(members[s])))
            for a, s in cands
        ]
    top = max(lw)
    w = [exp(x - top) for x in lw]
    target = u * sum(w)
    acc = 0.0
    pick = cands[-1]
    for cand, wk in zip(cands, w):
        acc += wk
        if target < acc:
            pick = cand
            break
    state.attach(i, pick[0], pick[1])


def gibbs_step(
    state: ClusteringState,
    index: CliqueIndex,
    params: ConcentrationParams,
    i: int,
    rng: np.random.Generator,
) -> ClusteringState:
    """Resample node ``i`` in place."""
    index._check(i)
    _step(state, i, _log_alphas(index, params), float(rng.random()))
    return state


def gibbs_sweep(
    state: ClusteringState,
    index: CliqueIndex,
    params: ConcentrationParams,
    rng: np.random.Generator,
    log_alphas: Sequence[float] | None = None,
) -> ClusteringState:
    """Resample nodes ``0..n-1`` in order, in place; returns ``state``."""
    if log_alphas is None:
        log_alphas = _log_alphas(index, params)
    us = rng.random(index.n).tolist()
    for i in range(index.n):
        _step(state, i, log_alphas, us[i])
    return state


def run_chain(
    index: CliqueIndex,
    params: ConcentrationParams,
    config: ChainConfig,
    init: ClusteringState | None = None,
) -> list[ChainSample]:
    """Burn in, then keep every ``thinning``-th sweep until enough samples.

    ``init`` warm-starts the chain (it is copied, not mutated); otherwise the
    chain starts from the all-singleton state.
    """
    rng = np.random.default_rng(config.seed)
    state = singleton_state(index) if init is None else init.copy()
    log_alphas = _log_alphas(index, params)
    samples = []
    total = config.burn_in_sweeps + config.thinning * config.kept_samples
    for sweep in range(1, total + 1):
        gibbs_sweep(state, index, params, rng, log_alphas)
        if sweep > config.burn_in_sweeps and (sweep - config.burn_in_sweeps) % config.thinning == 0:
            samples.append(ChainSample(state.labels(), sweep))
    return samples


def map_clustering(samples: Sequence[ChainSample]) -> tuple[int, ...]:
    """Most frequent clustering in the chain; ties go to the earliest one seen."""
    counts: dict[tuple[int, ...], int] = {}
    for s in samples:
        counts[s.labels] = counts.get(s.labels, 0) + 1
    return max(counts, key=counts.__getitem__)
