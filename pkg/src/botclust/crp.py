"""Chinese-restaurant-process scores of clusterings, one factor per clique."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma, log
from typing import Iterable, Mapping

from .errors import DomainError, ParameterError
from .evidence import ADDRESS, ClusteringState, CliqueIndex, is_minimal


@dataclass(frozen=True)
class ConcentrationParams:
    """Concentration per clique kind, with optional per-clique overrides."""

    alpha_address: float = 1.0
    alpha_campaign: float = 1.0
    overrides: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in (("alpha_address", self.alpha_address), ("alpha_campaign", self.alpha_campaign)):
            if not value > 0:
                raise ParameterError(f"{name} must be > 0, got {value}")
        for q, value in self.overrides.items():
            if not value > 0:
                raise ParameterError(f"alpha override for clique {q} must be > 0, got {value}")

    def alpha(self, index: CliqueIndex, q: int) -> float:
        value = self.overrides.get(q)
        if value is not None:
            return value
        return self.alpha_address if index.cliques[q].kind == ADDRESS else self.alpha_campaign


def log_crp_clique(table_sizes: Iterable[int], alpha: float) -> float:
    """Log CRP probability of one clique's partition given its table sizes.

    log P = k log(alpha) + lgamma(alpha) - lgamma(alpha + n) + sum lgamma(size)
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    sizes = list(table_sizes)
    if not sizes:
        raise ParameterError("table_sizes must be non-empty")
    if any(s < 1 for s in sizes):
        raise ParameterError(f"table sizes must be positive, got {sizes}")
    n = sum(sizes)
    return len(sizes) * log(alpha) + lgamma(alpha) - lgamma(alpha + n) + sum(lgamma(s) for s in sizes)


def log_posterior(state: ClusteringState, index: CliqueIndex, params: ConcentrationParams) -> float:
    """Unnormalized log posterior: sum of per-clique CRP terms (twin cliques once)."""
    if not is_minimal(state):
        raise DomainError("state is not minimal; it has zero posterior probability")
    return sum(log_crp_clique(state.table_sizes(q), params.alpha(index, q)) for q in index.scored_cliques())
