"""Synthetic botnet world producing labeled message traces.

Botnets own disjoint address pools at every instant.  Addresses migrate to
another botnet as a Poisson process.  Each botnet emits messages as a Poisson
process, picking a campaign from its own weighted campaign list and an
address uniformly from its current pool.  Every emitted message is then kept
independently with probability ``observation_fraction``.

The observation coin for each emitted message is drawn from its own random
stream, so two traces with the same seed and different observation
fractions see the same underlying traffic and nested observed subsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .evidence import MessageRecord

SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class WorldConfig:
    num_botnets: int = 5
    addresses_per_botnet: int = 20
    campaigns_per_botnet: int = 3
    campaign_sharing: float = 0.0
    address_reassignment_rate: float = 0.0
    messages_per_hour: float = 20.0
    duration_hours: float = 24.0
    observation_fraction: float = 1.0
    # Zipf exponent for campaign popularity within a botnet; 0 is uniform
    campaign_skew: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.num_botnets < 1:
            raise ConfigError("num_botnets must be >= 1")
        if self.addresses_per_botnet < 1:
            raise ConfigError("addresses_per_botnet must be >= 1")
        if self.campaigns_per_botnet < 1:
            raise ConfigError("campaigns_per_botnet must be >= 1")
        if not 0.0 <= self.campaign_sharing <= 1.0:
            raise ConfigError("campaign_sharing must be in [0, 1]")
        if self.address_reassignment_rate < 0:
            raise ConfigError("address_reassignment_rate must be >= 0")
        if not self.messages_per_hour > 0:
            raise ConfigError("messages_per_hour must be > 0")
        if not self.duration_hours > 0:
            raise ConfigError("duration_hours must be > 0")
        if not 0.0 < self.observation_fraction <= 1.0:
            raise ConfigError("observation_fraction must be in (0, 1]")
        if self.campaign_skew < 0:
            raise ConfigError("campaign_skew must be >= 0")


@dataclass
class LabeledTrace:
    messages: list[MessageRecord]
    truth_botnet: list[int]
    # address -> list of (start, end, botnet), end exclusive
    truth_address_botnet: dict[str, list[tuple[int, int, int]]] = field(default_factory=dict)

    def botnet_at(self, address: str, t: int) -> int:
        for start, end, b in self.truth_address_botnet[address]:
            if start <= t < end:
                return b
        raise KeyError((address, t))


def address_name(k: int) -> str:
    return f"10.{k // 65536 % 256}.{k // 256 % 256}.{k % 256}"


def campaign_name(j: int) -> str:
    return f"campaign-{j:04d}"


class _Pool:
    """Set with O(1) insert, delete and uniform choice."""

    def __init__(self):
        self.items: list[int] = []
        self.pos: dict[int, int] = {}

    def add(self, x):
        self.pos[x] = len(self.items)
        self.items.append(x)

    def remove(self, x):
        k = self.pos.pop(x)
        last = self.items.pop()
        if last != x:
            self.items[k] = last
            self.pos[last] = k

    def __len__(self):
        return len(self.items)


def generate_trace(config: WorldConfig) -> LabeledTrace:
    cfg = config
    structure, churn_rng, emit_rng, observe_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(4)
    )
    B = cfg.num_botnets
    horizon = cfg.duration_hours * SECONDS_PER_HOUR

    # campaigns: each botnet owns its own, some are also run by a second botnet
    botnet_campaigns: list[list[int]] = [[] for _ in range(B)]
    for j in range(B * cfg.campaigns_per_botnet):
        owner = j // cfg.campaigns_per_botnet
        botnet_campaigns[owner].append(j)
        if B > 1 and structure.random() < cfg.campaign_sharing:
            other = int(structure.integers(B - 1))
            other += other >= owner
            botnet_campaigns[other].append(j)
    campaign_weights = []
    for b in range(B):
        ranks = structure.permutation(len(botnet_campaigns[b])) + 1
        w = ranks.astype(float) ** -cfg.campaign_skew
        campaign_weights.append(np.cumsum(w / w.sum()))

    # initial pools and churn events: (time, kind=0, address, new botnet)
    n_addr = B * cfg.addresses_per_botnet
    owner_of = [k // cfg.addresses_per_botnet for k in range(n_addr)]
    events: list[tuple[int, int, int, int]] = []
    rate = cfg.address_reassignment_rate / SECONDS_PER_DAY
    if rate > 0 and B > 1:
        for k in range(n_addr):
            t = churn_rng.exponential(1 / rate)
            while t < horizon:
                events.append((int(t), 0, k, int(churn_rng.integers(B - 1))))
                t += churn_rng.exponential(1 / rate)

    # emissions: (time, kind=1, botnet, 0)
    lam = cfg.messages_per_hour / SECONDS_PER_HOUR
    for b in range(B):
        count = emit_rng.poisson(lam * horizon)
        for t in np.sort(emit_rng.uniform(0, horizon, count)):
            events.append((int(t), 1, b, 0))
    # whole seconds; at equal times churn (kind 0) applies before emissions
    events.sort()

    pools = [_Pool() for _ in range(B)]
    for k, b in enumerate(owner_of):
        pools[b].add(k)
    intervals: dict[int, list[list]] = {k: [[0, None, b]] for k, b in enumerate(owner_of)}

    raw = []  # (timestamp, address, campaign, botnet)
    for t, kind, x, y in events:
        if kind == 0:
            old = owner_of[x]
            new = y + (y >= old)
            pools[old].remove(x)
            pools[new].add(x)
            owner_of[x] = new
            intervals[x][-1][1] = t
            intervals[x].append([t, None, new])
            continue
        b = x
        # an empty pool cannot send; draws are made regardless to keep streams aligned
        u_addr, u_camp = emit_rng.random(2)
        keep = observe_rng.random() < cfg.observation_fraction
        if not len(pools[b]):
            continue
        addr = pools[b].items[int(u_addr * len(pools[b]))]
        pick = min(int(np.searchsorted(campaign_weights[b], u_camp, side="right")), len(botnet_campaigns[b]) - 1)
        camp = botnet_campaigns[b][pick]
        if keep:
            raw.append((t, addr, camp, b))

    end = int(np.ceil(horizon)) + 1
    truth_intervals = {}
    for k, spans in intervals.items():
        spans[-1][1] = end
        truth_intervals[address_name(k)] = [tuple(s) for s in spans if s[0] < s[1]]
    messages = [
        MessageRecord(i, address_name(addr), campaign_name(camp), ts) for i, (ts, addr, camp, _) in enumerate(raw)
    ]
    return LabeledTrace(messages, [b for *_, b in raw], truth_intervals)
