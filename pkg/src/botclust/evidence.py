"""Clique-structured evidence graph and clustering states over it.

Every message is a node.  Messages sent from the same address form an
address clique, messages of the same campaign form a campaign clique, so each
node lies in exactly two cliques.  A clustering is stored as a partition of
each clique into *tables*; tables that share a node are linked, and the
connected components of tables are the global clusters.

The edge selector matrix is never materialized: two nodes are selected as
linked iff they sit at a common table.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DataIntegrityError, DomainError

ADDRESS = "address"
CAMPAIGN = "campaign"

# slot positions inside ClusteringState.node_table rows
ADDRESS_SLOT = 0
CAMPAIGN_SLOT = 1


@dataclass(frozen=True)
class MessageRecord:
    node_id: int
    address_id: str
    campaign_id: str
    timestamp: int


@dataclass(frozen=True)
class Clique:
    kind: str
    key: str
    members: tuple[int, ...]

    def __len__(self):
        return len(self.members)


class CliqueIndex:
    """Immutable clique view of the evidence graph.

    ``node_cliques[i]`` is ``(address_clique_id, campaign_clique_id)``.
    Cliques are numbered in order of the first node that opens them, address
    before campaign for the same node.

    The graph's clique set counts a node set once, so a campaign clique with
    exactly the members of an address clique is a twin:
    ``duplicate_of[q]`` names the address clique and ``q`` carries no score.
    """

    __slots__ = ("cliques", "node_cliques", "n", "duplicate_of")

    def __init__(self, cliques: Sequence[Clique], node_cliques: Sequence[tuple[int, int]]):
        self.cliques = tuple(cliques)
        self.node_cliques = tuple(node_cliques)
        self.n = len(self.node_cliques)
        twins = []
        for q, c in enumerate(self.cliques):
            twin = None
            if c.kind == CAMPAIGN:
                qa = self.node_cliques[c.members[0]][0]
                if self.cliques[qa].members == c.members:
                    twin = qa
            twins.append(twin)
        self.duplicate_of = tuple(twins)

    def scored_cliques(self) -> list[int]:
        return [q for q, twin in enumerate(self.duplicate_of) if twin is None]

    def __repr__(self):
        return f"CliqueIndex(n={self.n}, cliques={len(self.cliques)})"

    def __eq__(self, other):
        if not isinstance(other, CliqueIndex):
            return NotImplemented
        return self.cliques == other.cliques and self.node_cliques == other.node_cliques

    def __hash__(self):
        return hash((self.cliques, self.node_cliques))

    def kind(self, q: int) -> str:
        return self.cliques[q].kind

    def neighbors(self, i: int) -> set[int]:
        self._check(i)
        out: set[int] = set()
        for q in self.node_cliques[i]:
            out.update(self.cliques[q].members)
        out.discard(i)
        return out

    def _check(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"node id {i} out of range [0, {self.n})")


def build_clique_index(messages: Iterable[MessageRecord]) -> CliqueIndex:
    """Group messages into one clique per distinct address and per distinct campaign.

    Messages may arrive in any order; node ids must be unique and contiguous
    from zero.
    """
    messages = list(messages)
    if not messages:
        raise DataIntegrityError("message list is empty")
    by_id: dict[int, MessageRecord] = {}
    for m in messages:
        if m.node_id in by_id:
            raise DataIntegrityError(f"duplicate node_id {m.node_id}")
        if not m.address_id or not m.campaign_id:
            raise DataIntegrityError(f"node {m.node_id}: empty address_id or campaign_id")
        by_id[m.node_id] = m
    n = len(by_id)
    if set(by_id) != set(range(n)):
        raise DataIntegrityError("node ids must be contiguous from 0")

    keys: list[tuple[str, str]] = []
    members: list[list[int]] = []
    lookup: dict[tuple[str, str], int] = {}
    node_cliques = []
    for i in range(n):
        m = by_id[i]
        row = []
        for kind, key in ((ADDRESS, m.address_id), (CAMPAIGN, m.campaign_id)):
            q = lookup.get((kind, key))
            if q is None:
                q = lookup[(kind, key)] = len(keys)
                keys.append((kind, key))
                members.append([])
            members[q].append(i)
            row.append(q)
        node_cliques.append((row[0], row[1]))
    cliques = [Clique(kind, key, tuple(mem)) for (kind, key), mem in zip(keys, members)]
    return CliqueIndex(cliques, node_cliques)


def adjacency(index: CliqueIndex, i: int, j: int) -> bool:
    """Evidence-graph adjacency: reflexive, plus any shared clique."""
    index._check(i)
    index._check(j)
    if i == j:
        return True
    a, b = index.node_cliques[i], index.node_cliques[j]
    return a[0] == b[0] or a[1] == b[1]


class ClusteringState:
    """Per-clique table assignments plus the component structure over tables.

    Tables are identified by integer ids that are never reused within one
    state.  ``links[t][u]`` counts the nodes seated at both ``t`` and ``u``;
    a table's component changes only when such a count drops to zero, which
    is when the (local) component is recomputed.
    """

    def __init__(self, index: CliqueIndex):
        self.index = index
        self.members: dict[int, set[int]] = {}
        self.owner: dict[int, int] = {}
        self.clique_tables: list[set[int]] = [set() for _ in index.cliques]
        self.node_table: list[list[int | None]] = [[None, None] for _ in range(index.n)]
        self.links: dict[int, dict[int, int]] = {}
        self.comp: dict[int, int] = {}
        self.comp_tables: dict[int, set[int]] = {}
        self._next_table = 0
        self._next_comp = 0

    # construction ---------------------------------------------------------

    @classmethod
    def from_tables(cls, index: CliqueIndex, tables: dict[int, Iterable[Iterable[int]]]) -> "ClusteringState":
        """Build a state from explicit per-clique partitions.

        ``tables`` maps clique id to a list of node groups.  Cliques that are
        omitted get one singleton table per member.  No minimality check is
        applied, so this is also how deliberately invalid states are built.
        """
        state = cls(index)
        for q, clique in enumerate(index.cliques):
            groups = tables.get(q)
            if groups is None:
                groups = [[i] for i in clique.members]
            groups = [sorted(set(g)) for g in groups]
            seen = sorted(i for g in groups for i in g)
            if seen != sorted(clique.members):
                raise DataIntegrityError(f"tables of clique {q} do not partition its members")
            slot = ADDRESS_SLOT if clique.kind == ADDRESS else CAMPAIGN_SLOT
            for g in groups:
                if not g:
                    continue
                t = state._new_table(q)
                for i in g:
                    state.members[t].add(i)
                    state.node_table[i][slot] = t
        for i in range(index.n):
            a, s = state.node_table[i]
            state._link(a, s, 1)
        state.rebuild_components()
        return state

    def copy(self) -> "ClusteringState":
        other = ClusteringState.__new__(ClusteringState)
        other.index = self.index
        other.members = {t: set(m) for t, m in self.members.items()}
        other.owner = dict(self.owner)
        other.clique_tables = [set(ts) for ts in self.clique_tables]
        other.node_table = [list(row) for row in self.node_table]
        other.links = {t: dict(d) for t, d in self.links.items()}
        other.comp = dict(self.comp)
        other.comp_tables = {c: set(ts) for c, ts in self.comp_tables.items()}
        other._next_table = self._next_table
        other._next_comp = self._next_comp
        return other

    # primitive mutations --------------------------------------------------

    def _new_table(self, q: int) -> int:
        t = self._next_table
        self._next_table += 1
        self.members[t] = set()
        self.owner[t] = q
        self.clique_tables[q].add(t)
        self.links[t] = {}
        c = self._next_comp
        self._next_comp += 1
        self.comp[t] = c
        self.comp_tables[c] = {t}
        return t

    def _drop_table(self, t: int) -> None:
        c = self.comp.pop(t)
        ts = self.comp_tables[c]
        ts.discard(t)
        if not ts:
            del self.comp_tables[c]
        self.clique_tables[self.owner.pop(t)].discard(t)
        del self.members[t]
        del self.links[t]

    def _link(self, a: int, s: int, delta: int) -> int:
        la, ls = self.links[a], self.links[s]
        c = la.get(s, 0) + delta
        if c:
            la[s] = c
            ls[a] = c
        else:
            del la[s]
            del ls[a]
        return c

    def _merge_components(self, c1: int, c2: int) -> None:
        if len(self.comp_tables[c1]) < len(self.comp_tables[c2]):
            c1, c2 = c2, c1
        moved = self.comp_tables.pop(c2)
        for t in moved:
            self.comp[t] = c1
        self.comp_tables[c1] |= moved

    def _reachable(self, start: int) -> set[int]:
        seen = {start}
        stack = [start]
        links = self.links
        while stack:
            t = stack.pop()
            for u in links[t]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def rebuild_components(self) -> None:
        """Recompute all components from scratch."""
        self.comp.clear()
        self.comp_tables.clear()
        for t in sorted(self.members):
            if t in self.comp:
                continue
            c = self._next_comp
            self._next_comp += 1
            reach = self._reachable(t)
            self.comp_tables[c] = reach
            for u in reach:
                self.comp[u] = c

    def detach(self, i: int) -> None:
        """Remove node ``i`` from both of its tables, dropping emptied tables."""
        a, s = self.node_table[i]
        if a is None:
            return
        self.members[a].discard(i)
        self.members[s].discard(i)
        remaining = self._link(a, s, -1)
        self.node_table[i][0] = self.node_table[i][1] = None
        empty_a = not self.members[a]
        empty_s = not self.members[s]
        if empty_a:
            self._drop_table(a)
        if empty_s:
            self._drop_table(s)
        if empty_a or empty_s or remaining:
            return
        # the a-s link was carried by i alone: the component may have split
        reach = self._reachable(a)
        if s in reach:
            return
        old = self.comp[a]
        c = self._next_comp
        self._next_comp += 1
        self.comp_tables[old] -= reach
        self.comp_tables[c] = reach
        for t in reach:
            self.comp[t] = c

    def attach(self, i: int, address_table: int | None, campaign_table: int | None) -> tuple[int, int]:
        """Seat detached node ``i``; ``None`` opens a new table in that clique.

        Returns the table ids actually used.
        """
        qa, qs = self.index.node_cliques[i]
        a = self._new_table(qa) if address_table is None else address_table
        s = self._new_table(qs) if campaign_table is None else campaign_table
        if self.owner[a] != qa or self.owner[s] != qs:
            raise DomainError(f"tables ({a}, {s}) do not belong to the cliques of node {i}")
        self.members[a].add(i)
        self.members[s].add(i)
        self.node_table[i][0] = a
        self.node_table[i][1] = s
        self._link(a, s, 1)
        ca, cs = self.comp[a], self.comp[s]
        if ca != cs:
            self._merge_components(ca, cs)
        return a, s

    # queries ----------------------------------------------------------------

    def component_cliques(self, c: int) -> set[int]:
        owner = self.owner
        return {owner[t] for t in self.comp_tables[c]}

    def table_sizes(self, q: int) -> list[int]:
        return sorted((len(self.members[t]) for t in self.clique_tables[q]), reverse=True)

    def clique_partition(self, q: int) -> list[list[int]]:
        return sorted(sorted(self.members[t]) for t in self.clique_tables[q])

    def num_tables(self) -> int:
        return len(self.members)

    def labels(self) -> tuple[int, ...]:
        """Cluster label per node, numbered by first occurrence."""
        out = [-1] * self.index.n
        relabel: dict[int, int] = {}
        for i, (a, _) in enumerate(self.node_table):
            c = self.comp[a]
            lab = relabel.get(c)
            if lab is None:
                lab = relabel[c] = len(relabel)
            out[i] = lab
        return tuple(out)

    def selected(self, i: int, j: int) -> bool:
        """Implied selector entry: True iff ``i`` and ``j`` share a table."""
        if i == j:
            return True
        ri, rj = self.node_table[i], self.node_table[j]
        return ri[0] == rj[0] or ri[1] == rj[1]

    def __repr__(self):
        return f"ClusteringState(n={self.index.n}, tables={len(self.members)}, clusters={len(self.comp_tables)})"


def singleton_state(index: CliqueIndex) -> ClusteringState:
    """Every node at its own table in both of its cliques."""
    state = ClusteringState(index)
    for i in range(index.n):
        state.attach(i, None, None)
    return state


def state_from_partition(index: CliqueIndex, labels: Sequence[int]) -> ClusteringState:
    """Seat nodes by projecting a global partition onto each clique.

    The result is always minimal.  A block whose nodes are not connected in
    the evidence graph comes back split into its connected pieces.
    """
    if len(labels) != index.n:
        raise DataIntegrityError(f"expected {index.n} labels, got {len(labels)}")
    tables: dict[int, list[list[int]]] = {}
    for q, clique in enumerate(index.cliques):
        groups: dict[int, list[int]] = {}
        for i in clique.members:
            groups.setdefault(labels[i], []).append(i)
        tables[q] = list(groups.values())
    return ClusteringState.from_tables(index, tables)


def global_clusters(state: ClusteringState) -> list[list[int]]:
    """Node sets of the table components, each sorted, ordered by smallest node."""
    clusters: dict[int, list[int]] = {}
    for i, (a, _) in enumerate(state.node_table):
        clusters.setdefault(state.comp[a], []).append(i)
    return sorted(clusters.values())


def is_minimal(state: ClusteringState) -> bool:
    """True iff no component holds two tables of the same clique.

    This is the canonical-form test: besides minimality of the implied
    selector, it rejects encodings where two nodes sharing both cliques sit
    together in one clique but apart in the other.
    """
    owner = state.owner
    for tables in state.comp_tables.values():
        if len({owner[t] for t in tables}) != len(tables):
            return False
    return True
