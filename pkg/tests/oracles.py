"""Dense-matrix oracles, independent of the table representation.

Everything here works on explicit 0/1 matrices built from raw
(address, campaign) pairs and is only practical for small graphs.
"""

from __future__ import annotations

import itertools
from math import gamma

import numpy as np

from botclust.evidence import MessageRecord


def messages_from_pairs(pairs):
    return [MessageRecord(i, a, s, i) for i, (a, s) in enumerate(pairs)]


def random_pairs(rng, n, n_addr=None, n_camp=None):
    n_addr = n_addr or int(rng.integers(1, n + 1))
    n_camp = n_camp or int(rng.integers(1, n + 1))
    return [(f"a{rng.integers(n_addr)}", f"s{rng.integers(n_camp)}") for _ in range(n)]


def dense_adjacency(pairs):
    n = len(pairs)
    X = np.eye(n, dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        if pairs[i][0] == pairs[j][0] or pairs[i][1] == pairs[j][1]:
            X[i, j] = X[j, i] = True
    return X


def raw_cliques(pairs):
    """{frozenset(members): kind}; a node set that is both kinds counts once, as address."""
    groups = {}
    for i, (a, s) in enumerate(pairs):
        groups.setdefault(("address", a), set()).add(i)
        groups.setdefault(("campaign", s), set()).add(i)
    out = {}
    for (kind, _), members in sorted(groups.items()):
        out.setdefault(frozenset(members), kind)
    return out


def transitive_closure(Y):
    R = Y.copy()
    n = len(R)
    for k in range(n):
        R |= np.outer(R[:, k], R[k, :])
    return R


def dense_is_minimal(Y, X):
    return bool(np.array_equal(Y, transitive_closure(Y) & X))


def selector_from_state(state):
    n = state.index.n
    Y = np.eye(n, dtype=bool)
    for q in range(len(state.index.cliques)):
        for group in state.clique_partition(q):
            for i, j in itertools.combinations(group, 2):
                Y[i, j] = Y[j, i] = True
    return Y


def clusters_of(Y):
    R = transitive_closure(Y)
    seen, out = set(), []
    for i in range(len(R)):
        if i in seen:
            continue
        block = tuple(int(j) for j in np.flatnonzero(R[i]))
        seen.update(block)
        out.append(block)
    return frozenset(out)


def canonical_labels(clusters, n):
    lab = [-1] * n
    nxt = 0
    for i in range(n):
        if lab[i] < 0:
            block = next(b for b in clusters if i in b)
            for j in block:
                lab[j] = nxt
            nxt += 1
    return tuple(lab)


def enumerate_minimal_selectors(X):
    n = len(X)
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if X[i, j]]
    out = []
    for bits in itertools.product((False, True), repeat=len(edges)):
        Y = np.eye(n, dtype=bool)
        for (i, j), b in zip(edges, bits):
            if b:
                Y[i, j] = Y[j, i] = True
        if dense_is_minimal(Y, X):
            out.append(Y)
    return out


def crp_prob(sizes, alpha):
    n = sum(sizes)
    p = alpha ** len(sizes) * gamma(alpha) / gamma(alpha + n)
    for s in sizes:
        p *= gamma(s)
    return p


def exact_posterior(pairs, alpha_address, alpha_campaign):
    """{labels: probability} over all minimal selectors, normalized."""
    X = dense_adjacency(pairs)
    cliques = raw_cliques(pairs)
    n = len(pairs)
    weights = {}
    for Y in enumerate_minimal_selectors(X):
        clusters = clusters_of(Y)
        w = 1.0
        for members, kind in cliques.items():
            sizes = [len(set(b) & members) for b in clusters]
            sizes = [s for s in sizes if s]
            w *= crp_prob(sizes, alpha_address if kind == "address" else alpha_campaign)
        lab = canonical_labels(clusters, n)
        assert lab not in weights, "two minimal selectors with one clustering"
        weights[lab] = w
    z = sum(weights.values())
    return {k: v / z for k, v in weights.items()}, z


def brute_force_rows(Y, X, i):
    """All minimal Y' that agree with Y off row/column i (as frozen byte strings)."""
    n = len(X)
    others = [j for j in range(n) if j != i]
    out = set()
    for bits in itertools.product((False, True), repeat=len(others)):
        Yp = Y.copy()
        for j, b in zip(others, bits):
            Yp[i, j] = Yp[j, i] = b
        Yp[i, i] = True
        if dense_is_minimal(Yp, X):
            out.add(Yp.tobytes())
    return out


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part
