"""Independent reference computations used by the tests.

Nothing here calls into the code paths it is used to check.
"""

from __future__ import annotations

import itertools
from decimal import Decimal
from fractions import Fraction


def gap(call_strike, put_strike) -> Decimal:
    return Decimal(str(put_strike)) - Decimal(str(call_strike))


def weight_equation(terms: list[tuple[Decimal, Decimal]]) -> Fraction | None:
    """W for a list of (gap, R-or-L) pairs in plain decimals; None if D is 0."""
    if not terms:
        return None
    d = max(abs(g) for g, _ in terms)
    if d == 0:
        return None
    num = sum((Fraction(g) * Fraction(w) for g, w in terms), Fraction(0))
    return num / Fraction(d)


def ranks_by_sort(values: list, reverse: bool = True) -> list[int]:
    """1-based ranks of ``values`` sorted descending (ties: first index first)."""
    order = sorted(range(len(values)), key=lambda k: (-values[k] if reverse else values[k], k))
    ranks = [0] * len(values)
    for r, k in enumerate(order, start=1):
        ranks[k] = r
    return ranks


def all_maximum_matchings(n_calls: int, n_puts: int):
    """Every matching pairing min(n_calls, n_puts) agents, as sets of (ci, pi)."""
    if n_calls <= n_puts:
        for puts in itertools.permutations(range(n_puts), n_calls):
            yield frozenset(zip(range(n_calls), puts))
    else:
        for calls in itertools.permutations(range(n_calls), n_puts):
            yield frozenset(zip(calls, range(n_puts)))


def blocking_pairs(i_rank, j_rank, matching, n_calls, n_puts):
    """(call, put) pairs that both strictly prefer each other; unmatched = worst."""
    worst = max(n_calls, n_puts) + 1
    p_of = {c: p for c, p in matching}
    c_of = {p: c for c, p in matching}
    out = []
    for c in range(n_calls):
        for p in range(n_puts):
            if p_of.get(c) == p:
                continue
            c_now = i_rank[c][p_of[c]] if c in p_of else worst
            p_now = j_rank[c_of[p]][p] if p in c_of else worst
            if i_rank[c][p] < c_now and j_rank[c][p] < p_now:
                out.append((c, p))
    return out


def stable_matchings(i_rank, j_rank, n_calls, n_puts) -> list[frozenset]:
    return [
        m for m in all_maximum_matchings(n_calls, n_puts)
        if not blocking_pairs(i_rank, j_rank, m, n_calls, n_puts)
    ]


def resimulate_rejections(items):
    """Drop adverse items in decreasing |gap| (then larger L, then id) until W > 0.

    ``items``: list of (id, gap: Decimal, weight: Decimal, adverse: bool).
    Returns the list of rejected ids.
    """
    keep = list(items)
    rejected = []
    adverse = sorted((x for x in items if x[3]), key=lambda x: (-abs(x[1]), -x[2], x[0]))
    for cand in [None] + adverse:
        if cand is not None:
            keep.remove(cand)
            rejected.append(cand[0])
        w = weight_equation([(g, wt) for _, g, wt, _ in keep])
        if w is None or w > 0:
            return rejected
    return rejected
