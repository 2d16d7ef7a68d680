"""Pairing long calls with long puts.

Preferences come from the strike gap ``K_put - K_call``: the wider the
positive gap, the more of the spot range leaves the insurer paying nobody,
so a larger gap is always preferred.  Calls propose in rounds, each put
keeps the best call it has seen, and the process stops once every call is
held or has run out of puts.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Iterable, Sequence

from .instruments import OptionKind, OptionPosition
from .money import Money


class MatchingError(ValueError):
    pass


class EmptyPool(MatchingError):
    """One side of the pool has nothing to match."""


class Scenario(str, Enum):
    EQUAL_STRIKE = "EqualStrike"
    PUT_ABOVE = "PutAbove"
    CALL_ABOVE = "CallAbove"


def classify_scenario(call_strike: Money, put_strike: Money) -> Scenario:
    if call_strike < put_strike:
        return Scenario.PUT_ABOVE
    if call_strike > put_strike:
        return Scenario.CALL_ABOVE
    return Scenario.EQUAL_STRIKE


@dataclass(frozen=True)
class MatchPair:
    call: OptionPosition
    put: OptionPosition

    @property
    def gap(self) -> Money:
        return self.put.strike - self.call.strike

    @property
    def scenario(self) -> Scenario:
        return classify_scenario(self.call.strike, self.put.strike)

    @property
    def id(self) -> str:
        return f"{self.call.id}/{self.put.id}"

    @property
    def covered_shares(self) -> int:
        return min(self.call.shares, self.put.shares)


@dataclass
class CandidatePool:
    calls: list[OptionPosition]
    puts: list[OptionPosition]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        keys = set()
        for pos, kind in [(c, OptionKind.CALL) for c in self.calls] + [
            (p, OptionKind.PUT) for p in self.puts
        ]:
            if pos.kind is not kind:
                raise MatchingError(f"position {pos.id} is a {pos.kind.value}, expected {kind.value}")
            if pos.id in seen:
                raise MatchingError(f"position {pos.id} appears twice in the pool")
            if not pos.is_open:
                raise MatchingError(f"position {pos.id} is exercised or closed")
            seen.add(pos.id)
            keys.add((pos.spec.symbol, pos.spec.expiry))
        if len(keys) > 1:
            listing = ", ".join(f"{s} {e.isoformat()}" for s, e in sorted(keys))
            raise MatchingError(f"pool mixes symbols/expiries: {listing}")

    @classmethod
    def from_positions(cls, positions: Iterable[OptionPosition]) -> CandidatePool:
        positions = list(positions)
        return cls(
            calls=[p for p in positions if p.kind is OptionKind.CALL],
            puts=[p for p in positions if p.kind is OptionKind.PUT],
        )


def partition_pools(positions: Iterable[OptionPosition]) -> dict[tuple[str, date], CandidatePool]:
    """Group positions into one pool per (symbol, expiry), in first-seen order."""
    groups: dict[tuple[str, date], list[OptionPosition]] = defaultdict(list)
    for p in positions:
        groups[(p.spec.symbol, p.spec.expiry)].append(p)
    return {key: CandidatePool.from_positions(group) for key, group in groups.items()}


def _preference_key(gap: Money, other: OptionPosition) -> tuple:
    # gap desc, then larger premium, earlier submission, lexicographic id
    return (-gap.units, -other.premium_paid_per_share.units, other.open_time, other.id)


@dataclass
class RankingMatrix:
    """Mutual ranks ``(i, j)`` for every ``(call, put)``; 1 is most preferred.

    ``i`` ranks the put within the call's row and ``j`` ranks the call
    within the put's column.
    """

    calls: list[OptionPosition]
    puts: list[OptionPosition]
    i: list[list[int]]
    j: list[list[int]]

    def entry(self, call_id: str, put_id: str) -> tuple[int, int]:
        ci = self._call_index(call_id)
        pi = self._put_index(put_id)
        return self.i[ci][pi], self.j[ci][pi]

    def column(self, put_id: str) -> dict[str, int]:
        pi = self._put_index(put_id)
        return {c.id: self.j[ci][pi] for ci, c in enumerate(self.calls)}

    def row(self, call_id: str) -> dict[str, int]:
        ci = self._call_index(call_id)
        return {p.id: self.i[ci][pi] for pi, p in enumerate(self.puts)}

    def row_order(self, ci: int) -> list[int]:
        """Put indices in the call's preference order."""
        return sorted(range(len(self.puts)), key=lambda pi: self.i[ci][pi])

    def _call_index(self, call_id: str) -> int:
        for idx, c in enumerate(self.calls):
            if c.id == call_id:
                return idx
        raise KeyError(call_id)

    def _put_index(self, put_id: str) -> int:
        for idx, p in enumerate(self.puts):
            if p.id == put_id:
                return idx
        raise KeyError(put_id)

    def to_dict(self) -> dict:
        return {
            "calls": [c.id for c in self.calls],
            "puts": [p.id for p in self.puts],
            "entries": [
                [[self.i[ci][pi], self.j[ci][pi]] for pi in range(len(self.puts))]
                for ci in range(len(self.calls))
            ],
        }


def build_ranking_matrix(pool: CandidatePool) -> RankingMatrix:
    if not pool.calls or not pool.puts:
        raise EmptyPool("ranking matrix needs at least one call and one put")
    calls, puts = list(pool.calls), list(pool.puts)
    n_c, n_p = len(calls), len(puts)
    i = [[0] * n_p for _ in range(n_c)]
    j = [[0] * n_p for _ in range(n_c)]

    for ci, c in enumerate(calls):
        order = sorted(range(n_p), key=lambda pi: _preference_key(puts[pi].strike - c.strike, puts[pi]))
        for rank, pi in enumerate(order, start=1):
            i[ci][pi] = rank
    for pi, p in enumerate(puts):
        order = sorted(range(n_c), key=lambda ci: _preference_key(p.strike - calls[ci].strike, calls[ci]))
        for rank, ci in enumerate(order, start=1):
            j[ci][pi] = rank
    return RankingMatrix(calls=calls, puts=puts, i=i, j=j)


@dataclass
class MatchingResult:
    pairs: list[MatchPair]
    unmatched_calls: list[OptionPosition] = field(default_factory=list)
    unmatched_puts: list[OptionPosition] = field(default_factory=list)
    proposals: int = 0
    rounds: int = 0

    @property
    def residue(self) -> list[OptionPosition]:
        return self.unmatched_calls + self.unmatched_puts


def deferred_acceptance(m: RankingMatrix) -> MatchingResult:
    n_c, n_p = len(m.calls), len(m.puts)
    prefs = [m.row_order(ci) for ci in range(n_c)]
    next_choice = [0] * n_c
    held_by: list[int | None] = [None] * n_p  # put index -> call index
    free = list(range(n_c))
    proposals = 0
    rounds = 0

    while True:
        proposers = [ci for ci in free if next_choice[ci] < n_p]
        if not proposers:
            break
        rounds += 1
        offers: dict[int, list[int]] = defaultdict(list)
        for ci in proposers:
            pi = prefs[ci][next_choice[ci]]
            next_choice[ci] += 1
            proposals += 1
            offers[pi].append(ci)
        proposing = set(proposers)
        # calls that ran out of puts stay free but never propose again
        free = [ci for ci in free if ci not in proposing]
        for pi in sorted(offers):
            candidates = offers[pi] + ([held_by[pi]] if held_by[pi] is not None else [])
            best = min(candidates, key=lambda ci: m.j[ci][pi])
            held_by[pi] = best
            free.extend(ci for ci in candidates if ci != best)
        free.sort()

    pairs = [
        MatchPair(call=m.calls[ci], put=m.puts[pi])
        for ci in range(n_c)
        for pi in range(n_p)
        if held_by[pi] == ci
    ]
    matched_puts = {pi for pi in range(n_p) if held_by[pi] is not None}
    matched_calls = {held_by[pi] for pi in matched_puts}
    return MatchingResult(
        pairs=pairs,
        unmatched_calls=[c for ci, c in enumerate(m.calls) if ci not in matched_calls],
        unmatched_puts=[p for pi, p in enumerate(m.puts) if pi not in matched_puts],
        proposals=proposals,
        rounds=rounds,
    )


def match_pool(pool: CandidatePool) -> tuple[RankingMatrix, MatchingResult]:
    matrix = build_ranking_matrix(pool)
    return matrix, deferred_acceptance(matrix)


def is_stable(m: RankingMatrix, pairs: Sequence[MatchPair]) -> bool:
    """No call/put pair that both strictly prefer each other to their partners.

    An unmatched agent prefers any partner to being alone.
    """
    call_idx = {c.id: ci for ci, c in enumerate(m.calls)}
    put_idx = {p.id: pi for pi, p in enumerate(m.puts)}
    partner_of_call = {call_idx[p.call.id]: put_idx[p.put.id] for p in pairs}
    partner_of_put = {pi: ci for ci, pi in partner_of_call.items()}
    worst = max(len(m.calls), len(m.puts)) + 1
    for ci in range(len(m.calls)):
        for pi in range(len(m.puts)):
            if partner_of_call.get(ci) == pi:
                continue
            cur_p = partner_of_call.get(ci)
            cur_c = partner_of_put.get(pi)
            call_rank_now = m.i[ci][cur_p] if cur_p is not None else worst
            put_rank_now = m.j[cur_c][pi] if cur_c is not None else worst
            if m.i[ci][pi] < call_rank_now and m.j[ci][pi] < put_rank_now:
                return False
    return True
