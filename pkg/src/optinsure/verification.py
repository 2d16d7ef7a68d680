"""Weighting a matching list and pruning adverse pairs until it is acceptable.

The weightage is

    W = (1 / D) * [ sum_m gap_m * R_m + sum_n gap_n * L_n ]

where ``gap = K_put - K_call``, ``R`` is the premium a favourable pair
brings in, ``L`` is the loss an adverse pair (call strike above put
strike) can cause, and ``D`` is the largest absolute gap in the list.
Because ``D > 0`` the sign of ``W`` is the sign of the bracketed sum, so
accept/reject decisions never depend on the normalisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Sequence

from .instruments import OptionPosition
from .matching import CandidatePool, MatchingResult, MatchPair, RankingMatrix, Scenario, match_pool
from .money import SCALE, ZERO, Money, Rate, to_decimal
from .terms import InsuranceTerms


def pair_premium_R(call_premium: Money, put_premium: Money, yardstick: Rate) -> Money:
    """Total insurance premium per share a matched pair pays."""
    return max(call_premium, put_premium).scale(yardstick)


def pair_exposure_L(
    call_premium: Money, put_premium: Money, yardstick: Rate, service_charge: Rate
) -> Money:
    """Loss figure per share for an adverse pair.

    Uses the larger premium only, net of the service charge; this is what
    reproduces the worked loss values (1.188, 1.881).
    """
    y = to_decimal(yardstick)
    sc = to_decimal(service_charge)
    return max(call_premium, put_premium).scale(y * (1 - sc))


@dataclass(frozen=True)
class WeightedMatch:
    pair: MatchPair
    collected_premium: Money = ZERO
    exposure: Money = ZERO

    def __post_init__(self) -> None:
        if self.collected_premium.units < 0 or self.exposure.units < 0:
            raise ValueError("R and L must be non-negative")
        if self.pair.scenario is Scenario.CALL_ABOVE and self.collected_premium:
            raise ValueError(f"{self.pair.id}: adverse pairs carry L, not R")
        if self.pair.scenario is not Scenario.CALL_ABOVE and self.exposure:
            raise ValueError(f"{self.pair.id}: favourable pairs carry R, not L")

    @property
    def gap(self) -> Money:
        return self.pair.gap

    @property
    def weight_factor(self) -> Money:
        if self.pair.scenario is Scenario.CALL_ABOVE:
            return self.exposure
        return self.collected_premium

    @property
    def term_units(self) -> int:
        """gap * (R or L) in units of 1e-8 currency squared."""
        return self.gap.units * self.weight_factor.units


def weigh(pair: MatchPair, terms: InsuranceTerms) -> WeightedMatch:
    """Attach R or L to a pair, scaled by the shares the pair covers."""
    c = pair.call.premium_paid_per_share
    p = pair.put.premium_paid_per_share
    shares = pair.covered_shares
    if pair.scenario is Scenario.CALL_ABOVE:
        loss = pair_exposure_L(c, p, terms.yardstick, terms.service_charge)
        return WeightedMatch(pair, exposure=loss * shares)
    return WeightedMatch(pair, collected_premium=pair_premium_R(c, p, terms.yardstick) * shares)


@dataclass(frozen=True)
class Weightage:
    value: Fraction
    normalizer: Money
    degenerate: bool = False

    @property
    def numerator_units(self) -> Fraction:
        return self.value * self.normalizer.units * SCALE

    def as_decimal(self, places: int = 6) -> Decimal:
        q = Decimal(1).scaleb(-places)
        return (Decimal(self.value.numerator) / Decimal(self.value.denominator)).quantize(q)

    def __float__(self) -> float:
        return float(self.value)


def weightage(matches: Iterable[WeightedMatch]) -> Weightage:
    matches = list(matches)
    d = max((abs(m.gap) for m in matches), default=ZERO)
    if d.units == 0:
        return Weightage(Fraction(0), ZERO, degenerate=True)
    numerator = sum(m.term_units for m in matches)
    # numerator is in 1e-8 units and D in 1e-4 units; W comes out in currency
    return Weightage(Fraction(numerator, d.units * SCALE), d)


@dataclass
class VerificationResult:
    weight: Weightage
    accepted: list[MatchPair]
    rejected: list[MatchPair]
    iterations: int
    history: list[Weightage] = field(default_factory=list)

    @property
    def W(self) -> Fraction:
        return self.weight.value

    @property
    def D(self) -> Money:
        return self.weight.normalizer

    @property
    def degenerate(self) -> bool:
        return self.weight.degenerate


def _rejection_key(m: WeightedMatch) -> tuple:
    return (-abs(m.gap).units, -m.exposure.units, m.pair.id)


def verify_and_modify(pairs: Sequence[MatchPair], terms: InsuranceTerms) -> VerificationResult:
    current = [weigh(p, terms) for p in pairs]
    rejected: list[MatchPair] = []
    history: list[Weightage] = []
    while True:
        w = weightage(current)
        history.append(w)
        if w.degenerate or w.value > 0:
            break
        adverse = [m for m in current if m.pair.scenario is Scenario.CALL_ABOVE]
        if not adverse:
            # W <= 0 with no adverse pair left means every remaining R is zero
            break
        worst = min(adverse, key=_rejection_key)
        current.remove(worst)
        rejected.append(worst.pair)
    return VerificationResult(
        weight=history[-1],
        accepted=[m.pair for m in current],
        rejected=rejected,
        iterations=len(history),
        history=history,
    )


@dataclass
class MatchReport:
    """Ranking matrix, primary matching and verification outcome for one pool."""

    symbol: str
    expiry: object
    matrix: RankingMatrix | None
    matching: MatchingResult | None
    verification: VerificationResult | None
    waiting: list[OptionPosition] = field(default_factory=list)

    @property
    def accepted(self) -> list[MatchPair]:
        return self.verification.accepted if self.verification else []

    def to_dict(self) -> dict:
        def pair_dict(p: MatchPair) -> dict:
            return {
                "id": p.id,
                "call": p.call.id,
                "put": p.put.id,
                "call_strike": str(p.call.strike),
                "put_strike": str(p.put.strike),
                "gap": str(p.gap),
                "scenario": p.scenario.value,
            }

        v = self.verification
        return {
            "symbol": self.symbol,
            "expiry": self.expiry.isoformat() if self.expiry else None,
            "ranking_matrix": self.matrix.to_dict() if self.matrix else None,
            "pairs": [pair_dict(p) for p in self.matching.pairs] if self.matching else [],
            "proposals_made": self.matching.proposals if self.matching else 0,
            "verification": None
            if v is None
            else {
                "iterations": [
                    {"W": str(w.as_decimal()), "D": str(w.normalizer), "degenerate": w.degenerate}
                    for w in v.history
                ],
                "W": str(v.weight.as_decimal()),
                "D": str(v.D),
                "degenerate": v.degenerate,
                "accepted": [p.id for p in v.accepted],
                "rejected": [p.id for p in v.rejected],
            },
            "waiting_list": [p.id for p in self.waiting],
        }


def match_and_verify(pool: CandidatePool, terms: InsuranceTerms) -> MatchReport:
    """Rank, match and verify one pool; rejected pairs re-enter as individuals."""
    members = pool.calls + pool.puts
    symbol = members[0].spec.symbol if members else ""
    expiry = members[0].spec.expiry if members else None
    if not pool.calls or not pool.puts:
        return MatchReport(symbol, expiry, None, None, None, waiting=list(members))
    matrix, matching = match_pool(pool)
    verification = verify_and_modify(matching.pairs, terms)
    waiting = list(matching.residue)
    for pair in verification.rejected:
        waiting.extend([pair.call, pair.put])
    order = {p.id: k for k, p in enumerate(members)}
    waiting.sort(key=lambda p: order[p.id])
    return MatchReport(symbol, expiry, matrix, matching, verification, waiting)
