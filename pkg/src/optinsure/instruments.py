"""Vanilla option modelling: moneyness, intrinsic payoff and Black-Scholes quotes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum

from .money import ZERO, Money, Rate, to_decimal

DAYS_PER_YEAR = 365


class OptionKind(str, Enum):
    CALL = "call"
    PUT = "put"

    @classmethod
    def parse(cls, text: str | OptionKind) -> OptionKind:
        if isinstance(text, OptionKind):
            return text
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"option kind must be 'call' or 'put', got {text!r}") from None


class Moneyness(str, Enum):
    ITM = "ITM"
    ATM = "ATM"
    OTM = "OTM"


@dataclass(frozen=True)
class OptionSpec:
    symbol: str
    kind: OptionKind
    strike: Money
    expiry: date

    def __post_init__(self) -> None:
        if self.strike.units <= 0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if not isinstance(self.expiry, date) or isinstance(self.expiry, datetime):
            raise TypeError("expiry must be a calendar date")

    def describe(self) -> str:
        return f"{self.symbol} {self.expiry.isoformat()} {self.strike} {self.kind.value.title()}"


@dataclass
class OptionPosition:
    """A long option position held by one investor.

    ``claimed_shares`` counts shares already used as evidence for a
    reimbursement, so one option cannot back two claims.
    """

    id: str
    owner: str
    spec: OptionSpec
    shares: int
    premium_paid_per_share: Money
    open_time: datetime
    exercised: bool = False
    closed: bool = False
    claimed_shares: int = field(default=0)

    def __post_init__(self) -> None:
        if self.shares < 1:
            raise ValueError(f"position {self.id}: shares must be >= 1")
        if self.premium_paid_per_share.units < 0:
            raise ValueError(f"position {self.id}: premium must be >= 0")

    @property
    def kind(self) -> OptionKind:
        return self.spec.kind

    @property
    def strike(self) -> Money:
        return self.spec.strike

    @property
    def is_open(self) -> bool:
        return not (self.exercised or self.closed)


@dataclass(frozen=True)
class PricingParams:
    spot: Money
    strike: Money
    days_to_expiry: int
    rate: Rate = 0
    dividend_yield: Rate = 0
    volatility: Rate = 0

    def __post_init__(self) -> None:
        if self.spot.units <= 0:
            raise ValueError("spot must be positive")
        if self.strike.units <= 0:
            raise ValueError("strike must be positive")
        if self.days_to_expiry < 0:
            raise ValueError("days_to_expiry must be >= 0")
        if to_decimal(self.volatility) < 0:
            raise ValueError("volatility must be >= 0")

    @property
    def year_fraction(self) -> float:
        return self.days_to_expiry / DAYS_PER_YEAR


def moneyness(spec: OptionSpec, spot: Money) -> Moneyness:
    if spot.units < 0:
        raise ValueError("spot must be >= 0")
    if spot == spec.strike:
        return Moneyness.ATM
    spot_above = spot > spec.strike
    if spec.kind is OptionKind.CALL:
        return Moneyness.ITM if spot_above else Moneyness.OTM
    return Moneyness.OTM if spot_above else Moneyness.ITM


def exercise_payoff(spec: OptionSpec, spot: Money) -> Money:
    """Intrinsic value per share at ``spot``."""
    if spot.units < 0:
        raise ValueError("spot must be >= 0")
    if spec.kind is OptionKind.CALL:
        diff = spot - spec.strike
    else:
        diff = spec.strike - spot
    return diff if diff.units > 0 else ZERO


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def black_scholes_value(p: PricingParams, kind: OptionKind) -> float:
    """Unrounded European Black-Scholes value per share (ACT/365 year fraction)."""
    s = float(p.spot)
    k = float(p.strike)
    r = float(to_decimal(p.rate))
    q = float(to_decimal(p.dividend_yield))
    sigma = float(to_decimal(p.volatility))
    t = p.year_fraction

    if t == 0.0:
        intrinsic = s - k if kind is OptionKind.CALL else k - s
        return max(intrinsic, 0.0)

    fwd_s = s * math.exp(-q * t)
    disc_k = k * math.exp(-r * t)
    if sigma == 0.0:
        # deterministic limit: discounted forward intrinsic value
        intrinsic = fwd_s - disc_k if kind is OptionKind.CALL else disc_k - fwd_s
        return max(intrinsic, 0.0)

    vol_t = sigma * math.sqrt(t)
    d1 = (math.log(s / k) + (r - q + 0.5 * sigma * sigma) * t) / vol_t
    d2 = d1 - vol_t
    if kind is OptionKind.CALL:
        return fwd_s * norm_cdf(d1) - disc_k * norm_cdf(d2)
    return disc_k * norm_cdf(-d2) - fwd_s * norm_cdf(-d1)


def black_scholes_price(p: PricingParams, kind: OptionKind) -> Money:
    """Black-Scholes quote per share, rounded half-up to 1e-4."""
    return Money.of(black_scholes_value(p, OptionKind.parse(kind)))


def parity_residual(p: PricingParams) -> float:
    """|C - P - (S e^{-qT} - K e^{-rT})| on unrounded values."""
    t = p.year_fraction
    r = float(to_decimal(p.rate))
    q = float(to_decimal(p.dividend_yield))
    call = black_scholes_value(p, OptionKind.CALL)
    put = black_scholes_value(p, OptionKind.PUT)
    if t == 0.0:
        forward = float(p.spot) - float(p.strike)
    else:
        forward = float(p.spot) * math.exp(-q * t) - float(p.strike) * math.exp(-r * t)
    return abs(call - put - forward)
