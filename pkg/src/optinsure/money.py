"""Fixed-point money with four decimal places.

Amounts are stored as an integer count of 1e-4 currency units, so every
value that shows up in the examples ($742.5, $0.025, $2.3475) is exact.
Addition, subtraction and integer scaling never round.  Multiplying by a
fractional rate does, and always rounds half-up (away from zero) at the
fourth decimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Union

SCALE = 10_000
_QUANTUM = Decimal("0.0001")

Rate = Union[Decimal, Fraction, int, str]


def to_decimal(value: Rate | float) -> Decimal:
    """Coerce a rate or amount to Decimal without binary float artifacts."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, Fraction):
        return Decimal(value.numerator) / Decimal(value.denominator)
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


def _round_units(value: Decimal | Fraction) -> int:
    """Round a value expressed in 1e-4 units to an integer, half away from zero."""
    if isinstance(value, Fraction):
        sign = -1 if value < 0 else 1
        num, den = abs(value.numerator), value.denominator
        q, r = divmod(num, den)
        if 2 * r >= den:
            q += 1
        return sign * q
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True, order=True)
class Money:
    units: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.units, int) or isinstance(self.units, bool):
            raise TypeError(f"Money units must be int, got {type(self.units).__name__}")

    @classmethod
    def of(cls, value: Money | Rate | float) -> Money:
        """Build from a decimal string, int, Decimal or float, rounding half-up at 1e-4."""
        if isinstance(value, Money):
            return value
        if isinstance(value, Fraction):
            return cls(_round_units(value * SCALE))
        return cls(_round_units(to_decimal(value) * SCALE))

    @classmethod
    def zero(cls) -> Money:
        return cls(0)

    def to_decimal(self) -> Decimal:
        return (Decimal(self.units) / SCALE).quantize(_QUANTUM)

    def to_fraction(self) -> Fraction:
        return Fraction(self.units, SCALE)

    def __float__(self) -> float:
        return self.units / SCALE

    def __str__(self) -> str:
        # Shortest exact decimal form: 742.5, 0.025, 12
        text = format(self.to_decimal(), "f")
        if "." in text:
            text = text.rstrip("0").rstrip(".")
        return text if text != "-0" else "0"

    def __repr__(self) -> str:
        return f"Money('{self}')"

    def __add__(self, other: Money) -> Money:
        if not isinstance(other, Money):
            return NotImplemented
        return Money(self.units + other.units)

    def __radd__(self, other: int | Money) -> Money:
        # lets sum() start from 0
        if other == 0:
            return self
        return NotImplemented

    def __sub__(self, other: Money) -> Money:
        if not isinstance(other, Money):
            return NotImplemented
        return Money(self.units - other.units)

    def __neg__(self) -> Money:
        return Money(-self.units)

    def __abs__(self) -> Money:
        return Money(abs(self.units))

    def __mul__(self, count: int) -> Money:
        if isinstance(count, bool) or not isinstance(count, int):
            return NotImplemented
        return Money(self.units * count)

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return self.units != 0

    def scale(self, rate: Rate) -> Money:
        """Multiply by a fractional rate; rounds half-up at 1e-4."""
        if isinstance(rate, Fraction):
            return Money(_round_units(self.units * rate))
        return Money(_round_units(self.units * to_decimal(rate)))

    def split(self, parts: int = 2) -> tuple[Money, ...]:
        """Split into ``parts`` nearly equal amounts; leftover units go to the first."""
        base, rem = divmod(self.units, parts)
        return tuple(Money(base + (rem if i == 0 else 0)) for i in range(parts))


ZERO = Money(0)
