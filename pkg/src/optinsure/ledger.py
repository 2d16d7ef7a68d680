"""Double-entry cash-flow ledger and per-entity P&L."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .money import Money

INSURER = "insurer"
EXCHANGE = "exchange"


class Reason(str, Enum):
    OPTION_PREMIUM = "OptionPremium"
    INSURANCE_PREMIUM = "InsurancePremium"
    REIMBURSEMENT = "Reimbursement"
    SERVICE_CHARGE = "ServiceCharge"
    TRANSFER_PRICE = "TransferPrice"
    TRANSFER_FEE = "TransferFee"
    EXERCISE_PAYOFF = "ExercisePayoff"
    # stock legs of hedged portfolios; settled against the exchange sink
    STOCK_TRADE = "StockTrade"


class InvalidDistribution(ValueError):
    pass


@dataclass(frozen=True)
class CashFlowEntry:
    """``debtor`` pays ``amount`` to ``creditor``."""

    time: datetime
    debtor: str
    creditor: str
    amount: Money
    reason: Reason
    memo: str = ""

    def __post_init__(self) -> None:
        if self.amount.units <= 0:
            raise ValueError(f"cash flow amount must be positive, got {self.amount}")
        if self.debtor == self.creditor:
            raise ValueError(f"debtor and creditor are both {self.debtor!r}")

    def to_dict(self) -> dict[str, str]:
        return {
            "time": self.time.isoformat(),
            "debtor": self.debtor,
            "creditor": self.creditor,
            "amount": str(self.amount),
            "reason": self.reason.value,
            "memo": self.memo,
        }


def _in_window(t: datetime, start: datetime | None, end: datetime | None) -> bool:
    return (start is None or t >= start) and (end is None or t <= end)


def entity_pnl(
    entity: str,
    entries: Iterable[CashFlowEntry],
    start: datetime | None = None,
    end: datetime | None = None,
    reasons: Iterable[Reason] | None = None,
) -> Money:
    """Credits minus debits for ``entity`` over the inclusive window."""
    wanted = set(reasons) if reasons is not None else None
    total = 0
    for e in entries:
        if not _in_window(e.time, start, end):
            continue
        if wanted is not None and e.reason not in wanted:
            continue
        if e.creditor == entity:
            total += e.amount.units
        if e.debtor == entity:
            total -= e.amount.units
    return Money(total)


class Ledger:
    """Append-only list of cash flows with running balances."""

    def __init__(self) -> None:
        self._entries: list[CashFlowEntry] = []
        self._balances: dict[str, int] = defaultdict(int)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def entries(self) -> Sequence[CashFlowEntry]:
        return tuple(self._entries)

    def record(
        self,
        time: datetime,
        debtor: str,
        creditor: str,
        amount: Money,
        reason: Reason,
        memo: str = "",
    ) -> CashFlowEntry | None:
        """Append a flow; zero amounts are skipped and return None."""
        if amount.units == 0:
            return None
        if amount.units < 0:
            raise ValueError(f"negative cash flow {amount} ({reason.value})")
        if self._entries and time < self._entries[-1].time:
            raise ValueError(
                f"ledger entries must be time-ordered: {time.isoformat()} "
                f"precedes {self._entries[-1].time.isoformat()}"
            )
        entry = CashFlowEntry(time, debtor, creditor, amount, reason, memo)
        self._entries.append(entry)
        self._balances[debtor] -= amount.units
        self._balances[creditor] += amount.units
        return entry

    def balance(self, entity: str) -> Money:
        return Money(self._balances.get(entity, 0))

    def entities(self) -> list[str]:
        return sorted(self._balances)

    def pnl_by_entity(self) -> dict[str, Money]:
        return {name: Money(self._balances[name]) for name in self.entities()}

    def net_total(self) -> Money:
        """Sum of every entity's P&L; zero for a balanced book."""
        return Money(sum(self._balances.values()))

    def pnl(self, entity: str, start=None, end=None, reasons=None) -> Money:
        return entity_pnl(entity, self._entries, start, end, reasons)

    def entries_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=["time", "debtor", "creditor", "amount", "reason", "memo"], lineterminator="\n"
        )
        writer.writeheader()
        for e in self._entries:
            writer.writerow(e.to_dict())
        return buf.getvalue()

    def pnl_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["entity", "pnl"])
        for name, pnl in self.pnl_by_entity().items():
            writer.writerow([name, str(pnl)])
        return buf.getvalue()


def _as_fraction(p) -> Fraction:
    if isinstance(p, float):
        return Fraction(repr(p))
    return Fraction(str(p)) if not isinstance(p, (int, Fraction)) else Fraction(p)


def insurer_expected_value(
    outcomes: Iterable[tuple[object, Money]], shares: int = 1
) -> Money:
    """Probability-weighted mean of insurer P&L, optionally per share.

    Probabilities may be Fractions, Decimals, decimal strings or floats and
    must sum to one (floats within 1e-12).
    """
    pairs = [(_as_fraction(p), m) for p, m in outcomes]
    if not pairs:
        raise InvalidDistribution("no outcomes")
    if any(p < 0 for p, _ in pairs):
        raise InvalidDistribution("negative probability")
    total_p = sum(p for p, _ in pairs)
    if abs(total_p - 1) > Fraction(1, 10**12):
        raise InvalidDistribution(f"probabilities sum to {float(total_p)}, not 1")
    if shares < 1:
        raise ValueError("shares must be >= 1")
    mean_units = sum(p * m.units for p, m in pairs) / total_p
    return Money.of(mean_units / shares / 10_000)

