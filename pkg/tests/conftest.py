from __future__ import annotations

from datetime import date, datetime

import pytest

from optinsure.instruments import OptionKind, OptionPosition, OptionSpec
from optinsure.money import Money
from optinsure.terms import InsuranceTerms

EXPIRY = date(2013, 7, 1)
T0 = datetime(2013, 1, 2, 10, 0)


def position(pid, kind, strike, premium="1", shares=1, owner=None, symbol="XYZ",
             expiry=EXPIRY, open_time=T0) -> OptionPosition:
    return OptionPosition(
        id=pid,
        owner=owner or pid,
        spec=OptionSpec(symbol, OptionKind.parse(kind), Money.of(strike), expiry),
        shares=shares,
        premium_paid_per_share=Money.of(premium),
        open_time=open_time,
    )


# strikes and premiums of the eight-investor worked example
EIGHT_CALLS = [("A", "60", "2.4"), ("B", "40", "11.7"), ("C", "35", "15.7"), ("D", "55", "3.8")]
EIGHT_PUTS = [("alpha", "50", "5.4"), ("beta", "40", "1.5"), ("gamma", "45", "3.1"), ("delta", "65", "16.2")]


@pytest.fixture
def eight_calls():
    return [position(i, "call", k, c) for i, k, c in EIGHT_CALLS]


@pytest.fixture
def eight_puts():
    return [position(i, "put", k, p) for i, k, p in EIGHT_PUTS]


@pytest.fixture
def terms():
    return InsuranceTerms()


# one PASS/FAIL line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
