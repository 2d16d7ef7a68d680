#!/usr/bin/env python3
"""Replay the three bundled scenarios and print the headline figures."""

from optinsure.ledger import INSURER, insurer_expected_value
from optinsure.money import Money
from optinsure.simulation import ScenarioScript, run_scenario


def main() -> None:
    outcomes = []
    for spot in ("555", "455"):
        rep = run_scenario(ScenarioScript.bundled("example1"), terminal_spot=Money.of(spot))
        print(rep.render())
        outcomes.append(("0.5", rep.pnl[INSURER]))
    print(f"example1 expected insurer P&L per share: {insurer_expected_value(outcomes, shares=100)}\n")

    print(run_scenario(ScenarioScript.bundled("example2")).render())
    print(run_scenario(ScenarioScript.bundled("example3")).render())


if __name__ == "__main__":
    main()
