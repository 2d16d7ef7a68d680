#!/usr/bin/env python3
"""Black-Scholes quotes next to the printed premiums of the eight-investor pool."""

from optinsure.instruments import OptionKind, PricingParams, black_scholes_price, parity_residual
from optinsure.money import Money

PRINTED = [
    ("A", OptionKind.CALL, "60", "2.4"), ("B", OptionKind.CALL, "40", "11.7"),
    ("C", OptionKind.CALL, "35", "15.7"), ("D", OptionKind.CALL, "55", "3.8"),
    ("alpha", OptionKind.PUT, "50", "5.4"), ("beta", OptionKind.PUT, "40", "1.5"),
    ("gamma", OptionKind.PUT, "45", "3.1"), ("delta", OptionKind.PUT, "65", "16.2"),
]


def main() -> None:
    print(f"{'investor':<8} {'kind':<5} {'strike':>6} {'quote':>9} {'printed':>8} {'diff':>8} {'parity':>9}")
    for name, kind, strike, printed in PRINTED:
        p = PricingParams(Money.of("50"), Money.of(strike), 180, "0.01", "0", "0.40")
        quote = black_scholes_price(p, kind)
        diff = quote - Money.of(printed)
        print(f"{name:<8} {kind.value:<5} {strike:>6} {str(quote):>9} {printed:>8} {str(diff):>8} "
              f"{parity_residual(p):9.1e}")


if __name__ == "__main__":
    main()
