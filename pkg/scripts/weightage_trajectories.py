#!/usr/bin/env python3
"""How often W falls between verification rounds on random match lists.

Each rejection removes a negative term, so the bracketed sum always
grows.  W itself is that sum divided by the current largest |gap|, and
dropping the widest pair can shrink the divisor enough to push a still
negative sum further below zero.  This script counts those cases and
prints a few.
"""

import argparse
import random
from datetime import datetime

from optinsure.instruments import OptionKind, OptionPosition, OptionSpec
from optinsure.matching import CandidatePool, match_pool
from optinsure.money import Money
from optinsure.terms import InsuranceTerms
from optinsure.verification import verify_and_modify

STRIKES = ["35", "40", "45", "50", "55", "60", "65"]
PREMIUMS = ["0.5", "1.5", "2.4", "3.1", "5.4", "11.7", "16.2"]
EXPIRY = datetime(2013, 7, 1).date()


def random_pool(rng: random.Random) -> CandidatePool:
    def pos(pid, kind):
        spec = OptionSpec("XYZ", kind, Money.of(rng.choice(STRIKES)), EXPIRY)
        return OptionPosition(pid, pid, spec, 1, Money.of(rng.choice(PREMIUMS)), datetime(2013, 1, 2))

    calls = [pos(f"C{k}", OptionKind.CALL) for k in range(rng.randint(1, 5))]
    puts = [pos(f"P{k}", OptionKind.PUT) for k in range(rng.randint(1, 5))]
    return CandidatePool(calls, puts)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--show", type=int, default=3)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    terms = InsuranceTerms()
    multi_round = falls = 0
    shown = 0
    for _ in range(args.cases):
        _, result = match_pool(random_pool(rng))
        v = verify_and_modify(result.pairs, terms)
        if v.iterations < 2:
            continue
        multi_round += 1
        hist = v.history
        fell = any(not b.degenerate and b.value <= a.value for a, b in zip(hist, hist[1:]))
        falls += fell
        if fell and shown < args.show:
            shown += 1
            print("pairs:", ", ".join(f"{p.id}({p.gap}, {p.scenario.value})" for p in result.pairs))
            print("  W:", " -> ".join(str(h.as_decimal()) for h in hist))
            print("  D:", " -> ".join(str(h.normalizer) for h in hist))
            print("  rejected:", ", ".join(p.id for p in v.rejected))
    print(f"{args.cases} lists, {multi_round} needed more than one round, W fell in {falls}")


if __name__ == "__main__":
    main()
