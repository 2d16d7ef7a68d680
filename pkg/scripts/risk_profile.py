#!/usr/bin/env python3
"""Monte Carlo insurer P&L per scenario class for the bundled data pools.

Writes summary and per-path CSVs under ``--out`` (default ``results/``).
"""

import argparse
from pathlib import Path

from optinsure.files import load_json, load_positions
from optinsure.matching import partition_pools
from optinsure.money import Money
from optinsure.simulation import PathParams, gbm_paths, insurer_risk_profile
from optinsure.terms import InsuranceTerms
from optinsure.verification import match_and_verify

DATA = Path(__file__).resolve().parents[1] / "data"


def profile(pool_file: Path, vol: float, days: int, paths: int, seed: int, out: Path) -> None:
    terms = InsuranceTerms()
    positions, _ = load_positions(pool_file)
    accepted = []
    for pool in partition_pools(positions).values():
        accepted.extend(match_and_verify(pool, terms).accepted)
    s0 = Money.of(load_json(pool_file)["spot"])
    spots = gbm_paths(PathParams(s0, volatility=vol, horizon_days=days, path_count=paths, seed=seed))[:, -1]
    prof = insurer_risk_profile(accepted, terms, spots)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{pool_file.stem}_summary.csv").write_text(prof.summary_csv())
    (out / f"{pool_file.stem}_series.csv").write_text(prof.series_csv())
    print(f"# {pool_file.name}: {', '.join(p.id for p in accepted)}")
    print(prof.summary_csv())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--vol", type=float, default=0.4)
    ap.add_argument("--days", type=int, default=180)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    for name in ("eight_investor_pool.json", "equal_strike_pool.json"):
        profile(DATA / name, args.vol, args.days, args.paths, args.seed, args.out)


if __name__ == "__main__":
    main()
