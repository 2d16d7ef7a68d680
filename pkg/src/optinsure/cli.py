"""``optinsure`` command line.

All data goes to stdout and all diagnostics to stderr.  Exit status is 0
on success, 1 on any input or engine error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, time
from pathlib import Path
from typing import Sequence

from .book import InsuranceBook, parse_date
from .contracts import ContractError
from .files import UNSTAMPED, InputError, load_json, load_positions, load_price_request
from .instruments import OptionKind, black_scholes_price, parity_residual
from .matching import MatchingError, partition_pools
from .money import Money
from .simulation import (
    BUNDLED,
    PathParams,
    ScenarioError,
    ScenarioScript,
    gbm_paths,
    insurer_risk_profile,
    run_scenario,
)
from .terms import InsuranceTerms
from .verification import match_and_verify

DATA_DIR_ENV = "OPTINSURE_DATA_DIR"
LOG_NAME = "events.jsonl"


@dataclass
class EngineConfig:
    terms: InsuranceTerms = field(default_factory=InsuranceTerms)
    day_count: str = "ACT365"
    seed: int = 0
    data_dir: Path = Path("optinsure-data")

    @classmethod
    def load(cls, path: str | None) -> EngineConfig:
        if path is None:
            return cls()
        raw = load_json(path)
        day_count = raw.get("day_count", "ACT365")
        if day_count != "ACT365":
            raise InputError(f"{path}: field 'day_count' must be 'ACT365', got {day_count!r}")
        return cls(
            terms=InsuranceTerms.from_dict(raw.get("terms")),
            day_count=day_count,
            seed=int(raw.get("seed", 0)),
            data_dir=Path(raw.get("data_dir", "optinsure-data")),
        )


def _config(args: argparse.Namespace) -> EngineConfig:
    cfg = EngineConfig.load(args.config)
    try:
        cfg.terms = cfg.terms.with_overrides(args.yardstick, args.service_charge, args.transfer_fee)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.seed is not None:
        cfg.seed = args.seed
    if os.environ.get(DATA_DIR_ENV):
        cfg.data_dir = Path(os.environ[DATA_DIR_ENV])
    if args.data_dir is not None:
        cfg.data_dir = Path(args.data_dir)
    return cfg


def _terms_overridden(args: argparse.Namespace) -> bool:
    return any(v is not None for v in (args.yardstick, args.service_charge, args.transfer_fee))


def _open_book(args: argparse.Namespace, cfg: EngineConfig) -> InsuranceBook:
    path = cfg.data_dir / LOG_NAME
    book = InsuranceBook.open(path, cfg.terms)
    if _terms_overridden(args) and book.terms != cfg.terms:
        raise InputError(
            f"book {path} was created with terms {book.terms.to_dict()}; "
            "term flags cannot change an existing book"
        )
    return book


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- price ---------------------------------------------------------------


def cmd_price(args, cfg, out) -> int:
    req = load_price_request(args.params)
    b = req.base
    rows = []
    for strike in req.strikes:
        p = req.params_for(strike)
        rows.append(
            {
                "strike": str(strike),
                "call": str(black_scholes_price(p, OptionKind.CALL)),
                "put": str(black_scholes_price(p, OptionKind.PUT)),
                "parity_residual": f"{parity_residual(p):.1e}",
            }
        )
    if args.json:
        out.write(_dump({"spot": str(b.spot), "days_to_expiry": b.days_to_expiry, "quotes": rows}))
        return 0
    out.write(
        f"spot {b.spot}  days {b.days_to_expiry}  rate {b.rate}  "
        f"dividend_yield {b.dividend_yield}  volatility {b.volatility}\n"
    )
    out.write(f"{'strike':>10} {'call':>10} {'put':>10} {'parity':>10}\n")
    for r in rows:
        out.write(f"{r['strike']:>10} {r['call']:>10} {r['put']:>10} {r['parity_residual']:>10}\n")
    return 0


# -- match ---------------------------------------------------------------


def _render_report(rep) -> str:
    d = rep.to_dict()
    lines = [f"pool {d['symbol']} {d['expiry']}"]
    m = d["ranking_matrix"]
    if m is None:
        lines.append("  nothing to match: one side of the pool is empty")
    else:
        lines.append("  ranking matrix (i, j):")
        width = max(len(x) for x in m["puts"] + ["call"]) + 2
        lines.append("    " + "call".ljust(width) + "".join(p.rjust(width + 2) for p in m["puts"]))
        for cid, row in zip(m["calls"], m["entries"]):
            cells = "".join(f"({i},{j})".rjust(width + 2) for i, j in row)
            lines.append("    " + cid.ljust(width) + cells)
        lines.append("  pairs:")
        for p in d["pairs"]:
            lines.append(f"    {p['id']:<16} gap {p['gap']:>8}  {p['scenario']}")
        v = d["verification"]
        for k, it in enumerate(v["iterations"], start=1):
            flag = " (degenerate)" if it["degenerate"] else ""
            lines.append(f"  iteration {k}: W = {it['W']}  D = {it['D']}{flag}")
        lines.append("  accepted: " + (", ".join(v["accepted"]) or "-"))
        lines.append("  rejected: " + (", ".join(v["rejected"]) or "-"))
    lines.append("  waiting list: " + (", ".join(d["waiting_list"]) or "-"))
    return "\n".join(lines) + "\n"


def cmd_match(args, cfg, out) -> int:
    positions, _ = load_positions(args.positions)
    pools = partition_pools(positions)
    if len(pools) > 1:
        keys = ", ".join(f"{s} {e.isoformat()}" for s, e in pools)
        raise InputError(f"{args.positions}: positions mix symbols/expiries ({keys}); match one pool per file")
    reports = [match_and_verify(pool, cfg.terms) for pool in pools.values()]
    if args.json:
        out.write(_dump([r.to_dict() for r in reports]))
    else:
        for r in reports:
            out.write(_render_report(r))
    return 0


# -- book commands -------------------------------------------------------


def _when(value: str | None, fallback: datetime | None, what: str) -> datetime:
    if value is not None:
        return datetime.fromisoformat(value)
    if fallback is not None:
        return fallback
    raise InputError(f"{what}: give --time (ISO timestamp)")


def cmd_issue(args, cfg, out) -> int:
    book = _open_book(args, cfg)
    created = []
    if args.positions:
        positions, as_of = load_positions(args.positions)
        default = _when(args.time, as_of, "issue")
        stamped = [(p.open_time if p.open_time != UNSTAMPED else default, p) for p in positions]
        # the book only takes commands in time order
        stamped.sort(key=lambda tp: tp[0])
        for opened, p in stamped:
            book.open_position(p.id, p.owner, p.spec.symbol, p.kind, p.strike, p.spec.expiry,
                               p.shares, p.premium_paid_per_share, opened)
        when = max([default] + [t for t, _ in stamped])
        for _, p in stamped:
            book.request_insurance(p.id, when)
        for rep in book.run_matching(when):
            out.write(_render_report(rep))
        created = list(book.proposals.values())
    else:
        when = _when(args.time, None, "issue")
    for pid in args.accept or []:
        book.accept(pid, when)
    for pid in args.reject or []:
        book.reject(pid, when)
    if args.accept_all:
        for pr in created:
            for side in pr.sides:
                if book.registry.reserved_by.get(side.position_id) == pr.id:
                    book.accept(side.position_id, when)
    for pr in book.proposals.values():
        states = ", ".join(f"{s.position_id}={s.state.value}" for s in pr.sides)
        out.write(f"proposal {pr.id} {pr.scenario.value} gap {pr.gap}: {states}\n")
        for s in pr.sides:
            out.write(f"  {s.owner} pays {s.premium_per_share * s.shares}: {s.clause()}\n")
    for c in book.contracts.values():
        out.write(f"contract {c.id} holder {c.holder} {c.status.value}\n")
    return 0


def cmd_trade(args, cfg, out) -> int:
    book = _open_book(args, cfg)
    res = book.transfer(args.contract, args.seller, args.buyer, Money.of(args.price),
                        datetime.fromisoformat(args.time))
    out.write(
        f"{res.contract_id}: {res.seller} -> {res.buyer} notional {res.notional} "
        f"fees {res.buyer_fee} + {res.seller_fee}\n"
    )
    return 0


def cmd_settle(args, cfg, out) -> int:
    book = _open_book(args, cfg)
    expiry = parse_date(args.expiry)
    when = datetime.fromisoformat(args.time) if args.time else datetime.combine(expiry, time(16, 0))
    outcomes = book.settle_expiry(args.symbol, expiry, Money.of(args.spot), when,
                                  exercise_itm=not args.no_exercise)
    for s in outcomes:
        out.write(f"{s.contract_id} holder {s.holder} {s.status.value} {s.moneyness.value} "
                  f"reimbursed {s.reimbursement}\n")
    return 0


def cmd_report(args, cfg, out) -> int:
    book = _open_book(args, cfg)
    for c in book.contracts.values():
        out.write(f"contract {c.id:<16} {c.underlying.describe():<28} shares {c.shares:<6} "
                  f"holder {c.holder:<14} {c.status.value}\n")
    out.write("entity P&L\n")
    for name, pnl in book.pnl().items():
        out.write(f"  {name:<16} {pnl}\n")
    out.write(f"net {book.ledger.net_total()}\n")
    if args.csv_dir:
        d = Path(args.csv_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "ledger.csv").write_text(book.ledger.entries_csv(), encoding="utf-8")
        (d / "pnl.csv").write_text(book.ledger.pnl_csv(), encoding="utf-8")
    return 0


# -- replay / simulate ---------------------------------------------------


def cmd_replay(args, cfg, out) -> int:
    if args.script in BUNDLED:
        script = ScenarioScript.bundled(args.script)
    else:
        raw = load_json(args.script)
        try:
            script = ScenarioScript.from_dict(raw)
        except ValueError as exc:
            raise InputError(f"{args.script}: {exc}") from None
    terms = script.terms or cfg.terms
    if _terms_overridden(args):
        terms = terms.with_overrides(args.yardstick, args.service_charge, args.transfer_fee)
    terminal = Money.of(args.terminal) if args.terminal is not None else None
    report = run_scenario(script, terms=terms, terminal_spot=terminal)
    if args.json:
        out.write(_dump(report.to_dict()))
    else:
        out.write(report.render())
    if args.csv_dir:
        d = Path(args.csv_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "ledger.csv").write_text(report.book.ledger.entries_csv(), encoding="utf-8")
        (d / "pnl.csv").write_text(report.book.ledger.pnl_csv(), encoding="utf-8")
    if args.log:
        Path(args.log).write_text(report.book.log.dumps(), encoding="utf-8")
    return 0


def cmd_simulate(args, cfg, out) -> int:
    positions, _ = load_positions(args.pool)
    raw = load_json(args.pool)
    s0 = args.s0 if args.s0 is not None else raw.get("spot")
    if s0 is None:
        raise InputError(f"{args.pool}: no 'spot' field; pass --s0")
    params = PathParams(
        S0=Money.of(s0),
        drift=args.drift if args.drift is not None else args.rate,
        volatility=args.vol,
        horizon_days=args.days,
        steps=args.steps,
        path_count=args.paths,
        seed=cfg.seed,
    )
    accepted = []
    for pool in partition_pools(positions).values():
        accepted.extend(match_and_verify(pool, cfg.terms).accepted)
    paths = gbm_paths(params)
    profile = insurer_risk_profile(accepted, cfg.terms, paths[:, -1])
    out.write(profile.summary_csv())
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "summary.csv").write_text(profile.summary_csv(), encoding="utf-8")
        (d / "series.csv").write_text(profile.series_csv(), encoding="utf-8")
    return 0


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="EngineConfig JSON file")
    common.add_argument("--data-dir", help=f"book directory (overrides ${DATA_DIR_ENV})")
    common.add_argument("--yardstick")
    common.add_argument("--service-charge")
    common.add_argument("--transfer-fee")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="optinsure", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", parents=[common], help="Black-Scholes quotes per strike")
    p.add_argument("params")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("match", parents=[common], help="rank, match and verify a positions file")
    p.add_argument("positions")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("issue", parents=[common], help="submit positions and handle proposals in the book")
    p.add_argument("positions", nargs="?")
    p.add_argument("--time")
    p.add_argument("--accept", action="append", metavar="POSITION")
    p.add_argument("--reject", action="append", metavar="POSITION")
    p.add_argument("--accept-all", action="store_true")
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("trade", parents=[common], help="transfer a contract on the secondary market")
    p.add_argument("--contract", required=True)
    p.add_argument("--seller", required=True)
    p.add_argument("--buyer", required=True)
    p.add_argument("--price", required=True)
    p.add_argument("--time", required=True)
    p.set_defaults(func=cmd_trade)

    p = sub.add_parser("settle", parents=[common], help="expiry processing for one symbol/expiry")
    p.add_argument("--symbol", required=True)
    p.add_argument("--expiry", required=True)
    p.add_argument("--spot", required=True)
    p.add_argument("--time")
    p.add_argument("--no-exercise", action="store_true", help="do not auto-exercise ITM options")
    p.set_defaults(func=cmd_settle)

    p = sub.add_parser("report", parents=[common], help="contract states and P&L from the book")
    p.add_argument("--csv-dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", parents=[common], help="replay a bundled or custom scenario")
    p.add_argument("script", help=f"one of {', '.join(BUNDLED)} or a scenario JSON file")
    p.add_argument("--terminal", help="override the terminal spot")
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv-dir")
    p.add_argument("--log", help="write the replay's event log here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo insurer risk profile")
    p.add_argument("pool")
    p.add_argument("--s0")
    p.add_argument("--rate", type=float, default=0.01)
    p.add_argument("--drift", type=float, help="defaults to --rate")
    p.add_argument("--vol", type=float, default=0.4)
    p.add_argument("--days", type=int, default=180)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(args, cfg, out)
    except (InputError, ContractError, MatchingError, ScenarioError, ValueError, KeyError) as exc:
        err.write(f"optinsure {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
