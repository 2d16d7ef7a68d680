"""Scripted scenario replay and Monte Carlo risk profiles for the insurer."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from importlib import resources
from typing import Any, Sequence

import numpy as np

from .book import InsuranceBook, parse_time
from .contracts import compute_premium_split, gross_reimbursement, net_reimbursement
from .ledger import INSURER, Reason
from .matching import MatchPair, Scenario
from .money import SCALE, Money
from .terms import InsuranceTerms

TERMINAL = "$terminal"
BUNDLED = ("example1", "example2", "example3")
DEFAULT_RATE = 0.01


class ScenarioError(Exception):
    def __init__(self, index: int, event: "ScenarioEvent", cause: Exception) -> None:
        super().__init__(f"event {index} ({event.type} at {event.time.isoformat()}): {cause}")
        self.index = index
        self.event = event
        self.cause = cause


@dataclass(frozen=True)
class ScenarioEvent:
    time: datetime
    type: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class ScenarioScript:
    name: str
    events: list[ScenarioEvent]
    symbol: str = ""
    initial_spot: Money | None = None
    terminal_spot: Money | None = None
    terms: InsuranceTerms | None = None
    description: str = ""

    def __post_init__(self) -> None:
        for k in range(1, len(self.events)):
            if self.events[k].time < self.events[k - 1].time:
                raise ValueError(
                    f"event {k} ({self.events[k].type}) is earlier than event {k - 1}"
                )

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ScenarioScript:
        version = raw.get("schema_version", 1)
        if version != 1:
            raise ValueError(f"unsupported scenario schema_version {version}")
        events = []
        for k, ev in enumerate(raw.get("events", [])):
            ev = dict(ev)
            try:
                time = parse_time(ev.pop("time"))
                kind = ev.pop("type")
            except KeyError as exc:
                raise ValueError(f"event {k} is missing field {exc.args[0]!r}") from None
            events.append(ScenarioEvent(time, kind, ev))
        spot = raw.get("initial_spot")
        term = raw.get("terminal_spot")
        return cls(
            name=raw.get("name", "scenario"),
            events=events,
            symbol=raw.get("symbol", ""),
            initial_spot=Money.of(spot) if spot is not None else None,
            terminal_spot=Money.of(term) if term is not None else None,
            terms=InsuranceTerms.from_dict(raw["terms"]) if "terms" in raw else None,
            description=raw.get("description", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> ScenarioScript:
        return cls.from_dict(json.loads(text))

    @classmethod
    def bundled(cls, name: str) -> ScenarioScript:
        if name not in BUNDLED:
            raise KeyError(f"unknown bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
        text = resources.files("optinsure.scenarios").joinpath(f"{name}.json").read_text("utf-8")
        return cls.from_json(text)


@dataclass
class ScenarioReport:
    name: str
    book: InsuranceBook
    terminal_spot: Money | None

    @property
    def pnl(self) -> dict[str, Money]:
        return self.book.pnl()

    @property
    def insurer_fee_income(self) -> Money:
        return self.book.ledger.pnl(INSURER, reasons=[Reason.TRANSFER_FEE])

    def insurance_leg(self, entity: str) -> Money:
        """Entity P&L from its dealings with the insurer only."""
        return self.book.ledger.pnl(
            entity,
            reasons=[Reason.INSURANCE_PREMIUM, Reason.REIMBURSEMENT, Reason.SERVICE_CHARGE],
        )

    def to_dict(self) -> dict[str, Any]:
        snap = self.book.snapshot()
        return {
            "scenario": self.name,
            "terminal_spot": str(self.terminal_spot) if self.terminal_spot is not None else None,
            "pnl": snap["pnl"],
            "insurer_fee_income": str(self.insurer_fee_income),
            "net_total": str(self.book.ledger.net_total()),
            "contracts": snap["contracts"],
            "ledger": snap["ledger"],
            "match_reports": [r.to_dict() for r in self.book.match_reports],
            "settlements": [
                {
                    "contract": s.contract_id,
                    "holder": s.holder,
                    "status": s.status.value,
                    "moneyness": s.moneyness.value,
                    "reimbursement": str(s.reimbursement),
                    "reason": s.reason,
                }
                for s in self.book.settlements
            ],
        }

    def render(self) -> str:
        lines = [f"scenario {self.name}"]
        if self.terminal_spot is not None:
            lines.append(f"terminal spot {self.terminal_spot}")
        for s in self.book.settlements:
            lines.append(
                f"settle {s.contract_id:<14} holder={s.holder:<16} {s.status.value:<18} "
                f"paid={s.reimbursement}"
            )
        lines.append("entity P&L")
        for name, pnl in self.pnl.items():
            lines.append(f"  {name:<16} {pnl}")
        lines.append(f"insurer transfer-fee income {self.insurer_fee_income}")
        lines.append(f"net across all entities {self.book.ledger.net_total()}")
        return "\n".join(lines) + "\n"


def _substitute(value: Any, terminal: Money | None) -> Any:
    if value == TERMINAL:
        if terminal is None:
            raise ValueError("script references $terminal but no terminal spot was given")
        return str(terminal)
    return value


def run_scenario(
    script: ScenarioScript,
    terms: InsuranceTerms | None = None,
    terminal_spot: Money | None = None,
    book: InsuranceBook | None = None,
) -> ScenarioReport:
    """Replay a script through a fresh book and return the full report."""
    terminal = terminal_spot if terminal_spot is not None else script.terminal_spot
    book = book or InsuranceBook(terms or script.terms or InsuranceTerms())
    for k, ev in enumerate(script.events):
        params = {key: _substitute(v, terminal) for key, v in ev.params.items()}
        try:
            if ev.type == "settle_expiry":
                params.setdefault("symbol", script.symbol)
                params.setdefault("spot", str(terminal) if terminal is not None else None)
                if params["spot"] is None:
                    raise ValueError("settle_expiry needs a spot or a script terminal_spot")
            if ev.type == "open_position" and "symbol" not in params:
                params["symbol"] = script.symbol
            if ev.type == "stock_trade" and "symbol" not in params:
                params["symbol"] = script.symbol
            _dispatch(book, ev.type, ev.time, params)
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(k, ev, exc) from exc
    return ScenarioReport(script.name, book, terminal)


def _dispatch(book: InsuranceBook, kind: str, time: datetime, params: dict[str, Any]) -> Any:
    methods = {
        "open_position": book.open_position,
        "request_insurance": book.request_insurance,
        "match": book.run_matching,
        "propose": book.propose,
        "accept": book.accept,
        "reject": book.reject,
        "transfer": book.transfer,
        "close_option": book.close_option,
        "exercise_option": book.exercise_option,
        "stock_trade": book.stock_trade,
        "settle": book.settle_contract,
        "settle_expiry": book.settle_expiry,
    }
    if kind not in methods:
        raise ValueError(f"unknown event type {kind!r}")
    return methods[kind](**params, time=time)


# -- Monte Carlo --------------------------------------------------------


@dataclass(frozen=True)
class PathParams:
    S0: Money
    drift: float = DEFAULT_RATE
    volatility: float = 0.4
    horizon_days: int = 180
    steps: int = 1
    path_count: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.path_count < 1:
            raise ValueError("path_count must be >= 1")
        if self.volatility < 0:
            raise ValueError("volatility must be >= 0")
        if self.S0.units <= 0:
            raise ValueError("S0 must be positive")

    @property
    def horizon_years(self) -> float:
        return self.horizon_days / 365


def path_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def gbm_paths(p: PathParams, indices: Sequence[int] | None = None) -> np.ndarray:
    """Exact log-Euler GBM paths, shape ``(len(indices), steps + 1)``.

    Path ``i`` draws from its own generator seeded with ``(seed, i)``, so
    any subset of indices reproduces the same rows as the full run.
    """
    idx = range(p.path_count) if indices is None else indices
    dt = p.horizon_years / p.steps
    drift = (p.drift - 0.5 * p.volatility**2) * dt
    diffusion = p.volatility * math.sqrt(dt)
    shocks = np.empty((len(idx), p.steps))
    for row, i in enumerate(idx):
        shocks[row] = path_rng(p.seed, i).standard_normal(p.steps)
    log_steps = drift + diffusion * shocks
    log_paths = np.concatenate([np.zeros((len(idx), 1)), np.cumsum(log_steps, axis=1)], axis=1)
    return float(p.S0) * np.exp(log_paths)


def spot_units(spots: np.ndarray) -> np.ndarray:
    """Float spots to integer Money units, half-up."""
    return np.floor(np.asarray(spots, dtype=float) * SCALE + 0.5).astype(np.int64)


@dataclass(frozen=True)
class PairExposure:
    """Per-pair cash figures for the insurer, in Money units for covered shares."""

    pair: MatchPair
    premium: int
    call_payout: int
    put_payout: int

    @classmethod
    def of(cls, pair: MatchPair, terms: InsuranceTerms) -> PairExposure:
        c = pair.call.premium_paid_per_share
        p = pair.put.premium_paid_per_share
        n = pair.covered_shares
        split = compute_premium_split(c, p, terms)
        call_net = net_reimbursement(gross_reimbursement(c, terms), terms.service_charge)
        put_net = net_reimbursement(gross_reimbursement(p, terms), terms.service_charge)
        return cls(pair, (split.call_side + split.put_side).units * n, call_net.units * n, put_net.units * n)

    def pnl(self, spots: np.ndarray) -> np.ndarray:
        """Insurer P&L at each terminal spot, assuming every OTM holder claims."""
        call_otm = spots < self.pair.call.strike.units
        put_otm = spots > self.pair.put.strike.units
        return self.premium - self.call_payout * call_otm - self.put_payout * put_otm


@dataclass
class ClassSummary:
    scenario: str
    pairs: int
    paths: int
    min: Money
    max: Money
    mean: Money
    histogram: tuple[list[int], list[float]]


@dataclass
class RiskProfile:
    terminal_spots: np.ndarray
    by_class: dict[str, np.ndarray]
    summaries: dict[str, ClassSummary]

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "pairs", "paths", "min", "max", "mean"])
        for s in self.summaries.values():
            w.writerow([s.scenario, s.pairs, s.paths, str(s.min), str(s.max), str(s.mean)])
        return buf.getvalue()

    def series_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.by_class)
        w.writerow(["path", "terminal_spot"] + names)
        for k, s in enumerate(self.terminal_spots):
            w.writerow([k, str(Money(int(s)))] + [str(Money(int(self.by_class[n][k]))) for n in names])
        return buf.getvalue()


def _summarize(name: str, pairs: int, values: np.ndarray, bins: int = 20) -> ClassSummary:
    # integer sums are exact and independent of path order
    total = int(values.sum(dtype=np.int64))
    mean = Money.of(Fraction(total, len(values) * SCALE))
    counts, edges = np.histogram(values / SCALE, bins=bins)
    return ClassSummary(
        name, pairs, len(values), Money(int(values.min())), Money(int(values.max())), mean,
        (counts.tolist(), edges.tolist()),
    )


def insurer_risk_profile(
    pairs: Sequence[MatchPair], terms: InsuranceTerms, terminal_spots: np.ndarray
) -> RiskProfile:
    """Distribution of insurer P&L per scenario class across terminal spots.

    ``terminal_spots`` may be floats (currency) or the int64 Money units
    returned by :func:`spot_units`.
    """
    spots = np.asarray(terminal_spots)
    if spots.dtype.kind == "f":
        spots = spot_units(spots)
    by_class: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    total = np.zeros(len(spots), dtype=np.int64)
    for scenario in Scenario:
        members = [PairExposure.of(p, terms) for p in pairs if p.scenario is scenario]
        if not members:
            continue
        acc = np.zeros(len(spots), dtype=np.int64)
        for m in members:
            acc += m.pnl(spots)
        by_class[scenario.value] = acc
        counts[scenario.value] = len(members)
        total += acc
    by_class["all"] = total
    counts["all"] = len(pairs)
    summaries = {name: _summarize(name, counts[name], vals) for name, vals in by_class.items()}
    return RiskProfile(spots, by_class, summaries)


def strike_grid(pairs: Sequence[MatchPair], step: Money = Money.of("0.01")) -> np.ndarray:
    """Terminal spots from 50% below the lowest strike to 50% above the highest."""
    strikes = [p.call.strike.units for p in pairs] + [p.put.strike.units for p in pairs]
    lo = min(strikes) // 2
    hi = max(strikes) * 3 // 2
    return np.arange(lo, hi + 1, step.units, dtype=np.int64)
