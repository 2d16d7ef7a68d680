"""The insurer's book: one ordered command stream over all mutable state.

Every mutation (opening positions, matching, proposals, transfers,
settlement) goes through :meth:`InsuranceBook.submit`, which applies the
command and then appends it to an event log.  Payloads hold only JSON
primitives, so replaying the log through a fresh book rebuilds the same
positions, contracts and ledger exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import Any, Iterable, Iterator

from .contracts import (
    ContractError,
    ContractProposal,
    ContractStatus,
    InsuranceContract,
    PositionRegistry,
    ProposalError,
    SettlementOutcome,
    SideState,
    UnknownContract,
    WrongDate,
    finalize,
    issue,
    release,
    settle,
)
from .instruments import Moneyness, OptionKind, OptionPosition, OptionSpec, exercise_payoff, moneyness
from .ledger import EXCHANGE, INSURER, Ledger, Reason
from .market import TransferOrder, TransferResult, execute_transfer
from .matching import MatchPair, partition_pools
from .money import Money
from .terms import InsuranceTerms
from .verification import MatchReport, match_and_verify

SCHEMA_VERSION = 1


class CommandError(ContractError):
    pass


def parse_time(value: str | datetime) -> datetime:
    if isinstance(value, datetime):
        return value
    return datetime.fromisoformat(value)


def parse_date(value: str | date) -> date:
    if isinstance(value, date) and not isinstance(value, datetime):
        return value
    return date.fromisoformat(str(value))


@dataclass(frozen=True)
class Event:
    seq: int
    command: str
    time: str | None
    payload: dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"seq": self.seq, "command": self.command, "time": self.time, "payload": self.payload},
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> Event:
        raw = json.loads(line)
        return cls(raw["seq"], raw["command"], raw["time"], raw["payload"])


class EventLog:
    """Append-only event list, optionally mirrored to a JSON-lines file."""

    def __init__(self, path: str | os.PathLike | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._events: list[Event] = []
        if self.path is not None and self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                self._events = [Event.from_json(line) for line in fh if line.strip()]

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def append(self, command: str, time: str | None, payload: dict[str, Any]) -> Event:
        event = Event(len(self._events) + 1, command, time, payload)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(event.to_json() + "\n")
        self._events.append(event)
        return event

    def dumps(self) -> str:
        return "".join(e.to_json() + "\n" for e in self._events)


class InsuranceBook:
    def __init__(self, terms: InsuranceTerms | None = None, log: EventLog | None = None) -> None:
        self.log = log if log is not None else EventLog()
        if len(self.log):
            raise CommandError("use InsuranceBook.replay() to load an existing log")
        self.terms = terms or InsuranceTerms()
        self.registry = PositionRegistry()
        self.contracts: dict[str, InsuranceContract] = {}
        self.proposals: dict[str, ContractProposal] = {}
        self.ledger = Ledger()
        self.waiting: list[str] = []
        self.match_reports: list[MatchReport] = []
        self.settlements: list[SettlementOutcome] = []
        self.transfers: list[TransferResult] = []
        self._last_time: datetime | None = None
        self.log.append("configure", None, {"schema_version": SCHEMA_VERSION, "terms": self.terms.to_dict()})

    # -- replay ---------------------------------------------------------

    @classmethod
    def replay(cls, events: Iterable[Event], log: EventLog | None = None) -> InsuranceBook:
        """Rebuild a book from events; new events go to ``log`` if given."""
        events = list(events)
        if not events or events[0].command != "configure":
            raise CommandError("event log must start with a configure event")
        terms = InsuranceTerms.from_dict(events[0].payload.get("terms"))
        book = cls.__new__(cls)
        fresh = EventLog()
        cls.__init__(book, terms, fresh)
        for ev in events[1:]:
            book.submit(ev.command, ev.time, ev.payload)
        if log is not None:
            # adopt the persistent log so later commands keep appending to it
            book.log = log
        return book

    @classmethod
    def open(cls, path: str | os.PathLike, terms: InsuranceTerms | None = None) -> InsuranceBook:
        """Load the book persisted at ``path``, creating it when missing."""
        log = EventLog(path)
        if len(log):
            return cls.replay(list(log), log=log)
        return cls(terms, log)

    # -- command stream -------------------------------------------------

    def submit(self, command: str, time: str | datetime, payload: dict[str, Any]) -> Any:
        handler = getattr(self, f"_cmd_{command}", None)
        if handler is None:
            raise CommandError(f"unknown command {command!r}")
        when = parse_time(time)
        if self._last_time is not None and when < self._last_time:
            raise CommandError(
                f"{command} at {when.isoformat()} precedes the previous command at {self._last_time.isoformat()}"
            )
        result = handler(when, **payload)
        self._last_time = when
        self.log.append(command, when.isoformat(), payload)
        return result

    def open_position(
        self,
        id: str,
        owner: str,
        symbol: str,
        kind: OptionKind | str,
        strike: Money | str,
        expiry: date | str,
        shares: int,
        premium: Money | str,
        time: datetime | str,
    ) -> OptionPosition:
        return self.submit(
            "open_position",
            time,
            {
                "id": id,
                "owner": owner,
                "symbol": symbol,
                "kind": OptionKind.parse(kind).value,
                "strike": str(Money.of(strike)),
                "expiry": parse_date(expiry).isoformat(),
                "shares": int(shares),
                "premium": str(Money.of(premium)),
            },
        )

    def request_insurance(self, position: str, time: datetime | str) -> None:
        return self.submit("request_insurance", time, {"position": position})

    def run_matching(self, time: datetime | str) -> list[MatchReport]:
        return self.submit("match", time, {})

    def propose(self, call: str, put: str, time: datetime | str) -> ContractProposal:
        return self.submit("propose", time, {"call": call, "put": put})

    def accept(self, position: str, time: datetime | str):
        return self.submit("accept", time, {"position": position})

    def reject(self, position: str, time: datetime | str) -> ContractProposal:
        return self.submit("reject", time, {"position": position})

    def transfer(
        self, contract: str, seller: str, buyer: str, price: Money | str, time: datetime | str
    ) -> TransferResult:
        return self.submit(
            "transfer",
            time,
            {"contract": contract, "seller": seller, "buyer": buyer, "price": str(Money.of(price))},
        )

    def close_option(self, position: str, price: Money | str, time: datetime | str) -> None:
        return self.submit("close_option", time, {"position": position, "price": str(Money.of(price))})

    def exercise_option(self, position: str, spot: Money | str, time: datetime | str) -> Money:
        return self.submit("exercise_option", time, {"position": position, "spot": str(Money.of(spot))})

    def stock_trade(
        self, owner: str, symbol: str, shares: int, price: Money | str, time: datetime | str
    ) -> None:
        return self.submit(
            "stock_trade",
            time,
            {"owner": owner, "symbol": symbol, "shares": int(shares), "price": str(Money.of(price))},
        )

    def settle_contract(self, contract: str, spot: Money | str, time: datetime | str) -> SettlementOutcome:
        return self.submit("settle", time, {"contract": contract, "spot": str(Money.of(spot))})

    def settle_expiry(
        self,
        symbol: str,
        expiry: date | str,
        spot: Money | str,
        time: datetime | str,
        exercise_itm: bool = True,
    ) -> list[SettlementOutcome]:
        return self.submit(
            "settle_expiry",
            time,
            {
                "symbol": symbol,
                "expiry": parse_date(expiry).isoformat(),
                "spot": str(Money.of(spot)),
                "exercise_itm": bool(exercise_itm),
            },
        )

    # -- handlers -------------------------------------------------------

    def _cmd_open_position(self, time, id, owner, symbol, kind, strike, expiry, shares, premium):
        if owner in (INSURER, EXCHANGE):
            raise CommandError(f"{owner!r} is a reserved entity name")
        spec = OptionSpec(symbol, OptionKind.parse(kind), Money.of(strike), parse_date(expiry))
        if time.date() > spec.expiry:
            raise CommandError(f"cannot open {id}: {spec.describe()} already expired")
        pos = OptionPosition(id, owner, spec, int(shares), Money.of(premium), time)
        self.registry.add(pos)
        self.ledger.record(time, owner, EXCHANGE, pos.premium_paid_per_share * pos.shares,
                           Reason.OPTION_PREMIUM, f"buy {id}")
        return pos

    def _cmd_request_insurance(self, time, position):
        pos = self.registry.get(position)
        self.registry.examine(pos)
        if position in self.waiting:
            raise CommandError(f"position {position} is already waiting for a match")
        self.waiting.append(position)

    def _cmd_match(self, time):
        candidates = [self.registry.get(pid) for pid in self.waiting]
        reports = []
        still_waiting: list[str] = []
        for pool in partition_pools(candidates).values():
            report = match_and_verify(pool, self.terms)
            for pair in report.accepted:
                self._draft(pair)
            still_waiting.extend(p.id for p in report.waiting)
            reports.append(report)
        order = {pid: k for k, pid in enumerate(self.waiting)}
        self.waiting = sorted(still_waiting, key=order.__getitem__)
        self.match_reports.extend(reports)
        return reports

    def _draft(self, pair: MatchPair) -> ContractProposal:
        pid = f"PR-{len(self.proposals) + 1:04d}"
        proposal = issue(pair, self.registry, self.terms, pid)
        self.proposals[pid] = proposal
        return proposal

    def _cmd_propose(self, time, call, put):
        pair = MatchPair(self.registry.get(call), self.registry.get(put))
        if pair.call.kind is not OptionKind.CALL or pair.put.kind is not OptionKind.PUT:
            raise CommandError(f"propose expects a call then a put, got {call}, {put}")
        proposal = self._draft(pair)
        self.waiting = [pid for pid in self.waiting if pid not in (call, put)]
        return proposal

    def _pending_proposal(self, position: str) -> ContractProposal:
        self.registry.get(position)
        pid = self.registry.reserved_by.get(position)
        if pid is None:
            raise ProposalError(f"position {position} has no pending proposal")
        return self.proposals[pid]

    def _cmd_accept(self, time, position):
        proposal = self._pending_proposal(position)
        proposal.side_for(position).state = SideState.ACCEPTED
        if not proposal.accepted:
            return None
        pair = finalize(proposal, self.registry, time)
        for contract, side in zip(pair, proposal.sides):
            self.contracts[contract.id] = contract
            self.ledger.record(time, side.owner, INSURER, side.premium_per_share * side.shares,
                               Reason.INSURANCE_PREMIUM, contract.id)
        return pair

    def _cmd_reject(self, time, position):
        proposal = self._pending_proposal(position)
        proposal.side_for(position).state = SideState.REJECTED
        release(proposal, self.registry)
        for side in proposal.sides:
            if side.position_id not in self.waiting:
                self.waiting.append(side.position_id)
        return proposal

    def _cmd_transfer(self, time, contract, seller, buyer, price):
        if buyer in (INSURER, EXCHANGE):
            raise CommandError("the insurer and the exchange do not trade insurance contracts")
        order = TransferOrder(contract, seller, buyer, Money.of(price), time)
        result = execute_transfer(order, self.contract(contract), self.terms, self.ledger)
        self.transfers.append(result)
        return result

    def _open_position_for(self, position: str) -> OptionPosition:
        pos = self.registry.get(position)
        if not pos.is_open:
            raise CommandError(f"position {position} is already exercised or closed")
        return pos

    def _cmd_close_option(self, time, position, price):
        pos = self._open_position_for(position)
        if time.date() > pos.spec.expiry:
            raise CommandError(f"position {position} expired on {pos.spec.expiry}")
        pos.closed = True
        self._drop_waiting(position)
        self.ledger.record(time, EXCHANGE, pos.owner, Money.of(price) * pos.shares,
                           Reason.OPTION_PREMIUM, f"sell {position}")

    def _cmd_exercise_option(self, time, position, spot):
        pos = self._open_position_for(position)
        if time.date() > pos.spec.expiry:
            raise CommandError(f"position {position} expired on {pos.spec.expiry}")
        payoff = exercise_payoff(pos.spec, Money.of(spot))
        if not payoff:
            raise CommandError(f"position {position} is not in the money at {spot}")
        pos.exercised = True
        self._drop_waiting(position)
        amount = payoff * pos.shares
        self.ledger.record(time, EXCHANGE, pos.owner, amount, Reason.EXERCISE_PAYOFF, position)
        return amount

    def _cmd_stock_trade(self, time, owner, symbol, shares, price):
        amount = Money.of(price) * abs(int(shares))
        if shares > 0:
            self.ledger.record(time, owner, EXCHANGE, amount, Reason.STOCK_TRADE, f"buy {shares} {symbol}")
        elif shares < 0:
            self.ledger.record(time, EXCHANGE, owner, amount, Reason.STOCK_TRADE, f"sell {-shares} {symbol}")

    def _settle_one(self, contract: InsuranceContract, spot: Money, time: datetime) -> SettlementOutcome:
        outcome = settle(contract, spot, time.date(), self.registry)
        if outcome.gross:
            self.ledger.record(time, INSURER, outcome.holder, outcome.gross, Reason.REIMBURSEMENT, contract.id)
            self.ledger.record(time, outcome.holder, INSURER, outcome.service_charge,
                               Reason.SERVICE_CHARGE, contract.id)
        self.settlements.append(outcome)
        return outcome

    def _cmd_settle(self, time, contract, spot):
        return self._settle_one(self.contract(contract), Money.of(spot), time)

    def _cmd_settle_expiry(self, time, symbol, expiry, spot, exercise_itm=True):
        expiry_date = parse_date(expiry)
        if time.date() != expiry_date:
            raise WrongDate(f"expiry processing for {expiry_date} attempted on {time.date()}")
        spot_m = Money.of(spot)
        due = sorted(
            (c for c in self.contracts.values()
             if c.status is ContractStatus.ACTIVE
             and c.underlying.symbol == symbol and c.expiry == expiry_date),
            key=lambda c: c.id,
        )
        outcomes = [self._settle_one(c, spot_m, time) for c in due]
        for pos in list(self.registry):
            if pos.spec.symbol != symbol or pos.spec.expiry != expiry_date:
                continue
            self._drop_waiting(pos.id)
            if exercise_itm and pos.is_open and moneyness(pos.spec, spot_m) is Moneyness.ITM:
                self._cmd_exercise_option(time, pos.id, str(spot_m))
        return outcomes

    def _drop_waiting(self, position: str) -> None:
        if position in self.waiting:
            self.waiting.remove(position)

    # -- queries --------------------------------------------------------

    def contract(self, contract_id: str) -> InsuranceContract:
        try:
            return self.contracts[contract_id]
        except KeyError:
            raise UnknownContract(contract_id) from None

    def holder_of(self, contract_id: str) -> str:
        return self.contract(contract_id).holder

    def pnl(self) -> dict[str, Money]:
        return self.ledger.pnl_by_entity()

    def snapshot(self) -> dict[str, Any]:
        """Deterministic, JSON-ready view of the full state."""
        return {
            "terms": self.terms.to_dict(),
            "positions": [
                {
                    "id": p.id,
                    "owner": p.owner,
                    "spec": p.spec.describe(),
                    "shares": p.shares,
                    "premium": str(p.premium_paid_per_share),
                    "open_time": p.open_time.isoformat(),
                    "exercised": p.exercised,
                    "closed": p.closed,
                    "claimed_shares": p.claimed_shares,
                    "insured_by": self.registry.insured_by.get(p.id),
                    "reserved_by": self.registry.reserved_by.get(p.id),
                }
                for p in self.registry
            ],
            "proposals": [
                {
                    "id": pr.id,
                    "scenario": pr.scenario.value,
                    "gap": str(pr.gap),
                    "sides": [
                        {
                            "position": s.position_id,
                            "owner": s.owner,
                            "shares": s.shares,
                            "premium_per_share": str(s.premium_per_share),
                            "reimbursement_per_share": str(s.reimbursement_per_share),
                            "state": s.state.value,
                        }
                        for s in pr.sides
                    ],
                }
                for pr in self.proposals.values()
            ],
            "contracts": [c.to_dict() for c in self.contracts.values()],
            "waiting": list(self.waiting),
            "ledger": [e.to_dict() for e in self.ledger],
            "pnl": {k: str(v) for k, v in self.pnl().items()},
        }

