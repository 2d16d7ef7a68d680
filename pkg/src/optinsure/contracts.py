"""Insurance proposals, issued contracts and settlement at maturity.

Contracts are always issued in pairs (one for the call holder, one for
the put holder) but live independently afterwards: either can change
hands on the secondary market and each is settled against its own
holder's evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from typing import Iterator, NamedTuple

from .instruments import Moneyness, OptionKind, OptionPosition, OptionSpec, moneyness
from .matching import MatchPair, Scenario
from .money import ZERO, Money
from .terms import InsuranceTerms


class ContractError(Exception):
    pass


class DuplicateInsurance(ContractError):
    """The position already backs an active contract or a pending proposal."""


class ExpiryMismatch(ContractError):
    pass


class PositionExercised(ContractError):
    """The position was exercised or closed and can no longer be insured."""


class EvidenceMissing(ContractError):
    pass


class AlreadySettled(ContractError):
    pass


class WrongDate(ContractError):
    pass


class UnknownPosition(ContractError, KeyError):
    pass


class UnknownContract(ContractError, KeyError):
    pass


class ProposalError(ContractError):
    pass


class ContractStatus(str, Enum):
    ACTIVE = "Active"
    SETTLED_REIMBURSED = "Settled-Reimbursed"
    EXPIRED_WORTHLESS = "Expired-Worthless"
    TERMINATED = "Terminated"

    @property
    def terminal(self) -> bool:
        return self is not ContractStatus.ACTIVE


class SideState(str, Enum):
    PENDING = "Pending"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"


class PremiumSplit(NamedTuple):
    total: Money
    call_side: Money
    put_side: Money


def compute_premium_split(call_premium: Money, put_premium: Money, terms: InsuranceTerms) -> PremiumSplit:
    """Per-share premium for a pair: yardstick * max(C, P), split evenly.

    An odd 1e-4 unit goes to the call side.
    """
    if call_premium.units < 0 or put_premium.units < 0:
        raise ValueError("option premiums must be non-negative")
    total = max(call_premium, put_premium).scale(terms.yardstick)
    call_side, put_side = total.split(2)
    return PremiumSplit(total, call_side, put_side)


def gross_reimbursement(option_premium: Money, terms: InsuranceTerms) -> Money:
    return option_premium.scale(terms.yardstick)


def net_reimbursement(gross_per_share: Money, service_charge) -> Money:
    return gross_per_share.scale(1 - service_charge)


@dataclass
class ProposalSide:
    position_id: str
    owner: str
    spec: OptionSpec
    shares: int
    premium_per_share: Money
    reimbursement_per_share: Money
    state: SideState = SideState.PENDING

    def clause(self) -> str:
        trigger = "falls below" if self.spec.kind is OptionKind.CALL else "rises above"
        total = self.reimbursement_per_share * self.shares
        return (
            f"reimburse the holder of unexercised {self.spec.describe()} a total of {total} "
            f"({self.reimbursement_per_share} per share) if the spot {trigger} {self.spec.strike}"
        )


@dataclass
class ContractProposal:
    id: str
    call: ProposalSide
    put: ProposalSide
    scenario: Scenario
    gap: Money
    service_charge: object

    @property
    def expiry(self) -> date:
        return self.call.spec.expiry

    @property
    def sides(self) -> tuple[ProposalSide, ProposalSide]:
        return (self.call, self.put)

    def side_for(self, position_id: str) -> ProposalSide:
        for side in self.sides:
            if side.position_id == position_id:
                return side
        raise ProposalError(f"position {position_id} is not part of proposal {self.id}")

    @property
    def accepted(self) -> bool:
        return all(s.state is SideState.ACCEPTED for s in self.sides)

    @property
    def rejected(self) -> bool:
        return any(s.state is SideState.REJECTED for s in self.sides)


@dataclass
class Transfer:
    time: datetime
    seller: str
    buyer: str
    price_per_share: Money


@dataclass
class InsuranceContract:
    id: str
    underlying: OptionSpec
    shares: int
    premium_paid_per_share: Money
    gross_reimbursement_per_share: Money
    service_charge: object
    holder: str
    insured_position: str
    issued_at: datetime
    proposal_id: str = ""
    status: ContractStatus = ContractStatus.ACTIVE
    transfers: list[Transfer] = field(default_factory=list)

    @property
    def kind(self) -> OptionKind:
        return self.underlying.kind

    @property
    def expiry(self) -> date:
        return self.underlying.expiry

    @property
    def net_reimbursement_per_share(self) -> Money:
        return net_reimbursement(self.gross_reimbursement_per_share, self.service_charge)

    @property
    def max_payout(self) -> Money:
        return self.gross_reimbursement_per_share * self.shares

    def holder_at(self, when: datetime) -> str:
        holder = self.transfers[0].seller if self.transfers else self.holder
        for t in self.transfers:
            if t.time <= when:
                holder = t.buyer
        return holder

    def close(self, status: ContractStatus) -> None:
        if self.status.terminal:
            raise AlreadySettled(f"contract {self.id} is already {self.status.value}")
        if not status.terminal:
            raise ValueError("contracts can only move to a terminal state")
        self.status = status

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "underlying": self.underlying.describe(),
            "kind": self.kind.value,
            "strike": str(self.underlying.strike),
            "expiry": self.expiry.isoformat(),
            "shares": self.shares,
            "premium_paid_per_share": str(self.premium_paid_per_share),
            "gross_reimbursement_per_share": str(self.gross_reimbursement_per_share),
            "service_charge": str(self.service_charge),
            "holder": self.holder,
            "insured_position": self.insured_position,
            "status": self.status.value,
            "transfers": [
                [t.time.isoformat(), t.seller, t.buyer, str(t.price_per_share)] for t in self.transfers
            ],
        }


class PositionRegistry:
    """Open option positions plus which of them back a contract or proposal."""

    def __init__(self) -> None:
        self._positions: dict[str, OptionPosition] = {}
        self.insured_by: dict[str, str] = {}
        self.reserved_by: dict[str, str] = {}

    def __contains__(self, position_id: str) -> bool:
        return position_id in self._positions

    def __iter__(self) -> Iterator[OptionPosition]:
        return iter(self._positions.values())

    def add(self, position: OptionPosition) -> None:
        if position.id in self._positions:
            raise ContractError(f"position id {position.id} already registered")
        self._positions[position.id] = position

    def get(self, position_id: str) -> OptionPosition:
        try:
            return self._positions[position_id]
        except KeyError:
            raise UnknownPosition(position_id) from None

    def examine(self, position: OptionPosition) -> None:
        """Screen a position before it may enter matching or a proposal."""
        if position.id not in self._positions:
            raise UnknownPosition(position.id)
        if position.exercised:
            raise PositionExercised(f"position {position.id} has been exercised")
        if position.closed:
            raise PositionExercised(f"position {position.id} has been closed")
        if position.id in self.insured_by:
            raise DuplicateInsurance(
                f"position {position.id} already backs contract {self.insured_by[position.id]}"
            )
        if position.id in self.reserved_by:
            raise DuplicateInsurance(
                f"position {position.id} is already in proposal {self.reserved_by[position.id]}"
            )

    def find_evidence(self, holder: str, spec: OptionSpec, shares: int) -> list[tuple[OptionPosition, int]]:
        """Unclaimed open positions of ``holder`` matching ``spec`` covering ``shares``.

        Returns the (position, shares used) allocation in registration order
        without consuming anything.
        """
        needed = shares
        used: list[tuple[OptionPosition, int]] = []
        for pos in self._positions.values():
            if needed == 0:
                break
            if pos.owner != holder or pos.spec != spec or not pos.is_open:
                continue
            free = pos.shares - pos.claimed_shares
            if free <= 0:
                continue
            take = min(free, needed)
            used.append((pos, take))
            needed -= take
        if needed:
            raise EvidenceMissing(
                f"{holder} holds {shares - needed} of {shares} unexercised, unclaimed "
                f"{spec.describe()} required as evidence"
            )
        return used


def issue(pair: MatchPair, registry: PositionRegistry, terms: InsuranceTerms, proposal_id: str) -> ContractProposal:
    """Draft a proposal for a matched pair and reserve both positions.

    Contracts only come into force once both sides accept (see ``finalize``).
    """
    call, put = pair.call, pair.put
    for pos in (call, put):
        registry.examine(pos)
    if call.spec.expiry != put.spec.expiry or call.spec.symbol != put.spec.symbol:
        raise ExpiryMismatch(
            f"{call.id} expires {call.spec.expiry} on {call.spec.symbol}, "
            f"{put.id} expires {put.spec.expiry} on {put.spec.symbol}"
        )
    split = compute_premium_split(call.premium_paid_per_share, put.premium_paid_per_share, terms)
    shares = pair.covered_shares
    proposal = ContractProposal(
        id=proposal_id,
        call=ProposalSide(
            call.id, call.owner, call.spec, shares, split.call_side,
            gross_reimbursement(call.premium_paid_per_share, terms),
        ),
        put=ProposalSide(
            put.id, put.owner, put.spec, shares, split.put_side,
            gross_reimbursement(put.premium_paid_per_share, terms),
        ),
        scenario=pair.scenario,
        gap=pair.gap,
        service_charge=terms.service_charge,
    )
    registry.reserved_by[call.id] = proposal_id
    registry.reserved_by[put.id] = proposal_id
    return proposal


def release(proposal: ContractProposal, registry: PositionRegistry) -> None:
    for side in proposal.sides:
        registry.reserved_by.pop(side.position_id, None)


def contract_id_for(position_id: str) -> str:
    return f"INS-{position_id}"


def finalize(
    proposal: ContractProposal, registry: PositionRegistry, issued_at: datetime
) -> tuple[InsuranceContract, InsuranceContract]:
    """Turn a fully accepted proposal into two active contracts."""
    if not proposal.accepted:
        raise ProposalError(f"proposal {proposal.id} is not accepted by both sides")
    contracts = []
    for side in proposal.sides:
        cid = contract_id_for(side.position_id)
        contracts.append(
            InsuranceContract(
                id=cid,
                underlying=side.spec,
                shares=side.shares,
                premium_paid_per_share=side.premium_per_share,
                gross_reimbursement_per_share=side.reimbursement_per_share,
                service_charge=proposal.service_charge,
                holder=side.owner,
                insured_position=side.position_id,
                issued_at=issued_at,
                proposal_id=proposal.id,
            )
        )
        registry.reserved_by.pop(side.position_id, None)
        registry.insured_by[side.position_id] = cid
    return contracts[0], contracts[1]


@dataclass(frozen=True)
class SettlementOutcome:
    contract_id: str
    holder: str
    status: ContractStatus
    moneyness: Moneyness
    gross: Money = ZERO
    service_charge: Money = ZERO
    reason: str = ""
    evidence: tuple[tuple[str, int], ...] = ()

    @property
    def reimbursement(self) -> Money:
        """Amount actually paid to the holder, net of the service charge."""
        return self.gross - self.service_charge


def settle(
    contract: InsuranceContract, spot_at_maturity: Money, on_date: date, registry: PositionRegistry
) -> SettlementOutcome:
    """Decide a contract at maturity and consume the holder's evidence.

    Reimburses only when the insured kind is strictly OTM and the holder
    can show an unexercised, unclaimed matching position.  A missing proof
    terminates the contract and the insurer keeps the premium.
    """
    if contract.status.terminal:
        raise AlreadySettled(f"contract {contract.id} is already {contract.status.value}")
    if on_date != contract.expiry:
        raise WrongDate(f"contract {contract.id} settles on {contract.expiry}, not {on_date}")

    m = moneyness(contract.underlying, spot_at_maturity)
    if m is not Moneyness.OTM:
        contract.close(ContractStatus.EXPIRED_WORTHLESS)
        return SettlementOutcome(contract.id, contract.holder, contract.status, m, reason=m.value)

    try:
        evidence = registry.find_evidence(contract.holder, contract.underlying, contract.shares)
    except EvidenceMissing as exc:
        contract.close(ContractStatus.TERMINATED)
        return SettlementOutcome(
            contract.id, contract.holder, contract.status, m, reason=f"evidence missing: {exc}"
        )

    for pos, n in evidence:
        pos.claimed_shares += n
    gross = contract.gross_reimbursement_per_share * contract.shares
    net = contract.net_reimbursement_per_share * contract.shares
    contract.close(ContractStatus.SETTLED_REIMBURSED)
    return SettlementOutcome(
        contract.id,
        contract.holder,
        contract.status,
        m,
        gross=gross,
        service_charge=gross - net,
        reason="OTM with evidence",
        evidence=tuple((pos.id, n) for pos, n in evidence),
    )
