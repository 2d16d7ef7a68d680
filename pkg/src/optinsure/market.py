"""Secondary market for insurance contracts.

Prices are supplied by the caller.  The insurer never takes either side of
a trade; it collects a fee from each side, so its P&L from this venue is
the fee total and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Mapping

from .contracts import ContractError, InsuranceContract, Transfer, UnknownContract
from .ledger import INSURER, Ledger, Reason
from .money import Money
from .terms import InsuranceTerms


class NotHolder(ContractError):
    pass


class ContractNotActive(ContractError):
    pass


class AfterExpiry(ContractError):
    pass


@dataclass(frozen=True)
class TransferOrder:
    contract_id: str
    seller: str
    buyer: str
    price_per_share: Money
    time: datetime


@dataclass(frozen=True)
class TransferResult:
    contract_id: str
    seller: str
    buyer: str
    notional: Money
    buyer_fee: Money
    seller_fee: Money

    @property
    def insurer_income(self) -> Money:
        return self.buyer_fee + self.seller_fee


def transfer_fee_per_share(price_per_share: Money, terms: InsuranceTerms) -> Money:
    return price_per_share.scale(terms.fee_per_side)


def execute_transfer(
    order: TransferOrder, contract: InsuranceContract, terms: InsuranceTerms, ledger: Ledger
) -> TransferResult:
    """Move a whole contract to the buyer and book price and fees."""
    if order.price_per_share.units < 0:
        raise ValueError("transfer price must be >= 0")
    if order.seller == order.buyer:
        raise ValueError("seller and buyer must differ")
    if contract.status.terminal:
        raise ContractNotActive(f"contract {contract.id} is {contract.status.value}")
    if contract.holder != order.seller:
        raise NotHolder(f"{order.seller} does not hold {contract.id} (holder: {contract.holder})")
    if order.time.date() >= contract.expiry:
        raise AfterExpiry(f"contract {contract.id} expires {contract.expiry}; trade at {order.time} refused")

    shares = contract.shares
    fee = transfer_fee_per_share(order.price_per_share, terms) * shares
    notional = order.price_per_share * shares
    memo = contract.id
    ledger.record(order.time, order.buyer, order.seller, notional, Reason.TRANSFER_PRICE, memo)
    ledger.record(order.time, order.buyer, INSURER, fee, Reason.TRANSFER_FEE, memo)
    ledger.record(order.time, order.seller, INSURER, fee, Reason.TRANSFER_FEE, memo)

    contract.transfers.append(Transfer(order.time, order.seller, order.buyer, order.price_per_share))
    contract.holder = order.buyer
    return TransferResult(contract.id, order.seller, order.buyer, notional, fee, fee)


def holder_of(contracts: Mapping[str, InsuranceContract], contract_id: str) -> str:
    try:
        return contracts[contract_id].holder
    except KeyError:
        raise UnknownContract(contract_id) from None
