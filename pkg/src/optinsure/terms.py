from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import Decimal

from .money import Rate, to_decimal


@dataclass(frozen=True)
class InsuranceTerms:
    """Pricing knobs shared by issuance, settlement and the secondary market.

    ``yardstick`` scales both the pair's premium and each side's
    reimbursement; ``service_charge`` is withheld from reimbursements;
    ``transfer_fee`` is charged on secondary-market trade value and split
    evenly between buyer and seller.
    """

    yardstick: Decimal = Decimal("0.5")
    service_charge: Decimal = Decimal("0.01")
    transfer_fee: Decimal = Decimal("0.02")

    def __post_init__(self) -> None:
        for name in ("yardstick", "service_charge", "transfer_fee"):
            object.__setattr__(self, name, to_decimal(getattr(self, name)))
        if not 0 < self.yardstick < 1:
            raise ValueError(f"yardstick must be in (0, 1), got {self.yardstick}")
        if not 0 <= self.service_charge < 1:
            raise ValueError(f"service_charge must be in [0, 1), got {self.service_charge}")
        if not 0 <= self.transfer_fee < 1:
            raise ValueError(f"transfer_fee must be in [0, 1), got {self.transfer_fee}")

    @property
    def fee_per_side(self) -> Decimal:
        return self.transfer_fee / 2

    def with_overrides(
        self,
        yardstick: Rate | None = None,
        service_charge: Rate | None = None,
        transfer_fee: Rate | None = None,
    ) -> InsuranceTerms:
        changes = {
            k: to_decimal(v)
            for k, v in {
                "yardstick": yardstick,
                "service_charge": service_charge,
                "transfer_fee": transfer_fee,
            }.items()
            if v is not None
        }
        return replace(self, **changes)

    def to_dict(self) -> dict[str, str]:
        return {
            "yardstick": str(self.yardstick),
            "service_charge": str(self.service_charge),
            "transfer_fee": str(self.transfer_fee),
        }

    @classmethod
    def from_dict(cls, data: dict | None) -> InsuranceTerms:
        data = data or {}
        return cls().with_overrides(
            data.get("yardstick"), data.get("service_charge"), data.get("transfer_fee")
        )
