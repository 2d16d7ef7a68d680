"""Versioned JSON input files; money is always a decimal string."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any

from .book import parse_date
from .instruments import OptionKind, OptionPosition, OptionSpec, PricingParams
from .money import Money

SCHEMA_VERSION = 1
# submission time for positions that carry neither open_time nor a file as_of
UNSTAMPED = datetime(1970, 1, 1)


class InputError(ValueError):
    pass


def load_json(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{path}: top level must be an object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InputError(f"{path}: field 'schema_version' must be {SCHEMA_VERSION}, got {version!r}")
    return raw


def _field(raw: dict, name: str, where: str, default: Any = ...) -> Any:
    if name in raw:
        return raw[name]
    if default is not ...:
        return default
    raise InputError(f"{where}: missing field '{name}'")


def _money(raw: dict, name: str, where: str, default: Any = ...) -> Money:
    value = _field(raw, name, where, default)
    if isinstance(value, float):
        raise InputError(f"{where}: field '{name}' must be a decimal string, not a float")
    try:
        return Money.of(value)
    except (InvalidOperation, TypeError, ValueError):
        raise InputError(f"{where}: field '{name}' is not a decimal amount: {value!r}") from None


def _decimal(raw: dict, name: str, where: str, default: Any = ...) -> Decimal:
    value = _field(raw, name, where, default)
    try:
        return Decimal(str(value))
    except InvalidOperation:
        raise InputError(f"{where}: field '{name}' is not a decimal: {value!r}") from None


def _int(raw: dict, name: str, where: str, default: Any = ...) -> int:
    value = _field(raw, name, where, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: field '{name}' must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class PriceRequest:
    base: PricingParams
    strikes: list[Money]

    def params_for(self, strike: Money) -> PricingParams:
        b = self.base
        return PricingParams(b.spot, strike, b.days_to_expiry, b.rate, b.dividend_yield, b.volatility)


def load_price_request(path: str | Path) -> PriceRequest:
    raw = load_json(path)
    where = str(path)
    strikes_raw = _field(raw, "strikes", where, None)
    if strikes_raw is None:
        strikes = [_money(raw, "strike", where)]
    else:
        strikes = [_money({"strike": s}, "strike", f"{where}: strikes[{k}]") for k, s in enumerate(strikes_raw)]
    try:
        base = PricingParams(
            spot=_money(raw, "spot", where),
            strike=strikes[0],
            days_to_expiry=_int(raw, "days_to_expiry", where),
            rate=_decimal(raw, "rate", where, "0"),
            dividend_yield=_decimal(raw, "dividend_yield", where, "0"),
            volatility=_decimal(raw, "volatility", where),
        )
        for s in strikes:
            if s.units <= 0:
                raise ValueError(f"strike {s} must be positive")
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{where}: {exc}") from None
    return PriceRequest(base, strikes)


def parse_position(raw: dict, where: str, symbol: str | None, expiry, as_of: datetime | None) -> OptionPosition:
    sym = _field(raw, "symbol", where, symbol)
    if sym is None:
        raise InputError(f"{where}: missing field 'symbol'")
    exp = _field(raw, "expiry", where, expiry)
    if exp is None:
        raise InputError(f"{where}: missing field 'expiry'")
    try:
        kind = OptionKind.parse(_field(raw, "kind", where))
        exp_date = parse_date(exp)
        opened = raw.get("open_time")
        open_time = datetime.fromisoformat(opened) if opened else as_of
        if open_time is None:
            open_time = UNSTAMPED
        spec = OptionSpec(sym, kind, _money(raw, "strike", where), exp_date)
        return OptionPosition(
            id=str(_field(raw, "id", where)),
            owner=str(_field(raw, "owner", where, raw.get("id"))),
            spec=spec,
            shares=_int(raw, "shares", where, 1),
            premium_paid_per_share=_money(raw, "premium", where),
            open_time=open_time,
        )
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def load_positions(path: str | Path) -> tuple[list[OptionPosition], datetime | None]:
    """Read a positions file; returns the positions and its ``as_of`` time."""
    raw = load_json(path)
    where = str(path)
    as_of_raw = raw.get("as_of")
    try:
        as_of = datetime.fromisoformat(as_of_raw) if as_of_raw else None
    except ValueError:
        raise InputError(f"{where}: field 'as_of' is not an ISO timestamp: {as_of_raw!r}") from None
    items = _field(raw, "positions", where)
    if not isinstance(items, list):
        raise InputError(f"{where}: field 'positions' must be a list")
    positions = [
        parse_position(item, f"{where}: positions[{k}]", raw.get("symbol"), raw.get("expiry"), as_of)
        for k, item in enumerate(items)
    ]
    seen: set[str] = set()
    for p in positions:
        if p.id in seen:
            raise InputError(f"{where}: duplicate position id {p.id!r}")
        seen.add(p.id)
    return positions, as_of
