from datetime import date, datetime

import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import position
from optinsure.contracts import (
    AlreadySettled,
    ContractStatus,
    DuplicateInsurance,
    ExpiryMismatch,
    PositionExercised,
    PositionRegistry,
    ProposalError,
    SideState,
    compute_premium_split,
    finalize,
    issue,
    release,
    settle,
    WrongDate,
)
from optinsure.instruments import Moneyness
from optinsure.matching import MatchPair, Scenario
from optinsure.money import Money
from optinsure.terms import InsuranceTerms

IKEA_EXPIRY = date(2013, 2, 15)
ISSUED = datetime(2013, 1, 2, 10, 15)


def ikea(pid, kind, premium, shares=100, strike="500", owner=None):
    return position(pid, kind, strike, premium, shares=shares, owner=owner, symbol="IKEA", expiry=IKEA_EXPIRY)


def insured_pair(call, put, terms, registry=None):
    registry = registry or PositionRegistry()
    for p in (call, put):
        if p.id not in registry:
            registry.add(p)
    proposal = issue(MatchPair(call, put), registry, terms, "PR-1")
    for side in proposal.sides:
        side.state = SideState.ACCEPTED
    return registry, proposal, finalize(proposal, registry, ISSUED)


def test_premium_split_example(terms):
    split = compute_premium_split(Money.of("24"), Money.of("15"), terms)
    assert split == (Money.of("12"), Money.of("6"), Money.of("6"))
    odd = compute_premium_split(Money.of("0.0006"), Money.of("0"), terms)
    assert odd.call_side == Money(2) and odd.put_side == Money(1)


@given(st.integers(0, 10**8), st.integers(0, 10**8),
       st.decimals(min_value="0.01", max_value="0.99", places=2))
def test_premium_split_conserves(c, p, y):
    terms = InsuranceTerms(yardstick=y)
    s = compute_premium_split(Money(c), Money(p), terms)
    assert s.call_side + s.put_side == s.total
    assert 0 <= s.call_side.units - s.put_side.units <= 1
    assert s.total == Money(max(c, p)).scale(y)


def test_issue_and_finalize(terms):
    reg, proposal, (cc, pc) = insured_pair(ikea("A-call", "call", "24"), ikea("B-put", "put", "15"), terms)
    assert proposal.scenario is Scenario.EQUAL_STRIKE
    assert cc.id == "INS-A-call" and pc.id == "INS-B-put"
    assert cc.gross_reimbursement_per_share == Money.of("12")
    assert pc.gross_reimbursement_per_share == Money.of("7.5")
    assert pc.net_reimbursement_per_share == Money.of("7.425")
    assert cc.premium_paid_per_share == pc.premium_paid_per_share == Money.of("6")
    assert cc.status is ContractStatus.ACTIVE
    assert "falls below 500" in proposal.call.clause()
    assert "rises above 500" in proposal.put.clause()
    with pytest.raises(DuplicateInsurance):
        reg.examine(reg.get("A-call"))


def test_finalize_needs_both_sides(terms):
    reg = PositionRegistry()
    call, put = ikea("A", "call", "24"), ikea("B", "put", "15")
    reg.add(call)
    reg.add(put)
    proposal = issue(MatchPair(call, put), reg, terms, "PR-1")
    proposal.call.state = SideState.ACCEPTED
    with pytest.raises(ProposalError):
        finalize(proposal, reg, ISSUED)
    with pytest.raises(DuplicateInsurance):
        issue(MatchPair(call, put), reg, terms, "PR-2")
    release(proposal, reg)
    issue(MatchPair(call, put), reg, terms, "PR-3")


def test_issue_screens_positions(terms):
    reg = PositionRegistry()
    call, put = ikea("A", "call", "24"), ikea("B", "put", "15")
    late = position("L", "put", "500", "15", symbol="IKEA", expiry=date(2013, 3, 15))
    for p in (call, put, late):
        reg.add(p)
    with pytest.raises(ExpiryMismatch):
        issue(MatchPair(call, late), reg, terms, "PR-1")
    put.exercised = True
    with pytest.raises(PositionExercised):
        issue(MatchPair(call, put), reg, terms, "PR-2")


@pytest.mark.parametrize(
    "spot, paid_call, paid_put",
    [("555", "0", "742.5"), ("455", "1188", "0"), ("500", "0", "0")],
)
def test_example_settlement(terms, spot, paid_call, paid_put):
    reg, proposal, (cc, pc) = insured_pair(ikea("A-call", "call", "24"), ikea("B-put", "put", "15"), terms)
    oc = settle(cc, Money.of(spot), IKEA_EXPIRY, reg)
    op = settle(pc, Money.of(spot), IKEA_EXPIRY, reg)
    assert oc.reimbursement == Money.of(paid_call)
    assert op.reimbursement == Money.of(paid_put)
    premium = (proposal.call.premium_per_share + proposal.put.premium_per_share) * 100
    insurer = premium - oc.reimbursement - op.reimbursement
    assert insurer == {"555": Money.of("457.5"), "455": Money.of("12"), "500": Money.of("1200")}[spot]
    if spot == "500":
        assert oc.moneyness is Moneyness.ATM and oc.status is ContractStatus.EXPIRED_WORTHLESS


def test_missing_evidence_terminates(terms):
    reg, _, (cc, pc) = insured_pair(ikea("A-call", "call", "24"), ikea("B-put", "put", "15"), terms)
    reg.get("B-put").closed = True
    out = settle(pc, Money.of("555"), IKEA_EXPIRY, reg)
    assert out.status is ContractStatus.TERMINATED
    assert out.reimbursement == Money.of("0")
    assert out.reason.startswith("evidence missing")


def test_evidence_is_consumed_once(terms):
    reg = PositionRegistry()
    _, _, (_, pc1) = insured_pair(ikea("C1", "call", "24"), ikea("P1", "put", "15", owner="H"), terms, reg)
    reg2_call, reg2_put = ikea("C2", "call", "24"), ikea("P2", "put", "15")
    _, _, (_, pc2) = insured_pair(reg2_call, reg2_put, terms, reg)
    pc2.holder = "H"  # H bought the second put contract but holds only one put
    reg.get("P2").closed = True
    first = settle(pc1, Money.of("555"), IKEA_EXPIRY, reg)
    second = settle(pc2, Money.of("555"), IKEA_EXPIRY, reg)
    assert first.status is ContractStatus.SETTLED_REIMBURSED
    assert first.evidence == (("P1", 100),)
    assert second.status is ContractStatus.TERMINATED


def test_evidence_aggregates_positions(terms):
    reg, _, (_, pc) = insured_pair(ikea("C", "call", "24"), ikea("P", "put", "15"), terms)
    reg.get("P").closed = True
    pc.holder = "H"
    reg.add(ikea("H1", "put", "2", shares=60, owner="H"))
    reg.add(ikea("H2", "put", "2", shares=60, owner="H"))
    out = settle(pc, Money.of("555"), IKEA_EXPIRY, reg)
    assert out.evidence == (("H1", 60), ("H2", 40))
    assert reg.get("H2").claimed_shares == 40


def test_status_machine(terms):
    reg, _, (cc, pc) = insured_pair(ikea("A", "call", "24"), ikea("B", "put", "15"), terms)
    with pytest.raises(WrongDate):
        settle(cc, Money.of("555"), date(2013, 2, 14), reg)
    settle(cc, Money.of("555"), IKEA_EXPIRY, reg)
    with pytest.raises(AlreadySettled):
        settle(cc, Money.of("555"), IKEA_EXPIRY, reg)
    with pytest.raises(ValueError):
        pc.close(ContractStatus.ACTIVE)
    assert cc.status.terminal and not pc.status.terminal


def insurer_pnl_at(call, put, spot, terms):
    reg, proposal, (cc, pc) = insured_pair(call, put, terms)
    premium = sum(s.premium_per_share * s.shares for s in proposal.sides)
    paid = sum(settle(c, spot, call.spec.expiry, reg).reimbursement for c in (cc, pc))
    return premium - paid


strike = st.integers(min_value=10, max_value=200).map(str)
premium = st.integers(min_value=1_000, max_value=300_000).map(lambda u: str(Money(u)))


@settings(max_examples=300, deadline=None)
@given(strike, strike, premium, premium, st.integers(1, 1000), st.integers(1, 300))
def test_insurer_floor_for_favourable_pairs(kc, kp, c, p, shares, spot):
    assume(int(kc) <= int(kp))
    call = position("C", "call", kc, c, shares=shares)
    put = position("P", "put", kp, p, shares=shares)
    assert insurer_pnl_at(call, put, Money.of(spot), InsuranceTerms()) > Money.of("0")


@settings(max_examples=200, deadline=None)
@given(st.integers(20, 100), st.integers(1, 50), premium, premium)
def test_call_above_loses_between_strikes(kp, width, c, p):
    kc = kp + width
    call = position("C", "call", str(kc), c)
    put = position("P", "put", str(kp), p)
    terms = InsuranceTerms()
    spot = Money.of(kp) + Money(1)
    pnl = insurer_pnl_at(call, put, spot, terms)
    y, sc = terms.yardstick, terms.service_charge
    expected = compute_premium_split(Money.of(c), Money.of(p), terms).total - (
        Money.of(c).scale(y).scale(1 - sc) + Money.of(p).scale(y).scale(1 - sc)
    )
    assert pnl == expected
    if min(Money.of(c), Money.of(p)).scale(y).scale(1 - sc) > max(Money.of(c), Money.of(p)).scale(y).scale(sc):
        assert pnl < Money.of("0")
