import math
from datetime import date

import pytest
from hypothesis import given, settings, strategies as st

from optinsure.instruments import (
    Moneyness,
    OptionKind,
    OptionSpec,
    PricingParams,
    black_scholes_price,
    black_scholes_value,
    exercise_payoff,
    moneyness,
    parity_residual,
)
from optinsure.money import Money

CALL, PUT = OptionKind.CALL, OptionKind.PUT


def params(spot="50", strike="50", days=180, rate="0.01", q="0", vol="0.4"):
    return PricingParams(Money.of(spot), Money.of(strike), days, rate, q, vol)


def lognormal_oracle(s, k, t, r, q, sigma, kind, n=4000):
    """Discounted expected payoff by Simpson's rule over the standard normal.

    Integrates only the side of the payoff kink where the option pays, so
    the integrand is smooth.
    """
    vt = sigma * math.sqrt(t)
    kink = (math.log(k / s) - (r - q - 0.5 * sigma**2) * t) / vt
    lo, hi = (kink, 12.0) if kind is CALL else (-12.0, kink)
    if hi <= lo:
        return 0.0
    h = (hi - lo) / n
    total = 0.0
    for step in range(n + 1):
        z = lo + step * h
        st_ = s * math.exp((r - q - 0.5 * sigma**2) * t + vt * z)
        payoff = st_ - k if kind is CALL else k - st_
        w = 1 if step in (0, n) else (4 if step % 2 else 2)
        total += w * payoff * math.exp(-0.5 * z * z)
    return math.exp(-r * t) * total * h / 3 / math.sqrt(2 * math.pi)


# premiums printed for S=50, 180 days, 1%, 40% vol
TABLE = [
    ("60", CALL, "2.4"), ("40", CALL, "11.7"), ("35", CALL, "15.7"), ("55", CALL, "3.8"),
    ("50", PUT, "5.4"), ("40", PUT, "1.5"), ("45", PUT, "3.1"), ("65", PUT, "16.2"),
]


@pytest.mark.parametrize("strike, kind, printed", TABLE)
def test_table_premiums_within_tolerance(strike, kind, printed):
    quote = black_scholes_price(params(strike=strike), kind)
    assert abs(quote.to_decimal() - Money.of(printed).to_decimal()) <= Money.of("0.15").to_decimal()


@pytest.mark.parametrize("strike, kind, printed", TABLE)
def test_closed_form_matches_integration(strike, kind, printed):
    p = params(strike=strike)
    oracle = lognormal_oracle(50.0, float(strike), 180 / 365, 0.01, 0.0, 0.4, kind)
    assert black_scholes_value(p, kind) == pytest.approx(oracle, abs=1e-6)


def test_dividend_yield_against_integration():
    p = params(strike="48", q="0.03", rate="0.05", vol="0.25", days=300)
    for kind in (CALL, PUT):
        oracle = lognormal_oracle(50.0, 48.0, 300 / 365, 0.05, 0.03, 0.25, kind)
        assert black_scholes_value(p, kind) == pytest.approx(oracle, abs=1e-6)


pricing = st.builds(
    lambda s, k, d, r, q, v: PricingParams(Money(s), Money(k), d, r, q, v),
    st.integers(min_value=10_000, max_value=5_000_000),
    st.integers(min_value=10_000, max_value=5_000_000),
    st.integers(min_value=0, max_value=1000),
    st.decimals(min_value="0", max_value="0.1", places=4),
    st.decimals(min_value="0", max_value="0.1", places=4),
    st.decimals(min_value="0", max_value="1.5", places=4),
)


@settings(max_examples=1000, deadline=None)
@given(pricing)
def test_put_call_parity(p):
    assert parity_residual(p) < 1e-6 * max(1.0, float(p.spot))


@settings(max_examples=300, deadline=None)
@given(pricing)
def test_bounds_and_monotonicity(p):
    c, put = black_scholes_value(p, CALL), black_scholes_value(p, PUT)
    assert c >= -1e-12 and put >= -1e-12
    assert c <= float(p.spot) + 1e-9
    higher_k = PricingParams(p.spot, p.strike + Money.of("1"), p.days_to_expiry, p.rate, p.dividend_yield, p.volatility)
    assert black_scholes_value(higher_k, CALL) <= c + 1e-9
    assert black_scholes_value(higher_k, PUT) >= put - 1e-9


@given(st.sampled_from(["0.1", "0.3", "0.6"]), st.sampled_from(["0.2", "0.4", "0.8"]))
def test_increasing_in_volatility(v1, v2):
    lo, hi = sorted([v1, v2], key=float)
    for kind in (CALL, PUT):
        assert black_scholes_value(params(vol=lo), kind) <= black_scholes_value(params(vol=hi), kind) + 1e-12


def test_zero_volatility_limit_is_discounted_intrinsic():
    t = 180 / 365
    for strike in ("40", "50", "60"):
        exact_call = max(50 - float(strike) * math.exp(-0.01 * t), 0.0)
        exact_put = max(float(strike) * math.exp(-0.01 * t) - 50, 0.0)
        assert black_scholes_value(params(strike=strike, vol="0"), CALL) == pytest.approx(exact_call, abs=1e-12)
        assert black_scholes_value(params(strike=strike, vol="0"), PUT) == pytest.approx(exact_put, abs=1e-12)
        # and the small-vol price approaches it continuously
        assert black_scholes_value(params(strike=strike, vol="0.0001"), CALL) == pytest.approx(exact_call, abs=1e-3)


def test_expiry_day_returns_intrinsic():
    assert black_scholes_price(params(strike="45", days=0), CALL) == Money.of("5")
    assert black_scholes_price(params(strike="45", days=0), PUT) == Money.of("0")


def test_rejects_bad_params():
    with pytest.raises(ValueError):
        params(spot="0")
    with pytest.raises(ValueError):
        params(days=-1)
    with pytest.raises(ValueError):
        params(vol="-0.1")


def test_moneyness_and_payoff():
    call = OptionSpec("IKEA", CALL, Money.of("500"), date(2013, 2, 15))
    put = OptionSpec("IKEA", PUT, Money.of("500"), date(2013, 2, 15))
    assert moneyness(call, Money.of("555")) is Moneyness.ITM
    assert moneyness(call, Money.of("455")) is Moneyness.OTM
    assert moneyness(call, Money.of("500")) is Moneyness.ATM
    assert moneyness(put, Money.of("555")) is Moneyness.OTM
    assert moneyness(put, Money.of("500")) is Moneyness.ATM
    assert exercise_payoff(call, Money.of("555")) == Money.of("55")
    assert exercise_payoff(put, Money.of("555")) == Money.of("0")
    assert exercise_payoff(put, Money.of("455")) == Money.of("45")
