import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import pytest

from optinsure.cli import main
from optinsure.money import Money

DATA = Path(__file__).resolve().parents[1] / "data"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def book_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("OPTINSURE_DATA_DIR", str(tmp_path / "book"))
    return tmp_path / "book"


def write(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def test_price_table():
    code, out, err = run("price", str(DATA / "table_pricing.json"), "--json")
    assert code == 0 and err == ""
    quotes = {q["strike"]: q for q in json.loads(out)["quotes"]}
    printed = {("60", "call"): "2.4", ("40", "call"): "11.7", ("35", "call"): "15.7", ("55", "call"): "3.8",
               ("50", "put"): "5.4", ("40", "put"): "1.5", ("45", "put"): "3.1", ("65", "put"): "16.2"}
    for (k, kind), value in printed.items():
        assert abs(Money.of(quotes[k][kind]).units - Money.of(value).units) <= 1500
    assert all(float(q["parity_residual"]) < 1e-6 for q in quotes.values())


def test_price_zero_day_is_intrinsic(tmp_path):
    f = write(tmp_path / "p.json", {"schema_version": 1, "spot": "50", "strikes": ["45", "55"],
                                    "days_to_expiry": 0, "volatility": "0.4"})
    code, out, _ = run("price", f, "--json")
    q = json.loads(out)["quotes"]
    assert (q[0]["call"], q[0]["put"], q[1]["call"], q[1]["put"]) == ("5", "0", "0", "5")


@pytest.mark.parametrize(
    "content, fragment",
    [
        ('{"schema_version": 1,\n "spot": }', ":2:"),
        ('{"schema_version": 2}', "schema_version"),
        ('{"schema_version": 1, "spot": 50.5, "strike": "50", "days_to_expiry": 5, "volatility": "0.2"}',
         "'spot' must be a decimal string"),
        ('{"schema_version": 1, "spot": "50", "strike": "50", "volatility": "0.2"}', "'days_to_expiry'"),
    ],
)
def test_price_malformed_input(tmp_path, content, fragment):
    f = tmp_path / "bad.json"
    f.write_text(content)
    code, out, err = run("price", str(f))
    assert code == 1 and out == ""
    assert fragment in err and str(f) in err


def test_match_eight_investor_pool():
    code, out, _ = run("match", str(DATA / "eight_investor_pool.json"), "--json")
    assert code == 0
    rep = json.loads(out)[0]
    assert {p["id"] for p in rep["pairs"]} == {"A/beta", "B/alpha", "C/delta", "D/gamma"}
    assert rep["verification"]["W"] == "8.631000"
    assert rep["verification"]["D"] == "30"
    col = [row[rep["ranking_matrix"]["puts"].index("alpha")][1] for row in rep["ranking_matrix"]["entries"]]
    assert dict(zip(rep["ranking_matrix"]["calls"], col)) == {"A": 4, "B": 2, "C": 1, "D": 3}


def test_match_single_pair(tmp_path):
    f = write(tmp_path / "pool.json", {"schema_version": 1, "symbol": "X", "expiry": "2013-07-01", "positions": [
        {"id": "c", "kind": "call", "strike": "40", "premium": "3"},
        {"id": "p", "kind": "put", "strike": "50", "premium": "2"}]})
    rep = json.loads(run("match", f, "--json")[1])[0]
    # one term: W = gap * R / |gap| = R = 0.5 * 3
    assert rep["verification"]["W"] == "1.500000"


def test_match_rejects_mixed_pools(tmp_path):
    f = write(tmp_path / "pool.json", {"schema_version": 1, "positions": [
        {"id": "c", "kind": "call", "strike": "40", "premium": "3", "symbol": "X", "expiry": "2013-07-01"},
        {"id": "p", "kind": "put", "strike": "50", "premium": "2", "symbol": "Y", "expiry": "2013-07-01"}]})
    code, _, err = run("match", f)
    assert code == 1 and "mix" in err


def test_book_workflow(tmp_path, book_dir):
    f = write(tmp_path / "pos.json", {
        "schema_version": 1, "symbol": "IKEA", "expiry": "2013-02-15", "as_of": "2013-01-02T10:00:00",
        "positions": [
            {"id": "E-call", "owner": "E", "kind": "call", "strike": "500", "premium": "24", "shares": 1000},
            {"id": "F-put", "owner": "F", "kind": "put", "strike": "500", "premium": "15", "shares": 1000}]})
    code, out, err = run("issue", f, "--accept-all")
    assert code == 0, err
    assert "contract INS-E-call holder E Active" in out
    code, out, _ = run("trade", "--contract", "INS-E-call", "--seller", "E", "--buyer", "G",
                       "--price", "2.5", "--time", "2013-01-14T10:00:00")
    assert code == 0 and "fees 25 + 25" in out
    code, _, err = run("trade", "--contract", "INS-E-call", "--seller", "E", "--buyer", "G",
                       "--price", "2.5", "--time", "2013-01-15T10:00:00")
    assert code == 1 and "does not hold" in err
    code, out, _ = run("settle", "--symbol", "IKEA", "--expiry", "2013-02-15", "--spot", "455")
    assert code == 0
    # G holds the contract but no call, so there is no evidence
    assert "INS-E-call holder G Terminated OTM reimbursed 0" in out
    code, out, _ = run("report", "--csv-dir", str(tmp_path / "csv"))
    assert code == 0 and "net 0" in out
    rows = list(csv.DictReader(open(tmp_path / "csv" / "pnl.csv")))
    assert sum(Money.of(r["pnl"]).units for r in rows) == 0
    code, _, err = run("report", "--yardstick", "0.4")
    assert code == 1 and "cannot change" in err


def test_issue_reject_returns_to_waiting(tmp_path, book_dir):
    f = write(tmp_path / "pos.json", {
        "schema_version": 1, "symbol": "X", "expiry": "2013-07-01", "as_of": "2013-01-02T10:00:00",
        "positions": [{"id": "c", "kind": "call", "strike": "40", "premium": "3"},
                      {"id": "p", "kind": "put", "strike": "50", "premium": "2"}]})
    code, out, _ = run("issue", f, "--reject", "p")
    assert code == 0 and "p=Rejected" in out
    events = (book_dir / "events.jsonl").read_text().splitlines()
    assert json.loads(events[-1])["command"] == "reject"


def test_replay_examples():
    code, out, _ = run("replay", "example1", "--terminal", "555", "--json")
    assert json.loads(out)["pnl"]["insurer"] == "457.5"
    code, out, _ = run("replay", "example3", "--json")
    pnl = json.loads(out)["pnl"]
    assert [pnl[k] for k in "EGFH"] == ["34475", "5395", "26980", "3405"]
    assert json.loads(out)["insurer_fee_income"] == "250"


def test_replay_empty_script(tmp_path):
    f = write(tmp_path / "s.json", {"schema_version": 1, "events": []})
    code, out, _ = run("replay", f, "--json")
    rep = json.loads(out)
    assert code == 0 and rep["ledger"] == [] and rep["pnl"] == {} and rep["net_total"] == "0"


def test_replay_bad_script(tmp_path):
    f = write(tmp_path / "s.json", {"schema_version": 1, "events": [{"time": "2013-01-01T00:00:00", "type": "fly"}]})
    code, _, err = run("replay", f)
    assert code == 1 and "event 0" in err and "fly" in err


def test_simulate_equal_strike_pool(tmp_path):
    code, out, _ = run("simulate", str(DATA / "equal_strike_pool.json"), "--paths", "10000",
                       "--out-dir", str(tmp_path))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert all(Money.of(r["min"]).units > 0 for r in rows)
    series = list(csv.DictReader(open(tmp_path / "series.csv")))
    mean = Fraction(sum(Money.of(r["all"]).units for r in series), len(series) * 10_000)
    summary_all = next(r for r in rows if r["class"] == "all")
    assert Money.of(summary_all["mean"]) == Money.of(mean)


def test_simulate_zero_vol_single_outcome():
    code, out, _ = run("simulate", str(DATA / "equal_strike_pool.json"), "--vol", "0", "--paths", "50")
    for r in csv.DictReader(io.StringIO(out)):
        assert r["min"] == r["max"] == r["mean"]


@pytest.mark.parametrize(
    "argv",
    [
        ("price", str(DATA / "table_pricing.json")),
        ("match", str(DATA / "eight_investor_pool.json")),
        ("replay", "example3", "--json"),
        ("simulate", str(DATA / "equal_strike_pool.json"), "--paths", "2000", "--seed", "5"),
    ],
)
def test_commands_are_byte_deterministic(argv):
    assert run(*argv) == run(*argv)


def test_seed_changes_simulation():
    a = run("simulate", str(DATA / "eight_investor_pool.json"), "--paths", "500", "--seed", "1")[1]
    b = run("simulate", str(DATA / "eight_investor_pool.json"), "--paths", "500", "--seed", "2")[1]
    assert a != b
