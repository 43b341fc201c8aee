import json
import random
import statistics

import pytest

from tanglesim import netsim
from tanglesim.coordinator import MilestonePolicy
from tanglesim.netsim import (
    Arrival,
    Constant,
    LogNormal,
    NodeProfile,
    Scenario,
    Uniform,
    run_scenario,
    sample_stage,
)
from tanglesim.pow import PowConfig

KEY = b"\x02" * 32


def const_node(ts=2000.0, at=9000.0, bc=1000.0, name="N"):
    model = {s: Constant(100.0) for s in netsim.STAGES}
    model.update({netsim.TIP_SELECTION: Constant(ts), netsim.ATTACH: Constant(at),
                  netsim.BROADCAST: Constant(bc)})
    return NodeProfile(name, model)


def test_constant_sample():
    node = const_node()
    rng = random.Random(0)
    assert sample_stage({netsim.BROADCAST: Constant(1000)}, netsim.BROADCAST, node, rng) == 1000


def test_load_factor_applies_to_broadcast_only_stages():
    node = NodeProfile("L", {}, load_factor=1.5)
    rng = random.Random(0)
    model = {netsim.BROADCAST: Constant(1000), netsim.ATTACH: Constant(1000),
             netsim.TIP_SELECTION: Constant(1000)}
    assert sample_stage(model, netsim.BROADCAST, node, rng) == 1500
    assert sample_stage(model, netsim.TIP_SELECTION, node, rng) == 1500
    assert sample_stage(model, netsim.ATTACH, node, rng) == 1000


def test_unknown_stage():
    with pytest.raises(netsim.UnknownStage):
        sample_stage({}, netsim.BROADCAST, const_node(), random.Random(0))


def test_lognormal_median():
    rng = random.Random(3)
    node = NodeProfile("x", {})
    draws = [sample_stage({netsim.ATTACH: LogNormal(11000, 0.6)}, netsim.ATTACH, node, rng)
             for _ in range(10_000)]
    assert abs(statistics.median(draws) / 11000 - 1) < 0.05


def test_distribution_validation():
    with pytest.raises(netsim.ConfigError):
        Constant(0)
    with pytest.raises(netsim.ConfigError):
        Uniform(5, 1)
    with pytest.raises(netsim.ConfigError):
        LogNormal(100, 0)
    with pytest.raises(netsim.ConfigError):
        NodeProfile("x", {}, load_factor=0.5)


def test_empty_schedule_milestone_cadence():
    sc = Scenario(nodes={}, duration_ms=300_000, allocation={"A": 10},
                  coordinator=MilestonePolicy(KEY), pow=PowConfig(0))
    res = run_scenario(sc, 1)
    ms = [e for e in res.events if e["event_kind"] == "milestone"]
    assert len(ms) == 5
    assert [e["time_ms"] for e in ms] == [60_000 * k for k in range(1, 6)]
    assert res.graph.ledger_balances("all").balances == {"A": 10}


@pytest.mark.parametrize("duration, interval", [(59_999, 60_000), (125_000, 30_000), (10_000, 1_000)])
def test_milestone_count_is_floor(duration, interval):
    sc = Scenario(nodes={}, duration_ms=duration, coordinator=MilestonePolicy(KEY, interval), pow=PowConfig(0))
    res = run_scenario(sc, 1)
    assert len(res.graph.milestones) == duration // interval


def test_single_arrival_end_to_end():
    node = const_node()
    sc = Scenario(nodes={"N": node}, arrivals=[Arrival(0, "N", payload="ABC")], pow=PowConfig(0))
    res = run_scenario(sc, 1)
    bc = [e for e in res.events if e["stage"] == netsim.BROADCAST]
    assert bc[0]["time_ms"] == 12_000
    stages = {e["stage"]: e["duration_ms"] for e in res.events if e["event_kind"] == "stage"}
    assert stages == {netsim.TIP_SELECTION: 2000, netsim.ATTACH: 9000, netsim.BROADCAST: 1000}


def test_causality_and_determinism():
    nodes = netsim.paper_like_nodes()
    arrivals = [Arrival(i * 500.0, "AB"[i % 2], payload=netsim.message_trytes("u"), address=f"X{i}")
                for i in range(12)]
    arrivals.append(Arrival(700.0, "mam", "mam", channel_key="11" * 32, plaintext=b"hi"))
    sc = Scenario(nodes=nodes, arrivals=arrivals, duration_ms=120_000,
                  coordinator=MilestonePolicy(KEY), pow=PowConfig(4))
    r1 = run_scenario(sc, 9)
    r2 = run_scenario(sc, 9)
    assert r1.events_jsonl() == r2.events_jsonl()
    order = [netsim.ENCODING, netsim.TIP_SELECTION, netsim.ATTACH, netsim.BROADCAST, netsim.GET_MESSAGE]
    per_tx = {}
    for e in r1.events:
        if e["event_kind"] == "stage":
            per_tx.setdefault(e["tx_hash"], []).append((e["time_ms"], order.index(e["stage"])))
    assert len(per_tx) == 13
    for seq in per_tx.values():
        times = [t for t, _ in sorted(seq, key=lambda x: x[1])]
        assert times == sorted(times)
    assert r1.events_jsonl() != run_scenario(sc, 10).events_jsonl()


def test_event_log_schema():
    sc = Scenario(nodes={"N": const_node()}, arrivals=[Arrival(0, "N")], pow=PowConfig(0))
    for line in run_scenario(sc, 1).events_jsonl().splitlines():
        assert list(json.loads(line)) == ["time_ms", "node", "event_kind", "tx_hash", "stage", "duration_ms"]


def test_real_pow_attach_uses_attempts():
    node = NodeProfile("R", {s: Constant(10.0) for s in netsim.STAGES}, hash_rate=1000.0)
    sc = Scenario(nodes={"R": node}, arrivals=[Arrival(0, "R", payload="A")], pow=PowConfig(6),
                  attach_source="real-pow")
    res = run_scenario(sc, 2)
    attach = next(e for e in res.events if e["stage"] == netsim.ATTACH)
    assert attach["duration_ms"] > 0
    attempts = attach["duration_ms"] * node.hash_rate / 1000
    assert attempts == pytest.approx(round(attempts)) and round(attempts) >= 1
    assert run_scenario(sc, 2).events_jsonl() == res.events_jsonl()


def test_accelerated_attach_constant():
    node = const_node()
    sc = Scenario(nodes={"N": node}, arrivals=[Arrival(0, "N", payload=netsim.message_trytes("m"))],
                  pow=PowConfig(0, accelerated=True))
    res = run_scenario(sc, 1)
    attach = next(e for e in res.events if e["stage"] == netsim.ATTACH)
    assert attach["duration_ms"] == 600.0


def test_double_spend_scenario_safety():
    sc = netsim.double_spend_scenario(20, difficulty_bits=4)
    ids = {a.id: i for i, a in enumerate(sc.arrivals) if a.id}
    for seed in range(10):
        res = run_scenario(sc, seed)
        a, b = res.heads[ids["spend_a"]], res.heads[ids["spend_b"]]
        assert a in res.graph and b in res.graph
        assert res.graph.conflicts(a, b)
        confirmed = res.confirmed()
        assert not (a in confirmed and b in confirmed)
        assert res.graph.ledger_balances("confirmed").consistent


def test_scenario_from_dict_round_trip():
    d = {
        "preset": "paper-like",
        "duration_ms": 120000,
        "allocation": {"A": 5},
        "coordinator": {"interval_ms": 60000, "authority_key": "ab" * 32},
        "walk": {"alpha": 0.01},
        "pow": {"difficulty_bits": 2},
        "arrivals": [{"time_ms": 0, "node": "B", "message": "u"},
                     {"time_ms": 10, "node": "mam", "kind": "mam", "channel_key": "cd" * 32, "text": "hi"}],
    }
    sc = Scenario.from_dict(d)
    assert len(sc.arrivals[0].payload) == 1093
    again = Scenario.from_dict(sc.to_dict())
    assert again.to_dict() == sc.to_dict()
    assert run_scenario(d, 3).events_jsonl() == run_scenario(again, 3).events_jsonl()


@pytest.mark.parametrize("bad", [
    {"arrivals": [{"time_ms": 0, "node": "nope"}]},
    {"arrivals": [{"time_ms": 0, "node": "A", "kind": "weird"}]},
    {"attach_source": "psychic"},
    {"preset": "unknown"},
    {"nodes": {"Z": {"load_factor": 2}}},
])
def test_config_errors(bad):
    with pytest.raises(netsim.ConfigError):
        Scenario.from_dict(bad)


def test_message_sizes():
    assert len(netsim.message_trytes("u")) == 1093
    assert len(netsim.message_trytes("m")) == 2405
    assert netsim.message_trytes("ABC") == "ABC"
