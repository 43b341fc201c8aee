import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_confirmed, brute_weights, children_from_fields, make_tx, random_dag
from tanglesim import pow as tpow
from tanglesim.tangle import (
    DuplicateHash,
    InvalidPow,
    TangleGraph,
    UnknownParent,
    UnknownTransaction,
    read_snapshot,
    write_snapshot,
)
from tanglesim.transaction import Transaction, genesis_allocation


def transfer(g, parent, sender, receiver, value, tag):
    tx = make_tx(parent, parent, tag=tag, address=receiver, sender=sender, value=value)
    g.append(tx)
    return tx.hash


class TestAppend:
    def test_first_append(self):
        g = TangleGraph()
        tx = make_tx(g.genesis, g.genesis, "1")
        g.append(tx)
        assert g.tips == {tx.hash}
        assert g.approvers[g.genesis] == {tx.hash}

    def test_second_append(self):
        g = TangleGraph()
        t1 = make_tx(g.genesis, g.genesis, "1")
        g.append(t1)
        t2 = make_tx(t1.hash, g.genesis, "2")
        g.append(t2)
        assert g.tips == {t2.hash}

    def test_unknown_parent(self):
        g = TangleGraph()
        with pytest.raises(UnknownParent):
            g.append(make_tx(b"\x07" * 32, g.genesis))

    def test_duplicate(self):
        g = TangleGraph()
        tx = make_tx(g.genesis, g.genesis)
        g.append(tx)
        with pytest.raises(DuplicateHash):
            g.append(tx)

    def test_pow_gate(self):
        g = TangleGraph(difficulty_bits=12)
        tx = make_tx(g.genesis, g.genesis)
        if not tpow.verify(tx, 12):
            with pytest.raises(InvalidPow):
                g.append(tx)
        g.append(tpow.solve(tx, tpow.PowConfig(12), seed=1))

    def test_unknown_transaction(self):
        g = TangleGraph()
        with pytest.raises(UnknownTransaction):
            g.cumulative_weight(b"\x01" * 32)
        with pytest.raises(UnknownTransaction):
            g.is_confirmed(b"\x01" * 32)


def test_hash_is_deterministic_and_covers_nonce():
    a = Transaction(trunk=bytes(32), branch=bytes(32), payload="ABC", nonce=5)
    b = Transaction(trunk=bytes(32), branch=bytes(32), payload="ABC", nonce=5)
    assert a.hash == b.hash
    assert a.with_nonce(6).hash != a.hash


class TestWeights:
    def test_chain(self):
        g = TangleGraph()
        a = make_tx(g.genesis, g.genesis, "a")
        g.append(a)
        b = make_tx(a.hash, a.hash, "b")
        g.append(b)
        assert [g.cumulative_weight(h) for h in (g.genesis, a.hash, b.hash)] == [3, 2, 1]

    def test_diamond_counts_once(self):
        g = TangleGraph()
        a = make_tx(g.genesis, g.genesis, "a")
        b = make_tx(g.genesis, g.genesis, "b")
        g.append(a)
        g.append(b)
        t = make_tx(a.hash, b.hash, "t")
        g.append(t)
        assert g.cumulative_weight(g.genesis) == 4

    @pytest.mark.parametrize("seed", range(5))
    def test_random_dag_against_dfs(self, seed):
        g = random_dag(50, seed)
        expected = brute_weights(g)
        assert {h: g.cumulative_weight(h) for h in g.transactions} == expected

    @pytest.mark.parametrize("seed", range(3))
    def test_monotonicity(self, seed):
        g = random_dag(30, seed)
        before = {h: g.cumulative_weight(h) for h in g.transactions}
        rng = random.Random(seed)
        hs = list(g.transactions)
        tx = make_tx(rng.choice(hs), rng.choice(hs), "new")
        g.append(tx)
        ancestors = g.past_cone(tx.hash) - {tx.hash}
        for h, w in before.items():
            assert g.cumulative_weight(h) == w + (h in ancestors)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)), max_size=40))
def test_tips_and_topology_invariants(choices):
    g = TangleGraph()
    hashes = [g.genesis]
    for i, (x, y) in enumerate(choices):
        tx = make_tx(hashes[x % len(hashes)], hashes[y % len(hashes)], str(i))
        g.append(tx)
        hashes.append(tx.hash)
    kids = children_from_fields(g)
    assert g.tips == {h for h in g.transactions if not kids.get(h)}
    assert {h: s for h, s in g.approvers.items()} == {h: kids.get(h, set()) for h in g.transactions}
    pos = {h: i for i, h in enumerate(g.topological_order())}
    for h in g.transactions:
        for p in g.parents(h):
            assert pos[p] < pos[h]


class TestConfirmation:
    def test_no_milestone(self):
        g = TangleGraph()
        assert not g.is_confirmed(g.genesis)

    def test_direct_trunk(self, key):
        g = TangleGraph()
        t = make_tx(g.genesis, g.genesis, "t")
        g.append(t)
        ms = make_tx(t.hash, g.genesis, "ms", is_milestone=True)
        g.append(ms)
        assert g.is_confirmed(t.hash)
        assert g.is_confirmed(ms.hash)
        late = make_tx(ms.hash, ms.hash, "late")
        g.append(late)
        assert not g.is_confirmed(late.hash)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_dag_against_dfs(self, seed):
        g = random_dag(200, seed, milestone_at=120)
        truth = brute_confirmed(g, g.latest_milestone)
        assert {h for h in g.transactions if g.is_confirmed(h)} == truth

    @pytest.mark.parametrize("seed", range(3))
    def test_closure(self, seed):
        g = random_dag(80, seed, milestone_at=50)
        for h in g.transactions:
            if g.is_confirmed(h):
                assert all(g.is_confirmed(p) for p in g.parents(h))


class TestLedger:
    def test_single_transfer(self):
        g = TangleGraph({"A": 100})
        t = transfer(g, g.genesis, "A", "B", 40, "t")
        ms = make_tx(t, t, "ms", is_milestone=True)
        g.append(ms)
        state = g.ledger_balances("confirmed")
        assert state.balances == {"A": 60, "B": 40}
        assert state.consistent

    def test_no_transfers(self):
        g = TangleGraph({"A": 100, "C": 5})
        g.append(make_tx(g.genesis, g.genesis, "x"))
        assert g.ledger_balances("all").balances == {"A": 100, "C": 5}

    def test_double_spend_flagged(self):
        g = TangleGraph({"A": 100})
        a = transfer(g, g.genesis, "A", "B", 100, "a")
        b = transfer(g, g.genesis, "A", "C", 100, "b")
        state = g.ledger_balances("all")
        assert state.balances["A"] == -100
        assert state.negative == ("A",)
        assert g.conflicts(a, b)
        assert not g.conflicts(a, a)

    def test_affordable_pair_does_not_conflict(self):
        g = TangleGraph({"A": 100})
        a = transfer(g, g.genesis, "A", "B", 40, "a")
        b = transfer(g, g.genesis, "A", "C", 40, "b")
        assert not g.conflicts(a, b)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 80)), max_size=25))
    def test_conservation(self, transfers):
        names = ["A", "B", "C", "D"]
        g = TangleGraph({"A": 100, "B": 50})
        prev = g.genesis
        for i, (s, r, v) in enumerate(transfers):
            prev = transfer(g, prev, names[s], names[r], v, str(i))
        assert g.ledger_balances("all").total == 150


def test_genesis_allocation_round_trip():
    g = TangleGraph({"B": 3, "A": 7})
    assert genesis_allocation(g.transactions[g.genesis]) == {"A": 7, "B": 3}
    assert g.supply == 10


def test_snapshot_round_trip(tmp_path):
    g = random_dag(40, 3, milestone_at=20)
    path = tmp_path / "snap.jsonl"
    write_snapshot(g, path)
    again = read_snapshot(path)
    assert again.transactions == g.transactions
    assert again.tips == g.tips
    assert again.milestones == g.milestones
    write_snapshot(again, tmp_path / "snap2.jsonl")
    assert (tmp_path / "snap2.jsonl").read_bytes() == path.read_bytes()
