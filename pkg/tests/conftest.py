import random
from collections import defaultdict

import numpy as np
import pytest

from tanglesim.coordinator import MilestonePolicy, issue_milestone
from tanglesim.tangle import TangleGraph
from tanglesim.tipselect import START_GENESIS, WalkConfig
from tanglesim.transaction import Transaction

KEY = bytes(range(32))


def make_tx(trunk, branch, tag="", **kw):
    return Transaction(trunk=trunk, branch=branch, address=kw.pop("address", f"ADDR{tag}"), **kw)


def random_dag(n, seed, milestone_at=None, key=KEY):
    """Graph with ``n`` non-genesis transactions, parents drawn uniformly from
    everything already present.  Optionally issues one milestone after
    ``milestone_at`` transactions."""
    rng = random.Random(seed)
    g = TangleGraph()
    hashes = [g.genesis]
    for i in range(n):
        if milestone_at is not None and i == milestone_at:
            ms = issue_milestone(g, MilestonePolicy(key), WalkConfig(alpha=0.0, start=START_GENESIS, rng_seed=seed), now=i)
            g.append(ms)
            hashes.append(ms.hash)
        tx = make_tx(rng.choice(hashes), rng.choice(hashes), tag=str(i), timestamp=i)
        g.append(tx)
        hashes.append(tx.hash)
    return g


# -- independent oracles: work from trunk/branch fields only -----------------

def children_from_fields(graph):
    kids = defaultdict(set)
    for h, tx in graph.transactions.items():
        if h == graph.genesis:
            continue
        kids[tx.trunk].add(h)
        kids[tx.branch].add(h)
    return kids


def dfs_reach(start, edges):
    seen, stack = {start}, [start]
    while stack:
        for nxt in edges.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def brute_weights(graph):
    kids = children_from_fields(graph)
    return {h: len(dfs_reach(h, kids)) for h in graph.transactions}


def brute_confirmed(graph, milestone):
    parents = {h: {tx.trunk, tx.branch} for h, tx in graph.transactions.items() if h != graph.genesis}
    return dfs_reach(milestone, parents)


def absorption_probabilities(graph, start, alpha=0.0):
    """Exact tip distribution of the weighted walk from ``start`` by solving
    the absorbing-chain linear system ``(I - Q) B = R``."""
    kids = children_from_fields(graph)
    weights = brute_weights(graph)
    states = sorted(dfs_reach(start, kids))
    tips = [s for s in states if not kids.get(s)]
    transient = [s for s in states if kids.get(s)]
    if not transient:
        return {start: 1.0}
    ti = {s: i for i, s in enumerate(transient)}
    ai = {s: i for i, s in enumerate(tips)}
    Q = np.zeros((len(transient), len(transient)))
    R = np.zeros((len(transient), len(tips)))
    for s in transient:
        nxt = sorted(kids[s])
        w = np.array([weights[y] for y in nxt], dtype=float)
        p = np.exp(alpha * (w - w.max()))
        p /= p.sum()
        for y, py in zip(nxt, p):
            if y in ti:
                Q[ti[s], ti[y]] += py
            else:
                R[ti[s], ai[y]] += py
    B = np.linalg.solve(np.eye(len(transient)) - Q, R)
    return {t: B[ti[start], ai[t]] for t in tips}


@pytest.fixture
def key():
    return KEY


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
