"""Weighted random walk (MCMC) tip selection.

From the start transaction the walker repeatedly moves to one of the
current transaction's direct approvers ``y`` with probability proportional
to ``exp(alpha * (W(y) - max_z W(z)))``, ``W`` being cumulative weight,
until it lands on a tip.
"""

from __future__ import annotations

import bisect
import hashlib
import math
import random
from dataclasses import dataclass

from .tangle import TangleError, TangleGraph

START_GENESIS = "genesis"
START_MILESTONE = "latest-milestone"
DEFAULT_ALPHA = 0.001


class EmptyGraph(TangleError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    alpha: float = DEFAULT_ALPHA
    start: str = START_MILESTONE
    rng_seed: int = 0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")
        if self.start not in (START_GENESIS, START_MILESTONE):
            raise ValueError(f"unknown start mode {self.start!r}")


def derive_seed(seed: int, *labels) -> int:
    """Deterministic 64-bit sub-seed from a parent seed and labels."""
    h = hashlib.sha256(str(int(seed)).encode())
    for label in labels:
        h.update(b"\x00" + str(label).encode())
    return int.from_bytes(h.digest()[:8], "big")


def start_point(graph: TangleGraph, cfg: WalkConfig) -> bytes:
    if not len(graph):
        raise EmptyGraph("cannot walk an empty graph")
    if cfg.start == START_MILESTONE and graph.latest_milestone is not None:
        return graph.latest_milestone
    return graph.genesis


def cone_weights(graph: TangleGraph, start: bytes) -> dict[bytes, int]:
    """Cumulative weights of every transaction in the future cone of ``start``.

    A future cone is closed under approval, so weights computed inside it
    equal global ones.  Descendant sets are int bitsets folded in reverse
    topological order.
    """
    cone = graph.future_cone(start)
    nodes = sorted(cone, key=graph.rank.__getitem__)
    bit = {h: 1 << i for i, h in enumerate(nodes)}
    below: dict[bytes, int] = {}
    for h in reversed(nodes):
        acc = bit[h]
        for a in graph.approvers[h]:
            acc |= below[a]
        below[h] = acc
    return {h: s.bit_count() for h, s in below.items()}


def transition_probabilities(weights: list[int], alpha: float) -> list[float]:
    top = max(weights)
    raw = [math.exp(alpha * (w - top)) for w in weights]
    total = sum(raw)
    return [r / total for r in raw]


class TipWalker:
    """Precomputed transition tables for repeated walks on a fixed graph."""

    def __init__(self, graph: TangleGraph, cfg: WalkConfig, start: bytes | None = None):
        self.graph = graph
        self.cfg = cfg
        self.start = start_point(graph, cfg) if start is None else start
        self.weights = cone_weights(graph, self.start)
        self._table: dict[bytes, tuple[list[bytes], list[float]]] = {}

    def step_distribution(self, h: bytes) -> tuple[list[bytes], list[float]]:
        if h not in self._table:
            nxt = sorted(self.graph.approvers[h])
            probs = transition_probabilities([self.weights[y] for y in nxt], self.cfg.alpha)
            cum, acc = [], 0.0
            for p in probs:
                acc += p
                cum.append(acc)
            cum[-1] = 1.0
            self._table[h] = (nxt, cum)
        return self._table[h]

    def walk(self, rng: random.Random) -> bytes:
        h = self.start
        approvers = self.graph.approvers
        while approvers[h]:
            nxt, cum = self.step_distribution(h)
            h = nxt[bisect.bisect_right(cum, rng.random())] if len(nxt) > 1 else nxt[0]
        return h

    def sample(self, n: int, seed: int) -> list[bytes]:
        rng = random.Random(seed)
        return [self.walk(rng) for _ in range(n)]


def walk(graph: TangleGraph, cfg: WalkConfig) -> bytes:
    return TipWalker(graph, cfg).walk(random.Random(cfg.rng_seed))


def select_two_tips(graph: TangleGraph, cfg: WalkConfig) -> tuple[bytes, bytes]:
    walker = TipWalker(graph, cfg)
    return (
        walker.walk(random.Random(derive_seed(cfg.rng_seed, "trunk"))),
        walker.walk(random.Random(derive_seed(cfg.rng_seed, "branch"))),
    )
