"""Coordinator: periodic, authenticated milestones that define confirmation.

Each milestone approves the previous milestone (trunk) and a walked tip
(branch), so confirmation only ever grows.  Candidate tips whose past cone,
merged with what is already confirmed, would overdraw any address are
rejected and the walk is retried.
"""

from __future__ import annotations

import hashlib
import hmac
import random
import struct
from dataclasses import dataclass, field, replace

from . import pow as _pow
from .tangle import TangleError, TangleGraph
from .tipselect import TipWalker, WalkConfig, derive_seed
from .transaction import Transaction
from .trinary import bytes_to_trytes

DEFAULT_INTERVAL_MS = 60_000
MAX_WALK_RETRIES = 10
COORDINATOR_ADDRESS = "COORDINATOR"


class IntervalNotElapsed(TangleError):
    pass


class NoConsistentTip(TangleError):
    pass


@dataclass(frozen=True)
class MilestonePolicy:
    authority_key: bytes = field(repr=False)
    interval_ms: int = DEFAULT_INTERVAL_MS
    max_retries: int = MAX_WALK_RETRIES

    def __post_init__(self):
        if self.interval_ms <= 0:
            raise ValueError("interval_ms must be positive")
        if not self.authority_key:
            raise ValueError("authority_key must be non-empty")


def milestone_tag(tx: Transaction, key: bytes) -> bytes:
    return hmac.new(key, tx.essence(), hashlib.sha256).digest()


def verify_milestone(tx: Transaction, policy: MilestonePolicy) -> bool:
    if not tx.is_milestone:
        return False
    return hmac.compare_digest(tx.signature, milestone_tag(tx, policy.authority_key))


def consistent_tip(graph: TangleGraph, walk_cfg: WalkConfig, confirmed: set[bytes],
                   max_retries: int = MAX_WALK_RETRIES) -> bytes | None:
    """First walked tip whose cone keeps the confirmed ledger non-negative."""
    walker = TipWalker(graph, walk_cfg)
    for attempt in range(max_retries):
        tip = walker.walk(random.Random(derive_seed(walk_cfg.rng_seed, "milestone-walk", attempt)))
        if graph.balances_over(confirmed | graph.past_cone(tip)).consistent:
            return tip
    return None


def issue_milestone(graph: TangleGraph, policy: MilestonePolicy, walk_cfg: WalkConfig,
                    now: int, pow_cfg: _pow.PowConfig | None = None) -> Transaction:
    """Build, authenticate and solve the next milestone.  Does not append it."""
    prev_hash = graph.latest_milestone
    if prev_hash is not None:
        elapsed = now - graph[prev_hash].timestamp
        if elapsed < policy.interval_ms:
            raise IntervalNotElapsed(f"only {elapsed} ms since the last milestone")
        confirmed = graph.past_cone(prev_hash)
    else:
        prev_hash = graph.genesis
        confirmed = {graph.genesis}
    if not graph.balances_over(confirmed).consistent:
        raise NoConsistentTip("confirmed state is already inconsistent")

    tip = consistent_tip(graph, walk_cfg, confirmed, policy.max_retries)
    if tip is None:
        tip = prev_hash

    index = len(graph.milestones)
    tx = Transaction(
        trunk=prev_hash,
        branch=tip,
        payload=bytes_to_trytes(struct.pack(">Q", index)),
        address=COORDINATOR_ADDRESS,
        timestamp=now,
        is_milestone=True,
    )
    tx = replace(tx, signature=milestone_tag(tx, policy.authority_key))
    if pow_cfg is None:
        pow_cfg = _pow.PowConfig(difficulty_bits=graph.difficulty_bits)
    return _pow.solve(tx, pow_cfg, derive_seed(walk_cfg.rng_seed, "milestone-pow", index))
