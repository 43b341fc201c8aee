"""Turning content into a chain of solved transactions (one per chunk)."""

from __future__ import annotations

from dataclasses import dataclass

from . import pow as _pow
from .tangle import TangleGraph
from .tipselect import WalkConfig, derive_seed, select_two_tips
from .transaction import Transaction, bundle_digest
from .trinary import segment_payload


@dataclass(frozen=True)
class SolvedBundle:
    transactions: tuple[Transaction, ...]
    attempts: tuple[int, ...]

    @property
    def hashes(self) -> list[bytes]:
        return [tx.hash for tx in self.transactions]

    @property
    def head(self) -> bytes:
        return self.transactions[0].hash


def build_bundle(content: str, address: str, trunk: bytes, branch: bytes, *,
                 pow_cfg: _pow.PowConfig, seed: int, timestamp: int = 0,
                 sender: str = "", value: int = 0) -> SolvedBundle:
    """Segment ``content`` and solve one transaction per chunk.

    Chunk 0 approves ``(trunk, branch)``; chunk ``i`` approves
    ``(chunk i-1, branch)``.  A value transfer rides on chunk 0 only.
    """
    chunks = segment_payload(content)
    bundle_id = bundle_digest(address, sender, str(value), str(timestamp), trunk, branch, content)
    txs, attempts = [], []
    prev = trunk
    for chunk in chunks:
        tx = Transaction(
            trunk=prev,
            branch=branch,
            payload=chunk.data,
            address=address,
            sender=sender if chunk.index == 0 else "",
            value=value if chunk.index == 0 else 0,
            timestamp=timestamp,
            bundle_id=bundle_id,
            bundle_index=chunk.index,
            bundle_total=chunk.total,
        )
        tx, n = _pow.solve_with_attempts(tx, pow_cfg, derive_seed(seed, "pow", chunk.index))
        txs.append(tx)
        attempts.append(n)
        prev = tx.hash
    return SolvedBundle(tuple(txs), tuple(attempts))


def attach(graph: TangleGraph, content: str, address: str, walk_cfg: WalkConfig,
           pow_cfg: _pow.PowConfig, *, timestamp: int = 0, sender: str = "",
           value: int = 0) -> list[bytes]:
    """Tip selection, PoW and append for every chunk of ``content``."""
    trunk, branch = select_two_tips(graph, walk_cfg)
    solved = build_bundle(content, address, trunk, branch, pow_cfg=pow_cfg,
                          seed=walk_cfg.rng_seed, timestamp=timestamp,
                          sender=sender, value=value)
    for tx in solved.transactions:
        graph.append(tx)
    return solved.hashes
