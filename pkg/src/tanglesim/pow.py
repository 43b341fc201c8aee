"""Proof-of-work: leading-zero-bit nonce search over SHA-256.

The expected number of attempts at ``difficulty_bits = d`` is ``2**d``
(geometric distribution with success probability ``2**-d``).
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass

from .transaction import Transaction

MAX_DIFFICULTY = 32
DEFAULT_DIFFICULTY = 14
ACCELERATED_ATTACH_MS = 300.0

_MASK64 = 2**64 - 1


@dataclass(frozen=True)
class PowConfig:
    difficulty_bits: int = DEFAULT_DIFFICULTY
    # Stands in for an FPGA accelerator; only affects simulated stage time.
    accelerated: bool = False

    def __post_init__(self):
        if not 0 <= self.difficulty_bits <= MAX_DIFFICULTY:
            raise ValueError(f"difficulty_bits must be in [0, {MAX_DIFFICULTY}]")


def meets_difficulty(digest: bytes, difficulty_bits: int) -> bool:
    if difficulty_bits == 0:
        return True
    return int.from_bytes(digest, "big") >> (len(digest) * 8 - difficulty_bits) == 0


def leading_zero_bits(digest: bytes) -> int:
    n = int.from_bytes(digest, "big")
    return len(digest) * 8 - n.bit_length()


def verify(tx: Transaction, cfg: PowConfig | int) -> bool:
    bits = cfg if isinstance(cfg, int) else cfg.difficulty_bits
    return meets_difficulty(tx.hash, bits)


def find_nonce(tx: Transaction, cfg: PowConfig, seed: int) -> tuple[int, int]:
    """Search for a valid nonce; returns ``(nonce, attempts)``.

    Candidates are ``start, start+1, ...`` (mod 2**64) where ``start`` is
    drawn from ``seed``, so the search is deterministic per seed.
    """
    start = random.Random(seed).getrandbits(64)
    base = hashlib.sha256(tx.pow_prefix())
    limit = 1 << (256 - cfg.difficulty_bits)
    pack = struct.Struct("<Q").pack
    nonce = start
    attempts = 0
    while True:
        attempts += 1
        h = base.copy()
        h.update(pack(nonce))
        if int.from_bytes(h.digest(), "big") < limit:
            return nonce, attempts
        nonce = (nonce + 1) & _MASK64


def solve_with_attempts(tx: Transaction, cfg: PowConfig, seed: int) -> tuple[Transaction, int]:
    nonce, attempts = find_nonce(tx, cfg, seed)
    return tx.with_nonce(nonce), attempts


def solve(tx: Transaction, cfg: PowConfig, seed: int) -> Transaction:
    return solve_with_attempts(tx, cfg, seed)[0]
