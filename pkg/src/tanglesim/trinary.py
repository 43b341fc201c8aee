"""Tryte alphabet, byte <-> tryte conversion and payload segmentation.

A byte ``b`` is written as two trytes, ``ALPHABET[b % 27]`` followed by
``ALPHABET[b // 27]``.  Every transaction carries at most
:data:`PAYLOAD_TRYTES` trytes, so longer content is split into chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ALPHABET = "9ABCDEFGHIJKLMNOPQRSTUVWXYZ"
PAYLOAD_TRYTES = 2187

_INDEX = {c: i for i, c in enumerate(ALPHABET)}
_ALPHABET_SET = frozenset(ALPHABET)


class TrinaryError(ValueError):
    pass


class OddLength(TrinaryError):
    pass


class ValueOutOfRange(TrinaryError):
    pass


class InvalidTryte(TrinaryError):
    pass


# Precomputed pair table: byte value -> two-character tryte string.
_BYTE_TO_PAIR = [ALPHABET[b % 27] + ALPHABET[b // 27] for b in range(256)]
_PAIR_TO_BYTE = {pair: b for b, pair in enumerate(_BYTE_TO_PAIR)}


def is_trytes(s: str) -> bool:
    return _ALPHABET_SET.issuperset(s)


def check_trytes(s: str) -> str:
    if not isinstance(s, str) or not is_trytes(s):
        raise InvalidTryte(f"not a tryte string: {s[:20]!r}")
    return s


def bytes_to_trytes(data: bytes) -> str:
    return "".join(_BYTE_TO_PAIR[b] for b in data)


def trytes_to_bytes(trytes: str) -> bytes:
    if len(trytes) % 2:
        raise OddLength(f"tryte string of odd length {len(trytes)}")
    out = bytearray(len(trytes) // 2)
    for i in range(0, len(trytes), 2):
        pair = trytes[i:i + 2]
        b = _PAIR_TO_BYTE.get(pair)
        if b is None:
            lo, hi = _INDEX.get(pair[0]), _INDEX.get(pair[1])
            if lo is None or hi is None:
                raise InvalidTryte(f"invalid tryte in {pair!r} at offset {i}")
            raise ValueOutOfRange(f"pair {pair!r} decodes to {lo + 27 * hi} > 255")
        out[i // 2] = b
    return bytes(out)


@dataclass(frozen=True)
class PayloadChunk:
    data: str
    index: int
    total: int

    def __post_init__(self):
        if len(self.data) > PAYLOAD_TRYTES:
            raise TrinaryError(f"chunk of {len(self.data)} trytes exceeds {PAYLOAD_TRYTES}")
        if not (self.total >= 1 and 0 <= self.index < self.total):
            raise TrinaryError(f"bad chunk position {self.index}/{self.total}")


def chunk_count(length: int) -> int:
    return max(1, math.ceil(length / PAYLOAD_TRYTES))


def segment_payload(content: str) -> list[PayloadChunk]:
    """Split ``content`` into transaction-sized chunks.

    Empty content still yields one (empty) chunk, so every message maps to
    at least one transaction.
    """
    total = chunk_count(len(content))
    return [
        PayloadChunk(content[i * PAYLOAD_TRYTES:(i + 1) * PAYLOAD_TRYTES], i, total)
        for i in range(total)
    ]


def join_chunks(chunks) -> str:
    return "".join(c.data for c in sorted(chunks, key=lambda c: c.index))
