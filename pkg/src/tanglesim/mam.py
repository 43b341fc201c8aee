"""Masked authenticated messaging over the Tangle.

A channel is a 32-byte secret.  Message ``i`` lives at address
``trytes(sha256(key || i_be64))`` and its payload is the trytes of a
ChaCha20-Poly1305 ciphertext (nonce derived from ``i``), so only key
holders can find it or read it, and any change to the stored payload
fails authentication.
"""

from __future__ import annotations

import hashlib
import os
import struct
from collections import defaultdict
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from . import pow as _pow
from .bundle import attach
from .tangle import TangleError, TangleGraph
from .tipselect import WalkConfig
from .trinary import TrinaryError, bytes_to_trytes, trytes_to_bytes

KEY_SIZE = 32
TAG_SIZE = 16


class MamError(TangleError):
    pass


class NotFound(MamError):
    pass


class AuthFailure(MamError):
    pass


def message_address(channel_key: bytes, index: int) -> str:
    digest = hashlib.sha256(channel_key + struct.pack(">Q", index)).digest()
    return bytes_to_trytes(digest)


def _nonce(index: int) -> bytes:
    return bytes(4) + struct.pack(">Q", index)


@dataclass
class MamChannel:
    channel_key: bytes = field(repr=False)
    next_index: int = 0

    def __post_init__(self):
        if len(self.channel_key) != KEY_SIZE:
            raise ValueError(f"channel key must be {KEY_SIZE} bytes")

    @classmethod
    def generate(cls) -> MamChannel:
        return cls(os.urandom(KEY_SIZE))

    @classmethod
    def from_hex(cls, key_hex: str, next_index: int = 0) -> MamChannel:
        return cls(bytes.fromhex(key_hex), next_index)

    @property
    def channel_id(self) -> str:
        return hashlib.sha256(self.channel_key).hexdigest()


def encrypt_message(channel_key: bytes, index: int, plaintext: bytes) -> tuple[str, str]:
    address = message_address(channel_key, index)
    ct = ChaCha20Poly1305(channel_key).encrypt(_nonce(index), plaintext, address.encode())
    return address, bytes_to_trytes(ct)


def decrypt_message(channel_key: bytes, index: int, payload: str) -> bytes:
    address = message_address(channel_key, index)
    try:
        ct = trytes_to_bytes(payload)
        return ChaCha20Poly1305(channel_key).decrypt(_nonce(index), ct, address.encode())
    except (InvalidTag, TrinaryError) as e:
        raise AuthFailure(f"message {index} failed authentication") from e


def encode(channel: MamChannel, plaintext: bytes) -> tuple[str, str]:
    """Encrypt the next message; returns ``(address, payload_trytes)``."""
    out = encrypt_message(channel.channel_key, channel.next_index, plaintext)
    channel.next_index += 1
    return out


def publish(graph: TangleGraph, channel: MamChannel, plaintext: bytes, walk_cfg: WalkConfig,
            pow_cfg: _pow.PowConfig, timestamp: int = 0) -> list[bytes]:
    address, payload = encode(channel, plaintext)
    return attach(graph, payload, address, walk_cfg, pow_cfg, timestamp=timestamp)


def read_payload(graph: TangleGraph, address: str) -> list[str]:
    """Reassembled payload of every complete bundle stored at ``address``."""
    bundles = defaultdict(dict)
    totals = {}
    first_seen = {}
    for pos, tx in enumerate(graph.by_address(address)):
        bundles[tx.bundle_id].setdefault(tx.bundle_index, tx.payload)
        totals[tx.bundle_id] = tx.bundle_total
        first_seen.setdefault(tx.bundle_id, pos)
    out = []
    for bid in sorted(bundles, key=first_seen.__getitem__):
        parts = bundles[bid]
        if set(parts) == set(range(totals[bid])):
            out.append("".join(parts[i] for i in range(totals[bid])))
    return out


def fetch(graph: TangleGraph, channel_key: bytes, index: int) -> bytes:
    address = message_address(channel_key, index)
    if not graph.by_address(address):
        raise NotFound(f"no message at index {index}")
    for payload in read_payload(graph, address):
        try:
            return decrypt_message(channel_key, index, payload)
        except AuthFailure:
            continue
    raise AuthFailure(f"message {index} failed authentication")


def next_free_index(graph: TangleGraph, channel_key: bytes) -> int:
    i = 0
    while graph.by_address(message_address(channel_key, i)):
        i += 1
    return i
