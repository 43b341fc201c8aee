"""Transaction record and its canonical byte serialization.

Layout (all integers little-endian)::

    b"TX1" | trunk[32] | branch[32] | payload | address | sender
    | value:i64 | timestamp:u64 | bundle_id | bundle_index:u32 | bundle_total:u32
    | is_milestone:u8                                   <- end of "essence"
    | signature                                        <- coordinator MAC
    | nonce:u64                                        <- PoW

Variable-length fields are a u32 length followed by UTF-8 bytes.  The
essence is what the coordinator authenticates; the full serialization is
what gets hashed, so the nonce comes last and the search only re-hashes
eight bytes per attempt.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from functools import cached_property

from .trinary import PAYLOAD_TRYTES, bytes_to_trytes, check_trytes, trytes_to_bytes

HASH_SIZE = 32
NULL_HASH = bytes(HASH_SIZE)
GENESIS_ADDRESS = "GENESIS"

_MAGIC = b"TX1"


def _var(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


@dataclass(frozen=True)
class Transaction:
    trunk: bytes
    branch: bytes
    payload: str = ""
    address: str = ""
    value: int = 0
    timestamp: int = 0
    nonce: int = 0
    sender: str = ""
    bundle_id: str = ""
    bundle_index: int = 0
    bundle_total: int = 1
    is_milestone: bool = False
    signature: bytes = field(default=b"", repr=False)

    def __post_init__(self):
        if len(self.trunk) != HASH_SIZE or len(self.branch) != HASH_SIZE:
            raise ValueError("trunk and branch must be 32-byte hashes")
        if len(self.payload) > PAYLOAD_TRYTES:
            raise ValueError(f"payload of {len(self.payload)} trytes exceeds {PAYLOAD_TRYTES}")
        check_trytes(self.payload)
        if not 0 <= self.nonce < 2**64:
            raise ValueError("nonce must fit in 8 bytes")

    def essence(self) -> bytes:
        return b"".join((
            _MAGIC,
            self.trunk,
            self.branch,
            _var(self.payload.encode("ascii")),
            _var(self.address.encode("utf-8")),
            _var(self.sender.encode("utf-8")),
            struct.pack("<qQ", self.value, self.timestamp),
            _var(self.bundle_id.encode("utf-8")),
            struct.pack("<IIB", self.bundle_index, self.bundle_total, int(self.is_milestone)),
        ))

    def pow_prefix(self) -> bytes:
        """Serialization up to (excluding) the nonce."""
        return self.essence() + _var(self.signature)

    def serialize(self) -> bytes:
        return self.pow_prefix() + struct.pack("<Q", self.nonce)

    @cached_property
    def hash(self) -> bytes:
        return hashlib.sha256(self.serialize()).digest()

    @property
    def is_transfer(self) -> bool:
        return bool(self.sender) and self.value != 0

    @property
    def parents(self) -> tuple[bytes, bytes]:
        return self.trunk, self.branch

    def with_nonce(self, nonce: int) -> Transaction:
        return replace(self, nonce=nonce)

    def to_dict(self) -> dict:
        return {
            "hash": self.hash.hex(),
            "trunk": self.trunk.hex(),
            "branch": self.branch.hex(),
            "payload": self.payload,
            "address": self.address,
            "sender": self.sender,
            "value": self.value,
            "timestamp": self.timestamp,
            "nonce": self.nonce,
            "bundle": {"id": self.bundle_id, "index": self.bundle_index, "total": self.bundle_total},
            "is_milestone": self.is_milestone,
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Transaction:
        bundle = d.get("bundle", {})
        return cls(
            trunk=bytes.fromhex(d["trunk"]),
            branch=bytes.fromhex(d["branch"]),
            payload=d.get("payload", ""),
            address=d.get("address", ""),
            sender=d.get("sender", ""),
            value=int(d.get("value", 0)),
            timestamp=int(d.get("timestamp", 0)),
            nonce=int(d.get("nonce", 0)),
            bundle_id=bundle.get("id", ""),
            bundle_index=int(bundle.get("index", 0)),
            bundle_total=int(bundle.get("total", 1)),
            is_milestone=bool(d.get("is_milestone", False)),
            signature=bytes.fromhex(d.get("signature", "")),
        )


def make_genesis(allocation: dict[str, int]) -> Transaction:
    """Synthetic genesis holding the whole supply.

    The per-address allocation is stored as trytes in the payload so a
    snapshot carries it along.
    """
    blob = json.dumps(dict(sorted(allocation.items())), separators=(",", ":")).encode()
    return Transaction(
        trunk=NULL_HASH,
        branch=NULL_HASH,
        payload=bytes_to_trytes(blob),
        address=GENESIS_ADDRESS,
        value=sum(allocation.values()),
    )


def genesis_allocation(genesis: Transaction) -> dict[str, int]:
    if not genesis.payload:
        return {}
    return {k: int(v) for k, v in json.loads(trytes_to_bytes(genesis.payload)).items()}


def bundle_digest(*parts: bytes | str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(_var(p.encode() if isinstance(p, str) else p))
    return h.hexdigest()
