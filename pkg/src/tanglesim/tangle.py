"""The Tangle: an append-only DAG of transactions.

Every transaction approves two earlier ones (trunk and branch, possibly the
same).  The graph keeps a direct-approver index, the tip set, the ordered
milestone history and an address index used by MAM lookups.

Thread contract: one writer, many readers.  ``append`` holds ``lock``;
readers must not overlap an append.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import pow as _pow
from .transaction import (
    NULL_HASH,
    Transaction,
    genesis_allocation,
    make_genesis,
)


class TangleError(Exception):
    pass


class UnknownParent(TangleError):
    pass


class UnknownTransaction(TangleError, KeyError):
    pass


class InvalidPow(TangleError):
    pass


class DuplicateHash(TangleError):
    pass


@dataclass(frozen=True)
class LedgerState:
    balances: dict[str, int]
    negative: tuple[str, ...]

    @property
    def consistent(self) -> bool:
        return not self.negative

    @property
    def total(self) -> int:
        return sum(self.balances.values())


class TangleGraph:
    def __init__(self, allocation: dict[str, int] | None = None, difficulty_bits: int = 0,
                 genesis: Transaction | None = None):
        if genesis is None:
            genesis = make_genesis(allocation or {})
        self.difficulty_bits = difficulty_bits
        self.genesis = genesis.hash
        self.allocation = genesis_allocation(genesis)
        self.transactions: dict[bytes, Transaction] = {genesis.hash: genesis}
        self.approvers: dict[bytes, set[bytes]] = {genesis.hash: set()}
        self.tips: set[bytes] = {genesis.hash}
        self.milestones: list[bytes] = []
        self.rank: dict[bytes, int] = {genesis.hash: 0}
        self.order: list[bytes] = [genesis.hash]
        self._by_address: dict[str, list[bytes]] = {genesis.address: [genesis.hash]}
        self.lock = threading.RLock()

    def __len__(self):
        return len(self.transactions)

    def __contains__(self, h):
        return h in self.transactions

    def __getitem__(self, h: bytes) -> Transaction:
        try:
            return self.transactions[h]
        except KeyError:
            raise UnknownTransaction(_short(h)) from None

    @property
    def supply(self) -> int:
        return sum(self.allocation.values())

    @property
    def latest_milestone(self) -> bytes | None:
        return self.milestones[-1] if self.milestones else None

    def parents(self, h: bytes) -> tuple[bytes, ...]:
        if h == self.genesis:
            return ()
        tx = self[h]
        return (tx.trunk,) if tx.trunk == tx.branch else (tx.trunk, tx.branch)

    def append(self, tx: Transaction) -> bytes:
        h = tx.hash
        with self.lock:
            if h in self.transactions:
                raise DuplicateHash(_short(h))
            for p in (tx.trunk, tx.branch):
                if p not in self.transactions:
                    raise UnknownParent(f"{_short(h)} references unknown {_short(p)}")
            if not _pow.verify(tx, self.difficulty_bits):
                raise InvalidPow(f"{_short(h)} below {self.difficulty_bits} leading zero bits")
            self.transactions[h] = tx
            self.approvers[h] = set()
            for p in {tx.trunk, tx.branch}:
                self.approvers[p].add(h)
                self.tips.discard(p)
            self.tips.add(h)
            self.rank[h] = 1 + max(self.rank[tx.trunk], self.rank[tx.branch])
            self.order.append(h)
            self._by_address.setdefault(tx.address, []).append(h)
            if tx.is_milestone:
                self.milestones.append(h)
        return h

    def by_address(self, address: str) -> list[Transaction]:
        return [self.transactions[h] for h in self._by_address.get(address, ())]

    def past_cone(self, h: bytes) -> set[bytes]:
        """``h`` plus everything it directly or indirectly approves."""
        self[h]
        seen = {h}
        stack = [h]
        while stack:
            for p in self.parents(stack.pop()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def future_cone(self, h: bytes) -> set[bytes]:
        """``h`` plus every transaction that directly or indirectly approves it."""
        self[h]
        seen = {h}
        queue = deque([h])
        while queue:
            for a in self.approvers[queue.popleft()]:
                if a not in seen:
                    seen.add(a)
                    queue.append(a)
        return seen

    def cumulative_weight(self, h: bytes) -> int:
        # Own weight is 1 for every transaction.
        return len(self.future_cone(h))

    def confirmed_set(self) -> set[bytes]:
        ms = self.latest_milestone
        return set() if ms is None else self.past_cone(ms)

    def is_confirmed(self, h: bytes) -> bool:
        self[h]
        ms = self.latest_milestone
        if ms is None:
            return False
        if ms == h:
            return True
        # Search upward from the target; stops once ranks exceed the milestone's.
        limit = self.rank[ms]
        seen = {h}
        stack = [h]
        while stack:
            for a in self.approvers[stack.pop()]:
                if a == ms:
                    return True
                if a not in seen and self.rank[a] < limit:
                    seen.add(a)
                    stack.append(a)
        return False

    def balances_over(self, hashes: Iterable[bytes]) -> LedgerState:
        balances = dict(self.allocation)
        for h in hashes:
            tx = self.transactions[h]
            if tx.is_transfer:
                balances[tx.sender] = balances.get(tx.sender, 0) - tx.value
                balances[tx.address] = balances.get(tx.address, 0) + tx.value
        negative = tuple(sorted(a for a, v in balances.items() if v < 0))
        return LedgerState(balances, negative)

    def ledger_balances(self, scope: str = "confirmed") -> LedgerState:
        if scope == "all":
            return self.balances_over(self.transactions)
        if scope == "confirmed":
            return self.balances_over(self.confirmed_set())
        raise ValueError(f"unknown scope {scope!r}")

    def conflicts(self, a: bytes, b: bytes) -> bool:
        """True iff confirming both cones overdraws an address but either alone does not."""
        cone_a, cone_b = self.past_cone(a), self.past_cone(b)
        if self.balances_over(cone_a | cone_b).consistent:
            return False
        return self.balances_over(cone_a).consistent and self.balances_over(cone_b).consistent

    def topological_order(self) -> list[bytes]:
        return sorted(self.transactions, key=lambda h: (self.rank[h], h))

    def copy(self) -> TangleGraph:
        g = TangleGraph.__new__(TangleGraph)
        g.difficulty_bits = self.difficulty_bits
        g.genesis = self.genesis
        g.allocation = dict(self.allocation)
        g.transactions = dict(self.transactions)
        g.approvers = {h: set(s) for h, s in self.approvers.items()}
        g.tips = set(self.tips)
        g.milestones = list(self.milestones)
        g.rank = dict(self.rank)
        g.order = list(self.order)
        g._by_address = {a: list(hs) for a, hs in self._by_address.items()}
        g.lock = threading.RLock()
        return g


def _short(h: bytes) -> str:
    return h.hex()[:12]


def write_snapshot(graph: TangleGraph, path: str | Path) -> None:
    """One JSON transaction per line, sorted by (topological rank, hash)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for h in graph.topological_order():
            f.write(json.dumps(graph.transactions[h].to_dict(), sort_keys=True) + "\n")


def read_snapshot(path: str | Path, difficulty_bits: int = 0) -> TangleGraph:
    graph = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            d = json.loads(line)
            tx = Transaction.from_dict(d)
            if tx.hash.hex() != d["hash"]:
                raise TangleError(f"line {lineno}: hash does not match contents")
            if graph is None:
                if tx.trunk != NULL_HASH:
                    raise TangleError("snapshot must start with the genesis transaction")
                graph = TangleGraph(genesis=tx, difficulty_bits=difficulty_bits)
            else:
                graph.append(tx)
    if graph is None:
        raise TangleError(f"{path}: empty snapshot")
    return graph
