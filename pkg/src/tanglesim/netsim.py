"""Deterministic discrete-event simulation of nodes attaching to the Tangle.

Arrivals go through staged pipelines whose durations come from per-node
latency models:

    plain transaction: tip_selection -> attach_to_tangle -> broadcast
    MAM message:       encoding -> tip_selection -> attach_to_tangle
                       -> broadcast -> get_message

The walk and the nonce search really run, at the simulated instant the
tip-selection stage begins; the transactions are appended when broadcast
completes.  A coordinator issues a milestone every ``interval_ms``.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from . import mam
from . import pow as _pow
from .bundle import SolvedBundle, build_bundle
from .coordinator import MilestonePolicy, issue_milestone
from .tangle import TangleGraph
from .tipselect import START_GENESIS, TipWalker, WalkConfig, derive_seed, select_two_tips
from .trinary import ALPHABET

ENCODING = "encoding"
TIP_SELECTION = "tip_selection"
ATTACH = "attach_to_tangle"
BROADCAST = "broadcast"
GET_MESSAGE = "get_message"

STAGES = (ENCODING, TIP_SELECTION, ATTACH, BROADCAST, GET_MESSAGE)
TX_STAGES = (TIP_SELECTION, ATTACH, BROADCAST)
MAM_STAGES = STAGES
LOADED_STAGES = frozenset({TIP_SELECTION, BROADCAST})

ATTACH_SOURCES = ("model", "real-pow", "wallclock")

MESSAGE_SIZES = {"u": 1093, "m": 2405}


class ConfigError(ValueError):
    pass


class UnknownStage(KeyError):
    pass


# -- latency distributions ---------------------------------------------------

@dataclass(frozen=True)
class Constant:
    ms: float

    def __post_init__(self):
        if not self.ms > 0:
            raise ConfigError("constant latency must be positive")

    def sample(self, rng: random.Random) -> float:
        return float(self.ms)

    @property
    def mean(self) -> float:
        return float(self.ms)

    def to_dict(self):
        return {"kind": "constant", "ms": self.ms}


@dataclass(frozen=True)
class Uniform:
    lo_ms: float
    hi_ms: float

    def __post_init__(self):
        if not 0 < self.lo_ms <= self.hi_ms:
            raise ConfigError("uniform latency needs 0 < lo <= hi")

    def sample(self, rng: random.Random) -> float:
        return rng.uniform(self.lo_ms, self.hi_ms)

    @property
    def mean(self) -> float:
        return (self.lo_ms + self.hi_ms) / 2

    def to_dict(self):
        return {"kind": "uniform", "lo_ms": self.lo_ms, "hi_ms": self.hi_ms}


@dataclass(frozen=True)
class LogNormal:
    median_ms: float
    sigma: float

    def __post_init__(self):
        if not (self.median_ms > 0 and self.sigma > 0):
            raise ConfigError("lognormal latency needs positive median and sigma")

    def sample(self, rng: random.Random) -> float:
        return rng.lognormvariate(math.log(self.median_ms), self.sigma)

    @property
    def mean(self) -> float:
        return self.median_ms * math.exp(self.sigma ** 2 / 2)

    def to_dict(self):
        return {"kind": "lognormal", "median_ms": self.median_ms, "sigma": self.sigma}


_DISTS = {"constant": Constant, "uniform": Uniform, "lognormal": LogNormal}


def dist_from_dict(d) -> Constant | Uniform | LogNormal:
    if isinstance(d, (int, float)):
        return Constant(d)
    try:
        kind = d["kind"]
        params = {k: v for k, v in d.items() if k != "kind"}
        return _DISTS[kind](**params)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad latency distribution {d!r}") from e


LatencyModel = dict  # stage name -> distribution


@dataclass(frozen=True)
class NodeProfile:
    name: str
    latency: LatencyModel
    load_factor: float = 1.0
    # Nonce attempts per second, used by the "real-pow" attach source.
    hash_rate: float = 2000.0

    def __post_init__(self):
        if not self.load_factor >= 1:
            raise ConfigError(f"node {self.name}: load_factor must be >= 1")
        if not self.hash_rate > 0:
            raise ConfigError(f"node {self.name}: hash_rate must be positive")
        unknown = set(self.latency) - set(STAGES)
        if unknown:
            raise ConfigError(f"node {self.name}: unknown stages {sorted(unknown)}")

    def to_dict(self):
        return {
            "name": self.name,
            "latency": {s: d.to_dict() for s, d in self.latency.items()},
            "load_factor": self.load_factor,
            "hash_rate": self.hash_rate,
        }

    @classmethod
    def from_dict(cls, d: dict, name: str | None = None) -> NodeProfile:
        try:
            return cls(
                name=d.get("name", name),
                latency={s: dist_from_dict(v) for s, v in d["latency"].items()},
                load_factor=float(d.get("load_factor", 1.0)),
                hash_rate=float(d.get("hash_rate", 2000.0)),
            )
        except KeyError as e:
            raise ConfigError(f"node profile missing {e}") from e


def sample_stage(model: LatencyModel, stage: str, node: NodeProfile, rng: random.Random) -> float:
    try:
        dist = model[stage]
    except KeyError:
        raise UnknownStage(stage) from None
    x = dist.sample(rng)
    if stage in LOADED_STAGES:
        x *= node.load_factor
    return x


# -- presets -----------------------------------------------------------------

# Per-chunk attach: median 7 s, sigma 0.68 puts 75% of one-chunk attaches and
# 25% of two-chunk attaches under 11 s.
_ATTACH = LogNormal(7000.0, 0.68)
# Mean attempts at 14 bits / mean of _ATTACH in seconds.
_HASH_RATE = 1850.0


def paper_like_nodes() -> dict[str, NodeProfile]:
    base = {
        ENCODING: Uniform(340.0, 420.0),
        TIP_SELECTION: LogNormal(2500.0, 0.45),
        ATTACH: _ATTACH,
        BROADCAST: Constant(1000.0),
        GET_MESSAGE: Uniform(920.0, 980.0),
    }
    mam_model = dict(base, **{BROADCAST: Uniform(630.0, 670.0)})
    return {
        "A": NodeProfile("A", dict(base), load_factor=1.2, hash_rate=_HASH_RATE),
        "B": NodeProfile("B", dict(base), load_factor=1.0, hash_rate=_HASH_RATE),
        "mam": NodeProfile("mam", mam_model, load_factor=1.0, hash_rate=_HASH_RATE),
    }


def fast_nodes() -> dict[str, NodeProfile]:
    """Short constant latencies; keeps causally dependent arrivals in order."""
    model = {s: Constant(50.0) for s in STAGES}
    model[ATTACH] = Constant(200.0)
    return {name: NodeProfile(name, dict(model)) for name in ("A", "B", "mam")}


PRESETS: dict[str, Callable[[], dict[str, NodeProfile]]] = {
    "paper-like": paper_like_nodes,
    "fast": fast_nodes,
}


def message_trytes(label: str) -> str:
    """Deterministic tryte content for the named message (or literal trytes)."""
    if label not in MESSAGE_SIZES:
        return label
    n = MESSAGE_SIZES[label]
    out = []
    for block in itertools.count():
        for b in hashlib.sha256(f"message-{label}-{block}".encode()).digest():
            out.append(ALPHABET[b % 27])
        if len(out) >= n:
            return "".join(out[:n])


# -- scenario ----------------------------------------------------------------

@dataclass
class Arrival:
    time_ms: float
    node: str
    kind: str = "tx"
    id: str | None = None
    payload: str = ""
    address: str = ""
    sender: str = ""
    value: int = 0
    # Two entries, each an arrival id or "walk"; empty means normal tip selection.
    parents: list[str] = field(default_factory=list)
    channel_key: str | None = None
    plaintext: bytes = b""

    @classmethod
    def from_dict(cls, d: dict) -> Arrival:
        d = dict(d)
        if "message" in d:
            d["payload"] = message_trytes(d.pop("message"))
        if "plaintext_hex" in d:
            d["plaintext"] = bytes.fromhex(d.pop("plaintext_hex"))
        elif "text" in d:
            d["plaintext"] = d.pop("text").encode()
        try:
            a = cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad arrival {d!r}: {e}") from e
        if a.kind not in ("tx", "transfer", "mam"):
            raise ConfigError(f"unknown arrival kind {a.kind!r}")
        if a.parents and len(a.parents) != 2:
            raise ConfigError("parents must list exactly two references")
        if a.kind == "mam" and a.channel_key is None:
            raise ConfigError("mam arrival needs channel_key")
        return a

    def to_dict(self) -> dict:
        d = {"time_ms": self.time_ms, "node": self.node, "kind": self.kind}
        for k in ("id", "payload", "address", "sender", "value", "parents", "channel_key"):
            v = getattr(self, k)
            if v:
                d[k] = v
        if self.plaintext:
            d["plaintext_hex"] = self.plaintext.hex()
        return d


@dataclass
class Scenario:
    nodes: dict[str, NodeProfile]
    arrivals: list[Arrival] = field(default_factory=list)
    duration_ms: int = 0
    allocation: dict[str, int] = field(default_factory=dict)
    coordinator: MilestonePolicy | None = None
    walk: WalkConfig = field(default_factory=WalkConfig)
    pow: _pow.PowConfig = field(default_factory=_pow.PowConfig)
    attach_source: str = "model"
    background_txs: int = 0

    def __post_init__(self):
        if self.attach_source not in ATTACH_SOURCES:
            raise ConfigError(f"attach_source must be one of {ATTACH_SOURCES}")
        for a in self.arrivals:
            if a.node not in self.nodes:
                raise ConfigError(f"arrival at {a.time_ms} names unknown node {a.node!r}")
        ids = [a.id for a in self.arrivals if a.id]
        if len(ids) != len(set(ids)):
            raise ConfigError("duplicate arrival ids")

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        d = dict(d)
        try:
            nodes = dict(PRESETS[d.pop("preset", "paper-like")]())
        except KeyError as e:
            raise ConfigError(f"unknown preset {e}") from e
        for name, nd in d.pop("nodes", {}).items():
            nodes[name] = NodeProfile.from_dict(nd, name)
        coord = d.pop("coordinator", None)
        if coord is not None:
            coord = MilestonePolicy(
                authority_key=bytes.fromhex(coord.get("authority_key", "00" * 32)),
                interval_ms=int(coord.get("interval_ms", 60_000)),
            )
        w = d.pop("walk", {})
        walk = WalkConfig(alpha=float(w.get("alpha", 0.001)), start=w.get("start", "latest-milestone"))
        p = d.pop("pow", {})
        powc = _pow.PowConfig(int(p.get("difficulty_bits", _pow.DEFAULT_DIFFICULTY)),
                              bool(p.get("accelerated", False)))
        arrivals = [Arrival.from_dict(a) for a in d.pop("arrivals", [])]
        d.pop("seed", None)
        try:
            return cls(nodes=nodes, arrivals=arrivals, coordinator=coord, walk=walk, pow=powc, **d)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> dict:
        d = {
            "duration_ms": self.duration_ms,
            "allocation": dict(self.allocation),
            "nodes": {n: p.to_dict() for n, p in sorted(self.nodes.items())},
            "walk": {"alpha": self.walk.alpha, "start": self.walk.start},
            "pow": {"difficulty_bits": self.pow.difficulty_bits, "accelerated": self.pow.accelerated},
            "attach_source": self.attach_source,
            "background_txs": self.background_txs,
            "arrivals": [a.to_dict() for a in self.arrivals],
        }
        if self.coordinator is not None:
            d["coordinator"] = {
                "interval_ms": self.coordinator.interval_ms,
                "authority_key": self.coordinator.authority_key.hex(),
            }
        return d


# -- simulation --------------------------------------------------------------

@dataclass
class SimResult:
    events: list[dict]
    graph: TangleGraph
    heads: dict[int, bytes]  # arrival position -> head transaction hash
    bundles: dict[int, list[bytes]]

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e) + "\n" for e in self.events)

    def confirmed(self) -> set[bytes]:
        return {bytes.fromhex(e["tx_hash"]) for e in self.events if e["event_kind"] == "confirmed"}


class Simulation:
    def __init__(self, scenario: Scenario, seed: int, graph: TangleGraph | None = None,
                 graph_hook: Callable[[TangleGraph], None] | None = None):
        self.scenario = scenario
        self.seed = seed
        if graph is None:
            graph = TangleGraph(scenario.allocation, difficulty_bits=scenario.pow.difficulty_bits)
            populate_background(graph, scenario.background_txs, scenario.pow, derive_seed(seed, "bg"))
        else:
            graph = graph.copy()
        self.graph = graph
        self.graph_hook = graph_hook
        self.now = 0.0
        self.events: list[dict] = []
        self.heads: dict[int, bytes] = {}
        self.bundles: dict[int, list[bytes]] = {}
        self._queue: list = []
        self._seq = itertools.count()
        self._ids: dict[str, int] = {}
        self._channels: dict[str, mam.MamChannel] = {}
        self._confirmed: set[bytes] = set()
        self._arrival_event: dict[int, int] = {}

    def schedule(self, t: float, fn, *args):
        if t < self.now:
            raise RuntimeError("cannot schedule into the past")
        heapq.heappush(self._queue, (t, next(self._seq), fn, args))

    def log(self, node, kind, tx_hash=None, stage=None, duration=None):
        self.events.append({
            "time_ms": round(self.now, 3),
            "node": node,
            "event_kind": kind,
            "tx_hash": tx_hash.hex() if tx_hash else None,
            "stage": stage,
            "duration_ms": None if duration is None else round(duration, 3),
        })

    def run(self) -> SimResult:
        sc = self.scenario
        if sc.coordinator is not None:
            n = int(sc.duration_ms // sc.coordinator.interval_ms)
            for k in range(1, n + 1):
                self.schedule(k * sc.coordinator.interval_ms, self._milestone, k)
        for pos, a in enumerate(sc.arrivals):
            if a.id:
                self._ids[a.id] = pos
            self.schedule(a.time_ms, self._arrive, pos)
        while self._queue:
            t, _, fn, args = heapq.heappop(self._queue)
            self.now = t
            fn(*args)
        return SimResult(self.events, self.graph, self.heads, self.bundles)

    def _rng(self, *labels) -> random.Random:
        return random.Random(derive_seed(self.seed, *labels))

    def _arrive(self, pos: int):
        a = self.scenario.arrivals[pos]
        node = self.scenario.nodes[a.node]
        self._arrival_event[pos] = len(self.events)
        self.log(a.node, "arrival")
        if a.kind == "mam":
            ch = self._channels.setdefault(a.channel_key, mam.MamChannel.from_hex(a.channel_key))
            index = ch.next_index
            address, payload = mam.encode(ch, a.plaintext)
            d = sample_stage(node.latency, ENCODING, node, self._rng(pos, ENCODING))
            self.schedule(self.now + d, self._begin_attach, pos, address, payload, (ENCODING, d), index)
        else:
            self._begin_attach(pos, a.address, a.payload, None, None)

    def _resolve_parents(self, pos: int, a: Arrival) -> tuple[bytes, bytes]:
        cfg = WalkConfig(self.scenario.walk.alpha, self.scenario.walk.start, derive_seed(self.seed, pos, "walk"))
        if not a.parents:
            return select_two_tips(self.graph, cfg)
        out = []
        for i, ref in enumerate(a.parents):
            if ref == "walk":
                out.append(TipWalker(self.graph, cfg).walk(random.Random(derive_seed(cfg.rng_seed, i))))
            else:
                target = self._ids.get(ref)
                if target is None:
                    raise ConfigError(f"arrival {a.id or pos} references unknown id {ref!r}")
                head = self.heads.get(target)
                if head is None or head not in self.graph:
                    raise ConfigError(f"arrival {a.id or pos} references {ref!r} before it is attached")
                out.append(self.bundles[target][-1])
        return out[0], out[1]

    def _begin_attach(self, pos, address, payload, pre_stage, mam_index):
        sc = self.scenario
        a = sc.arrivals[pos]
        node = sc.nodes[a.node]
        trunk, branch = self._resolve_parents(pos, a)
        t0 = time.perf_counter()
        solved = build_bundle(payload, address, trunk, branch, pow_cfg=sc.pow,
                              seed=derive_seed(self.seed, pos, "pow"), timestamp=int(self.now),
                              sender=a.sender, value=a.value)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        head = solved.head
        self.heads[pos] = head
        self.bundles[pos] = solved.hashes
        # The arrival event predates the hash; fill it in now.
        self.events[self._arrival_event[pos]]["tx_hash"] = head.hex()
        if pre_stage is not None:
            self.log(a.node, "stage", head, *pre_stage)

        ts = sample_stage(node.latency, TIP_SELECTION, node, self._rng(pos, TIP_SELECTION))
        at = self._attach_duration(node, solved, wall_ms, self._rng(pos, ATTACH))
        bc = sample_stage(node.latency, BROADCAST, node, self._rng(pos, BROADCAST))
        t = self.now
        self.schedule(t + ts, self._stage, a.node, head, TIP_SELECTION, ts)
        self.schedule(t + ts + at, self._stage, a.node, head, ATTACH, at)
        self.schedule(t + ts + at + bc, self._broadcast, pos, solved, bc, mam_index)

    def _attach_duration(self, node: NodeProfile, solved: SolvedBundle, wall_ms: float,
                         rng: random.Random) -> float:
        n = len(solved.transactions)
        if self.scenario.pow.accelerated:
            return _pow.ACCELERATED_ATTACH_MS * n
        src = self.scenario.attach_source
        if src == "real-pow":
            return sum(solved.attempts) * 1000.0 / node.hash_rate
        if src == "wallclock":
            return wall_ms
        return sum(sample_stage(node.latency, ATTACH, node, rng) for _ in range(n))

    def _stage(self, node_name, head, stage, duration):
        self.log(node_name, "stage", head, stage, duration)

    def _broadcast(self, pos, solved: SolvedBundle, duration, mam_index):
        a = self.scenario.arrivals[pos]
        for tx in solved.transactions:
            self.graph.append(tx)
            self.log(a.node, "attached", tx.hash)
        self.log(a.node, "stage", solved.head, BROADCAST, duration)
        if self.graph_hook is not None:
            self.graph_hook(self.graph)
        if a.kind == "mam":
            node = self.scenario.nodes[a.node]
            d = sample_stage(node.latency, GET_MESSAGE, node, self._rng(pos, GET_MESSAGE))
            self.schedule(self.now + d, self._get_message, pos, solved.head, d, mam_index)

    def _get_message(self, pos, head, duration, index):
        a = self.scenario.arrivals[pos]
        got = mam.fetch(self.graph, bytes.fromhex(a.channel_key), index)
        if got != a.plaintext:
            raise mam.AuthFailure(f"arrival {pos}: fetched plaintext differs")
        self.log(a.node, "stage", head, GET_MESSAGE, duration)

    def _milestone(self, k: int):
        sc = self.scenario
        cfg = WalkConfig(sc.walk.alpha, sc.walk.start, derive_seed(self.seed, "coordinator", k))
        ms = issue_milestone(self.graph, sc.coordinator, cfg, int(self.now), sc.pow)
        self.graph.append(ms)
        self.log("coordinator", "milestone", ms.hash)
        cone = self.graph.past_cone(ms.hash)
        fresh = cone - self._confirmed
        self._confirmed = cone
        for h in sorted(fresh, key=lambda h: (self.graph.rank[h], h)):
            tx = self.graph.transactions[h]
            if not tx.is_milestone and h != self.graph.genesis:
                self.log("coordinator", "confirmed", h)


def populate_background(graph: TangleGraph, n: int, pow_cfg: _pow.PowConfig, seed: int) -> None:
    """Append ``n`` zero-value data transactions chosen by genesis-start walks."""
    for i in range(n):
        cfg = WalkConfig(alpha=0.0, start=START_GENESIS, rng_seed=derive_seed(seed, i))
        walker = TipWalker(graph, cfg)
        trunk = walker.walk(random.Random(derive_seed(cfg.rng_seed, 0)))
        branch = walker.walk(random.Random(derive_seed(cfg.rng_seed, 1)))
        solved = build_bundle("", f"BACKGROUND{i}", trunk, branch, pow_cfg=pow_cfg, seed=cfg.rng_seed)
        for tx in solved.transactions:
            graph.append(tx)


def run_scenario(scenario: Scenario | dict, seed: int, graph: TangleGraph | None = None,
                 graph_hook=None) -> SimResult:
    if isinstance(scenario, dict):
        scenario = Scenario.from_dict(scenario)
    return Simulation(scenario, seed, graph, graph_hook).run()


def double_spend_scenario(attacker_txs: int = 20, *, difficulty_bits: int = _pow.DEFAULT_DIFFICULTY,
                          alpha: float = 0.001, interval_ms: int = 60_000, duration_ms: int = 300_000,
                          honest_txs: int = 12, authority_key: bytes = b"\x01" * 32) -> Scenario:
    """An attacker spends its whole balance twice, 1 ms apart.

    It then appends ``attacker_txs`` transactions in a repeating pattern:
    a merge approving the heads of both spend chains (an attempt to get
    both confirmed), then one extension of each chain.
    """
    arrivals = []
    span = duration_ms - 10_000
    for i in range(honest_txs):
        arrivals.append(Arrival(time_ms=5_000 + i * span // max(1, honest_txs), node="A",
                                kind="tx", address=f"HONEST{i}"))
    arrivals.append(Arrival(30_000, "A", "transfer", id="spend_a", address="MERCHANT_A",
                            sender="ATTACKER", value=100))
    arrivals.append(Arrival(30_001, "A", "transfer", id="spend_b", address="MERCHANT_B",
                            sender="ATTACKER", value=100))
    head = {"a": "spend_a", "b": "spend_b"}
    for i in range(attacker_txs):
        aid = f"attacker{i}"
        step = i % 3
        if step == 0:
            parents = [head["a"], head["b"]]
        else:
            side = "a" if step == 1 else "b"
            parents = [head[side], head[side]]
            head[side] = aid
        arrivals.append(Arrival(31_000 + 1_000 * i, "A", "tx", id=aid, address="ATTACKER",
                                parents=parents))
    arrivals.sort(key=lambda a: a.time_ms)
    return Scenario(
        nodes=fast_nodes(),
        arrivals=arrivals,
        duration_ms=duration_ms,
        allocation={"ATTACKER": 100, "HONEST": 1000},
        coordinator=MilestonePolicy(authority_key=authority_key, interval_ms=interval_ms),
        walk=WalkConfig(alpha=alpha),
        pow=_pow.PowConfig(difficulty_bits),
    )
