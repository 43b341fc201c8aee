"""Trial runner and latency statistics (box-plot summaries, empirical CDFs, CSV)."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import pow as _pow
from .netsim import (
    MAM_STAGES,
    TX_STAGES,
    Arrival,
    NodeProfile,
    Scenario,
    Simulation,
    message_trytes,
    populate_background,
)
from .tangle import TangleGraph
from .tipselect import WalkConfig, derive_seed

TOTAL = "total"
RECORD_COLUMNS = ("trial_id", "message_label", "node", "stage", "duration_ms")
SUMMARY_COLUMNS = ("message_label", "node", "stage", "count", "mean", "median", "q1", "q3",
                   "iqr", "whisker_lo", "whisker_hi", "n_outliers")
CDF_COLUMNS = ("message_label", "node", "stage", "duration_ms", "fraction")

# Plaintext sizes whose MAM payloads land on either side of one chunk.
MAM_PLAINTEXT_BYTES = {"u": 530, "m": 1186}


class EmptyInput(ValueError):
    pass


class UnknownStage(KeyError):
    pass


@dataclass
class TrialRecord:
    trial_id: int
    message_label: str
    node: str
    stage_durations: dict[str, float]
    # Not part of the CSV schema.
    transactions: int = field(default=1, compare=False)

    @property
    def total_ms(self) -> float:
        return sum(self.stage_durations.values())


@dataclass(frozen=True)
class SummaryStats:
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple[float, ...]
    mean: float
    count: int


@dataclass
class TrialScenario:
    node: NodeProfile
    kind: str = "tx"
    message_label: str = "u"
    walk: WalkConfig = field(default_factory=WalkConfig)
    pow: _pow.PowConfig = field(default_factory=_pow.PowConfig)
    attach_source: str = "model"
    background_txs: int = 20
    channel_key: bytes | None = None
    plaintext: bytes | None = None

    def __post_init__(self):
        if self.kind not in ("tx", "mam"):
            raise ValueError(f"unknown trial kind {self.kind!r}")

    @property
    def stages(self) -> tuple[str, ...]:
        return MAM_STAGES if self.kind == "mam" else TX_STAGES


def mam_plaintext(label: str) -> bytes:
    size = MAM_PLAINTEXT_BYTES.get(label)
    if size is None:
        return label.encode()
    out = b""
    block = 0
    while len(out) < size:
        out += hashlib.sha256(f"plaintext-{label}-{block}".encode()).digest()
        block += 1
    return out[:size]


def default_channel_key(seed: int) -> bytes:
    return hashlib.sha256(f"channel-{seed}".encode()).digest()


def _arrival(sc: TrialScenario, seed: int) -> Arrival:
    if sc.kind == "tx":
        return Arrival(0.0, sc.node.name, "tx", payload=message_trytes(sc.message_label),
                       address="BENCHMARK")
    key = sc.channel_key or default_channel_key(seed)
    text = sc.plaintext if sc.plaintext is not None else mam_plaintext(sc.message_label)
    return Arrival(0.0, sc.node.name, "mam", channel_key=key.hex(), plaintext=text)


def run_trials(sc: TrialScenario, n: int, seed: int, graph_hook=None) -> list[TrialRecord]:
    """Run ``n`` independent trials, each on a fresh copy of one seeded background tangle."""
    if n < 1:
        raise ValueError("n must be >= 1")
    base = TangleGraph(difficulty_bits=sc.pow.difficulty_bits)
    populate_background(base, sc.background_txs, sc.pow, derive_seed(seed, "background"))
    scenario = Scenario(
        nodes={sc.node.name: sc.node},
        arrivals=[_arrival(sc, seed)],
        walk=sc.walk,
        pow=sc.pow,
        attach_source=sc.attach_source,
    )
    records = []
    for i in range(n):
        trial_seed = derive_seed(seed, "trial", sc.kind, sc.message_label, sc.node.name, i)
        result = Simulation(scenario, trial_seed, base, graph_hook).run()
        durations = {}
        for e in result.events:
            if e["event_kind"] == "stage":
                durations[e["stage"]] = e["duration_ms"]
        missing = set(sc.stages) - set(durations)
        if missing:
            raise RuntimeError(f"trial {i} did not complete stages {sorted(missing)}")
        records.append(TrialRecord(
            trial_id=i,
            message_label=sc.message_label,
            node=sc.node.name,
            stage_durations={s: durations[s] for s in sc.stages},
            transactions=len(result.bundles[0]),
        ))
    return records


def stage_values(records: Sequence[TrialRecord], stage: str) -> list[float]:
    if not records:
        raise EmptyInput("no records")
    if stage == TOTAL:
        return [r.total_ms for r in records]
    vals = [r.stage_durations[stage] for r in records if stage in r.stage_durations]
    if not vals:
        raise UnknownStage(stage)
    return vals


def summarize_values(values) -> SummaryStats:
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise EmptyInput("no values")
    # Linear interpolation between order statistics (numpy's default).
    q1, median, q3 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    outliers = x[(x < lo_fence) | (x > hi_fence)]
    return SummaryStats(
        median=median,
        q1=q1,
        q3=q3,
        iqr=iqr,
        whisker_lo=float(inside.min()),
        whisker_hi=float(inside.max()),
        outliers=tuple(float(v) for v in outliers),
        mean=float(x.mean()),
        count=int(x.size),
    )


def summarize(records: Sequence[TrialRecord], stage: str = TOTAL) -> SummaryStats:
    return summarize_values(stage_values(records, stage))


def cdf_values(values) -> list[tuple[float, float]]:
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise EmptyInput("no values")
    distinct, counts = np.unique(x, return_counts=True)
    fractions = np.cumsum(counts) / x.size
    return [(float(v), float(f)) for v, f in zip(distinct, fractions)]


def cdf(records: Sequence[TrialRecord], stage: str) -> list[tuple[float, float]]:
    return cdf_values(stage_values(records, stage))


def fraction_below(records: Sequence[TrialRecord], stage: str, threshold: float) -> float:
    vals = stage_values(records, stage)
    return sum(v < threshold for v in vals) / len(vals)


# -- CSV ---------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _writer(path):
    f = open(path, "w", encoding="utf-8", newline="")
    return f, csv.writer(f, lineterminator="\n")


def write_records_csv(records: Sequence[TrialRecord], path: str | Path) -> None:
    f, w = _writer(path)
    with f:
        w.writerow(RECORD_COLUMNS)
        for r in records:
            for stage, d in r.stage_durations.items():
                w.writerow((r.trial_id, r.message_label, r.node, stage, _fmt(d)))


def read_records_csv(path: str | Path) -> list[TrialRecord]:
    records: dict[tuple, TrialRecord] = {}
    with open(path, encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            key = (int(row["trial_id"]), row["message_label"], row["node"])
            rec = records.get(key)
            if rec is None:
                rec = records[key] = TrialRecord(key[0], key[1], key[2], {})
            rec.stage_durations[row["stage"]] = float(row["duration_ms"])
    return list(records.values())


def summary_rows(records: Sequence[TrialRecord], stages: Sequence[str]) -> list[tuple]:
    rows = []
    groups: dict[tuple[str, str], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.message_label, r.node), []).append(r)
    for (label, node), recs in groups.items():
        for stage in list(stages) + [TOTAL]:
            s = summarize(recs, stage)
            rows.append((label, node, stage, s.count, _fmt(s.mean), _fmt(s.median), _fmt(s.q1),
                         _fmt(s.q3), _fmt(s.iqr), _fmt(s.whisker_lo), _fmt(s.whisker_hi),
                         len(s.outliers)))
    return rows


def write_summary_csv(records: Sequence[TrialRecord], stages: Sequence[str], path) -> None:
    f, w = _writer(path)
    with f:
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(summary_rows(records, stages))


def write_cdf_csv(records: Sequence[TrialRecord], stages: Sequence[str], path) -> None:
    groups: dict[tuple[str, str], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.message_label, r.node), []).append(r)
    f, w = _writer(path)
    with f:
        w.writerow(CDF_COLUMNS)
        for (label, node), recs in groups.items():
            for stage in stages:
                for v, frac in cdf(recs, stage):
                    w.writerow((label, node, stage, _fmt(v), _fmt(frac)))


def export_csv(obj, path, stages: Sequence[str] = TX_STAGES) -> None:
    """Write records, a single summary, or CDF points, picking the schema by type."""
    if isinstance(obj, SummaryStats):
        f, w = _writer(path)
        with f:
            w.writerow(("median", "q1", "q3", "iqr", "whisker_lo", "whisker_hi", "n_outliers",
                        "mean", "count"))
            w.writerow((_fmt(obj.median), _fmt(obj.q1), _fmt(obj.q3), _fmt(obj.iqr),
                        _fmt(obj.whisker_lo), _fmt(obj.whisker_hi), len(obj.outliers),
                        _fmt(obj.mean), obj.count))
    elif obj and isinstance(obj[0], tuple):
        f, w = _writer(path)
        with f:
            w.writerow(("duration_ms", "fraction"))
            w.writerows((_fmt(v), _fmt(p)) for v, p in obj)
    else:
        write_records_csv(obj, path)
