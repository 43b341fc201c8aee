"""Desk-scale Tangle ledger: DAG, MCMC tip selection, proof-of-work,
coordinator milestones, masked authenticated messaging and a latency
benchmark harness."""

from .coordinator import MilestonePolicy, issue_milestone, verify_milestone
from .mam import MamChannel, fetch, publish
from .pow import PowConfig, solve, verify
from .tangle import LedgerState, TangleGraph, read_snapshot, write_snapshot
from .tipselect import WalkConfig, select_two_tips, walk
from .transaction import Transaction
from .trinary import bytes_to_trytes, segment_payload, trytes_to_bytes

__all__ = [
    "LedgerState", "MamChannel", "MilestonePolicy", "PowConfig", "TangleGraph", "Transaction",
    "WalkConfig", "bytes_to_trytes", "fetch", "issue_milestone", "publish", "read_snapshot",
    "segment_payload", "select_two_tips", "solve", "trytes_to_bytes", "verify",
    "verify_milestone", "walk", "write_snapshot",
]
__version__ = "0.1.0"
