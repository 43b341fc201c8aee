"""Command-line entry point.

Subcommands: ``bench-tx``, ``bench-mam``, ``attack``, ``mam publish|fetch``
and ``sim run``.  Every command accepts ``--config <json>``; explicit flags
override file values.  Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import bench, mam, netsim
from . import pow as _pow
from .tangle import TangleError, TangleGraph, read_snapshot, write_snapshot
from .tipselect import WalkConfig, derive_seed

log = logging.getLogger("tanglesim")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
SEED_ENV = "TANGLESIM_SEED"


class UsageError(Exception):
    pass


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _key(s: str) -> bytes:
    try:
        key = bytes.fromhex(s)
    except ValueError:
        key = b""
    if len(key) != mam.KEY_SIZE:
        raise argparse.ArgumentTypeError("key must be 64 hex characters")
    return key


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--difficulty-bits", type=int)
    common.add_argument("--interval-ms", type=int)
    common.add_argument("--out-dir", type=Path)
    common.add_argument("--real-pow", action="store_true", default=None,
                        help="time the attach stage from actual nonce attempts")
    common.add_argument("--accelerated", action="store_true", default=None,
                        help="model a hardware PoW accelerator (300 ms per transaction)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tanglesim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    bt = sub.add_parser("bench-tx", parents=[common], help="stage-decomposed transaction latency trials")
    bt.add_argument("--message", action="append", help="u, m or literal trytes (repeatable)")
    bt.add_argument("--node", action="append", help="node profile name (repeatable)")
    bt.add_argument("--n", type=_positive_int)

    bm = sub.add_parser("bench-mam", parents=[common], help="five-stage MAM latency trials")
    bm.add_argument("--message", action="append")
    bm.add_argument("--node", action="append")
    bm.add_argument("--n", type=_positive_int)
    bm.add_argument("--key", type=_key)

    at = sub.add_parser("attack", parents=[common], help="double-spend attack against the coordinator")
    at.add_argument("--runs", type=_positive_int)
    at.add_argument("--attacker-txs", type=int)

    mm = sub.add_parser("mam", help="publish to or fetch from a MAM channel")
    msub = mm.add_subparsers(dest="mam_command", required=True)
    pub = msub.add_parser("publish", parents=[common])
    pub.add_argument("--snapshot", type=Path, required=True)
    pub.add_argument("--key", type=_key)
    src = pub.add_mutually_exclusive_group()
    src.add_argument("--text")
    src.add_argument("--file", type=Path)
    fe = msub.add_parser("fetch", parents=[common])
    fe.add_argument("--snapshot", type=Path, required=True)
    fe.add_argument("--key", type=_key, required=True)
    fe.add_argument("--index", type=int, required=True)

    sm = sub.add_parser("sim", help="discrete-event scenarios")
    ssub = sm.add_subparsers(dest="sim_command", required=True)
    ssub.add_parser("run", parents=[common])
    return p


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge defaults < config file < explicit flags."""
    cfg = dict(defaults)
    if args.config is not None:
        try:
            cfg.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from e
    flags = {
        "seed": args.seed,
        "alpha": args.alpha,
        "difficulty_bits": args.difficulty_bits,
        "interval_ms": args.interval_ms,
        "out_dir": None if args.out_dir is None else str(args.out_dir),
        "real_pow": args.real_pow,
        "accelerated": args.accelerated,
    }
    for name in ("n", "runs", "attacker_txs", "message", "node"):
        if hasattr(args, name):
            flags[name] = getattr(args, name)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    if cfg.get("seed") is None:
        cfg["seed"] = int(os.environ.get(SEED_ENV, "0"))
    for name in ("n", "runs"):
        if name in cfg and int(cfg[name]) < 1:
            raise UsageError(f"{name} must be >= 1")
    log.info("resolved config: %s", json.dumps(cfg, sort_keys=True))
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _nodes(cfg: dict) -> dict[str, netsim.NodeProfile]:
    try:
        nodes = dict(netsim.PRESETS[cfg.get("preset", "paper-like")]())
    except KeyError as e:
        raise UsageError(f"unknown preset {e}") from e
    for name, nd in cfg.get("nodes", {}).items():
        nodes[name] = netsim.NodeProfile.from_dict(nd, name)
    return nodes


def _walk(cfg: dict) -> WalkConfig:
    return WalkConfig(alpha=float(cfg.get("alpha", 0.001)), start=cfg.get("start", "latest-milestone"),
                      rng_seed=int(cfg["seed"]))


def _pow_cfg(cfg: dict) -> _pow.PowConfig:
    return _pow.PowConfig(int(cfg.get("difficulty_bits", _pow.DEFAULT_DIFFICULTY)),
                          bool(cfg.get("accelerated", False)))


def _run_bench(cfg: dict, kind: str, graph_hook=None) -> int:
    nodes = _nodes(cfg)
    labels = cfg["message"]
    names = cfg["node"]
    stages = netsim.MAM_STAGES if kind == "mam" else netsim.TX_STAGES
    key = cfg.get("key")
    if kind == "mam" and key is None:
        key = bench.default_channel_key(int(cfg["seed"]))
        print(f"channel key: {key.hex()}")
    records = []
    for label in labels:
        for name in names:
            if name not in nodes:
                raise UsageError(f"unknown node {name!r}; known: {sorted(nodes)}")
            sc = bench.TrialScenario(
                node=nodes[name],
                kind=kind,
                message_label=label,
                walk=_walk(cfg),
                pow=_pow_cfg(cfg),
                attach_source="real-pow" if cfg.get("real_pow") else cfg.get("attach_source", "model"),
                background_txs=int(cfg.get("background_txs", 20)),
                channel_key=key,
            )
            records += bench.run_trials(sc, int(cfg["n"]), int(cfg["seed"]), graph_hook)
    out = _out_dir(cfg)
    prefix = "mam_" if kind == "mam" else "tx_"
    bench.write_records_csv(records, out / f"{prefix}records.csv")
    bench.write_summary_csv(records, stages, out / f"{prefix}summary.csv")
    bench.write_cdf_csv(records, stages, out / f"{prefix}cdf.csv")
    for row in bench.summary_rows(records, stages):
        print("{}\t{}\t{:<16}\tmedian={}\tmean={}".format(row[0][:16], row[1], row[2], row[5], row[4]))
    return EXIT_OK


def cmd_bench_tx(args, graph_hook=None) -> int:
    cfg = resolve(args, {"n": 100, "message": ["u", "m"], "node": ["A", "B"]})
    return _run_bench(cfg, "tx", graph_hook)


def cmd_bench_mam(args, graph_hook=None) -> int:
    cfg = resolve(args, {"n": 100, "message": ["u"], "node": ["mam"]})
    if args.key is not None:
        cfg["key"] = args.key
    elif isinstance(cfg.get("key"), str):
        cfg["key"] = _key(cfg["key"])
    return _run_bench(cfg, "mam", graph_hook)


def attack_run(attacker_txs: int, seed: int, cfg: dict) -> dict:
    sc = netsim.double_spend_scenario(
        attacker_txs,
        difficulty_bits=int(cfg.get("difficulty_bits", _pow.DEFAULT_DIFFICULTY)),
        alpha=float(cfg.get("alpha", 0.001)),
        interval_ms=int(cfg.get("interval_ms", 60_000)),
    )
    ids = {a.id: i for i, a in enumerate(sc.arrivals) if a.id}
    result = netsim.run_scenario(sc, seed)
    confirmed = result.confirmed()
    a = result.heads[ids["spend_a"]] in confirmed
    b = result.heads[ids["spend_b"]] in confirmed
    return {
        "seed": seed,
        "spend_a_confirmed": a,
        "spend_b_confirmed": b,
        "both_confirmed": a and b,
        "milestones": len(result.graph.milestones),
        "transactions": len(result.graph),
    }


def cmd_attack(args) -> int:
    cfg = resolve(args, {"runs": 100, "attacker_txs": 20})
    if int(cfg["attacker_txs"]) < 0:
        raise UsageError("attacker_txs must be >= 0")
    rows = []
    for run in range(int(cfg["runs"])):
        seed = derive_seed(int(cfg["seed"]), "attack", run)
        row = {"run": run, **attack_run(int(cfg["attacker_txs"]), seed, cfg)}
        rows.append(row)
    out = _out_dir(cfg)
    with open(out / "attack_report.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    both = sum(r["both_confirmed"] for r in rows)
    report = {
        "runs": len(rows),
        "attacker_txs": int(cfg["attacker_txs"]),
        "spend_a_confirmed": sum(r["spend_a_confirmed"] for r in rows),
        "spend_b_confirmed": sum(r["spend_b_confirmed"] for r in rows),
        "both_confirmed": both,
    }
    (out / "attack_summary.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if both == 0 else EXIT_FAILURE


def cmd_mam(args) -> int:
    cfg = resolve(args, {})
    difficulty = int(cfg.get("difficulty_bits", _pow.DEFAULT_DIFFICULTY))
    if args.mam_command == "fetch":
        graph = read_snapshot(args.snapshot, difficulty)
        sys.stdout.buffer.write(mam.fetch(graph, args.key, args.index))
        sys.stdout.flush()
        return EXIT_OK

    if args.snapshot.exists():
        graph = read_snapshot(args.snapshot, difficulty)
    else:
        graph = TangleGraph(difficulty_bits=difficulty)
    key = args.key
    if key is None:
        key = os.urandom(mam.KEY_SIZE)
        print(f"generated channel key: {key.hex()}")
    if args.text is not None:
        plaintext = args.text.encode()
    elif args.file is not None:
        plaintext = args.file.read_bytes()
    else:
        plaintext = sys.stdin.buffer.read()
    index = mam.next_free_index(graph, key)
    channel = mam.MamChannel(key, index)
    seed = derive_seed(int(cfg["seed"]), "mam", index, len(graph))
    hashes = mam.publish(graph, channel, plaintext, _walk(dict(cfg, seed=seed)), _pow_cfg(cfg),
                         timestamp=len(graph))
    write_snapshot(graph, args.snapshot)
    print(f"index: {index}")
    print(f"address: {mam.message_address(key, index)}")
    for h in hashes:
        print(f"tx: {h.hex()}")
    return EXIT_OK


def cmd_sim_run(args) -> int:
    cfg = resolve(args, {})
    seed = int(cfg["seed"])
    sc_dict = {k: v for k, v in cfg.items()
               if k not in ("seed", "out_dir", "alpha", "difficulty_bits", "interval_ms",
                            "real_pow", "accelerated")}
    if "alpha" in cfg:
        sc_dict.setdefault("walk", {})["alpha"] = cfg["alpha"]
    if "difficulty_bits" in cfg or "accelerated" in cfg:
        p = sc_dict.setdefault("pow", {})
        p.update({k: cfg[k] for k in ("difficulty_bits", "accelerated") if k in cfg})
    # Milestones are on unless the config sets "coordinator": null.
    sc_dict.setdefault("coordinator", {})
    if "interval_ms" in cfg and sc_dict["coordinator"] is not None:
        sc_dict["coordinator"]["interval_ms"] = cfg["interval_ms"]
    if cfg.get("real_pow"):
        sc_dict["attach_source"] = "real-pow"
    scenario = netsim.Scenario.from_dict(sc_dict)
    result = netsim.run_scenario(scenario, seed)
    out = _out_dir(cfg)
    (out / "events.jsonl").write_text(result.events_jsonl(), encoding="utf-8")
    write_snapshot(result.graph, out / "snapshot.jsonl")
    kinds = {}
    for e in result.events:
        kinds[e["event_kind"]] = kinds.get(e["event_kind"], 0) + 1
    print(json.dumps({"transactions": len(result.graph), "events": kinds}, sort_keys=True))
    return EXIT_OK


def main(argv=None, graph_hook=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bench-tx":
            return cmd_bench_tx(args, graph_hook)
        if args.command == "bench-mam":
            return cmd_bench_mam(args, graph_hook)
        if args.command == "attack":
            return cmd_attack(args)
        if args.command == "mam":
            return cmd_mam(args)
        return cmd_sim_run(args)
    except (UsageError, netsim.ConfigError) as e:
        print(f"tanglesim: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TangleError, OSError, ValueError) as e:
        print(f"tanglesim: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
