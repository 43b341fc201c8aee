"""
Stage-decomposed latency
========================

Run 100 simulated trials per node and message size, then summarize each
stage with box-plot statistics and read a point off the CDF.
"""

from tanglesim import bench, netsim

nodes = netsim.paper_like_nodes()
for name in ("A", "B"):
    for label in ("u", "m"):
        recs = bench.run_trials(bench.TrialScenario(nodes[name], message_label=label), 100, seed=7)
        parts = []
        for stage in netsim.TX_STAGES:
            s = bench.summarize(recs, stage)
            parts.append(f"{stage}={s.median:6.0f}")
        below = bench.fraction_below(recs, netsim.ATTACH, 11_000)
        print(f"node {name} msg {label} ({recs[0].transactions} tx): {'  '.join(parts)}"
              f"  attach<11s {below:.0%}")

mam = bench.run_trials(bench.TrialScenario(nodes["mam"], kind="mam"), 100, seed=7)
print("MAM stage means:", {s: round(bench.summarize(mam, s).mean) for s in netsim.MAM_STAGES})
