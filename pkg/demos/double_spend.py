"""
A double spend against the coordinator
======================================

An attacker holding 100 tokens pays two merchants 1 ms apart, then keeps
issuing transactions that extend both spends.  Both spends sit in the
tangle; the coordinator never confirms both.  Usually it confirms neither:
once anything approves the two rivals together, milestones route around that
whole subtangle while later honest traffic keeps getting confirmed.
"""

from tanglesim import netsim

scenario = netsim.double_spend_scenario(attacker_txs=20, difficulty_bits=8)
ids = {a.id: i for i, a in enumerate(scenario.arrivals) if a.id}

for seed in range(5):
    result = netsim.run_scenario(scenario, seed)
    a = result.heads[ids["spend_a"]]
    b = result.heads[ids["spend_b"]]
    confirmed = result.confirmed()
    honest = [result.heads[i] for i, arr in enumerate(scenario.arrivals)
              if arr.kind == "tx" and not arr.id and arr.time_ms > 30_001]
    print(f"seed {seed}: conflicting={result.graph.conflicts(a, b)}  "
          f"a confirmed={a in confirmed}  b confirmed={b in confirmed}  "
          f"honest after attack confirmed={sum(h in confirmed for h in honest)}/{len(honest)}")
    print("   confirmed ledger:", result.graph.ledger_balances("confirmed").balances)
