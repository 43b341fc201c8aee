"""
Building a small tangle by hand
===============================

Every transaction approves two earlier ones.  Here we grow a tangle from
genesis, look at cumulative weights, then let the coordinator drop a
milestone and see which transactions it confirms.
"""

from tanglesim import MilestonePolicy, PowConfig, TangleGraph, WalkConfig, issue_milestone, solve
from tanglesim.tipselect import select_two_tips
from tanglesim.transaction import Transaction

graph = TangleGraph({"ALICE": 50, "BOB": 50}, difficulty_bits=8)
pow_cfg = PowConfig(8)
walk_cfg = WalkConfig(alpha=0.5, rng_seed=1)

# Ten plain data transactions, each approving two walked tips.
for i in range(10):
    trunk, branch = select_two_tips(graph, WalkConfig(0.5, rng_seed=i))
    tx = Transaction(trunk=trunk, branch=branch, payload="HELLO9TANGLE", address=f"SENSOR{i}", timestamp=i)
    graph.append(solve(tx, pow_cfg, seed=i))

print(f"{len(graph)} transactions, {len(graph.tips)} tips")

# Weight of a transaction = itself plus everything that approves it.
for h in graph.topological_order()[:4]:
    print(h.hex()[:12], "weight", graph.cumulative_weight(h))

# Nothing is confirmed until a milestone exists.
print("confirmed before milestone:", len(graph.confirmed_set()))

ms = issue_milestone(graph, MilestonePolicy(b"k" * 32), walk_cfg, now=60_000)
graph.append(ms)
print("confirmed after milestone:", len(graph.confirmed_set()))

# A value transfer is a transaction with a sender and a value.
trunk, branch = select_two_tips(graph, WalkConfig(0.5, rng_seed=99))
pay = Transaction(trunk=trunk, branch=branch, address="BOB", sender="ALICE", value=20, timestamp=20)
graph.append(solve(pay, pow_cfg, seed=99))
print("all balances:", graph.ledger_balances("all").balances)
print("confirmed balances:", graph.ledger_balances("confirmed").balances)
