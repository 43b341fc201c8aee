"""
How the random walk picks tips
==============================

The walker starts deep in the tangle and steps to an approver with
probability proportional to exp(alpha * W).  With alpha = 0 every branch is
equally likely; as alpha grows the walk sticks to the heavy side.
"""

from collections import Counter

from tanglesim import TangleGraph
from tanglesim.tipselect import START_GENESIS, TipWalker, WalkConfig, cone_weights
from tanglesim.transaction import Transaction

graph = TangleGraph()
g = graph.genesis


def add(trunk, branch, tag):
    tx = Transaction(trunk=trunk, branch=branch, address=tag)
    graph.append(tx)
    return tx.hash


# A heavy branch of four transactions and a lonely one.
heavy = add(g, g, "H0")
for i in range(1, 4):
    heavy = add(heavy, heavy, f"H{i}")
lonely = add(g, g, "L0")

w = cone_weights(graph, g)
print("genesis weight", w[g])

for alpha in (0.0, 0.5, 2.0):
    draws = TipWalker(graph, WalkConfig(alpha, START_GENESIS)).sample(20_000, seed=1)
    share = Counter(draws)[lonely] / len(draws)
    print(f"alpha={alpha:<4} lonely tip chosen {share:.1%} of the time")
