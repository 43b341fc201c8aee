"""
Proof-of-work attempt counts
============================

The nonce search is a string of independent trials with success
probability 2**-d, so the number of attempts is geometric with mean 2**d.
"""

import numpy as np

from tanglesim import PowConfig
from tanglesim.pow import solve_with_attempts
from tanglesim.transaction import Transaction

for d in (4, 8, 12):
    attempts = np.array([
        solve_with_attempts(Transaction(trunk=bytes(32), branch=bytes(32), timestamp=i), PowConfig(d), seed=i)[1]
        for i in range(500)
    ])
    print(f"d={d:2d}  mean={attempts.mean():8.1f}  expected={2**d:6d}  "
          f"p90={np.percentile(attempts, 90):8.1f}  expected p90={np.log(0.1) / np.log1p(-2.0**-d):8.1f}")
