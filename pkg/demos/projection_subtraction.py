"""Removing spectral channels one at a time without losing the count.

Split a symmetric operator K as K = K_j + L_j, take a rank-one spectral
projection P_j of K_j at eigenvalue mu_j < 1, and transform

    T_j = (1 - mu_j P_j)^(-1/2) (T_{j-1} - mu_j P_j) (1 - mu_j P_j)^(-1/2).

Each stage is a congruence of 1 - T, so the number of eigenvalues above 1
never changes, while the subtracted channels pile up in a remainder M_k
obeying a closed recurrence.  The table below shows three stages on a random
12-dimensional operator: the count column is constant, the remainder grows,
and the recurrence reproduces the conjugated operator to rounding.
"""

import numpy as np

from bscount import SymOperator, count_evs, hs_norm, iterate
from bscount.iterbs import random_spectral_step
from bscount.linop import DEFAULT_SEED

rng = np.random.default_rng(DEFAULT_SEED)

dim = 12
q = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
spectrum = rng.uniform(-0.8, 1.6, size=dim)
k_total = SymOperator((q * spectrum) @ q.T)
base = count_evs(k_total, ">", 1.0)
print(f"random {dim}-dimensional operator, {base} eigenvalues above 1")
print()

steps = [random_spectral_step(k_total, rng) for _ in range(3)]
stages = iterate(k_total, steps)

print("k   mu_k     count>1   |M_k|_HS    recurrence residual")
print(f"0   -        {base}         0")
for k, (step, stage) in enumerate(zip(steps, stages), start=1):
    count = count_evs(stage.t, ">", 1.0)
    print(f"{k}   {step.mu:.4f}   {count}         "
          f"{hs_norm(stage.m):8.4f}    {stage.consistency_residual:.2e}")

print()
print("the count is invariant at every stage, and the remainder recurrence")
print("agrees with the direct conjugation product to near machine precision.")
