"""Construct and check gradient coding matrices for small group sizes.

Row i is supported on the cyclic window {i, ..., i+kappa}; any eta-kappa rows
must reach the all-ones vector.
"""
import itertools

import numpy as np

import gcepc

for eta, kappa in [(3, 1), (4, 2), (5, 2), (6, 4)]:
    H = gcepc.construct_gc_matrix(eta, kappa)
    rep = gcepc.verify_gc_matrix(H)
    print(f"eta={eta} kappa={kappa} ok={rep.ok} worst residual {rep.worst_residual:.1e}")
    print(np.round(H.entries, 3))
    S = next(itertools.combinations(range(eta), eta - kappa))
    cv = gcepc.combine_vector(H, S)
    print(f"  survivors {S}: g = {np.round(cv.g, 3)}  g^T H = {np.round(cv.g @ H.entries, 12)}")
    print()

# Random values on the right support almost never work.
rng = np.random.default_rng(0)
E = np.zeros((5, 5))
for i in range(5):
    E[i, [(i + j) % 5 for j in range(3)]] = rng.standard_normal(3)
print("random fill passes:", gcepc.verify_gc_matrix(gcepc.GcMatrix(5, 2, E)).ok)
