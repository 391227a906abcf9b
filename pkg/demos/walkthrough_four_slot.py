"""Walk through one encode -> straggle -> decode cycle.

kA = kB = 1, kp = 4, delta_p = 3, five groups of four workers.  Each worker
stores three of the four quarter-slices of A and B, combines three blocks per
encoded matrix, and any two members of a group are enough to recover that
group's evaluation.
"""
import numpy as np

import gcepc

P = gcepc.derive_params(1, 1, 4, 3, n_workers=20)
print(f"p={P.p} eta={P.eta} kappa={P.kappa} groups={P.c} degree={P.degree}")
print("threshold:", gcepc.recovery_threshold(P).tau, "of", P.n_workers, "workers")

H = gcepc.construct_gc_matrix(P.eta, P.kappa, seed=0)
print("gradient coding matrix:\n", np.round(H.entries, 4))

rng = np.random.default_rng(1)
A = gcepc.BlockMatrix(rng.standard_normal((24, 24)))
B = gcepc.BlockMatrix(rng.standard_normal((24, 24)))
results = gcepc.compute_all_workers(P, H, A, B)

# Keep two arbitrary members of every group, drop everyone else.
survivors = []
for g in range(P.c):
    slots = rng.choice(P.eta, size=2, replace=False)
    survivors += [results[P.worker_index(g, int(w))] for w in slots]
    print(f"group {g}: slots {sorted(slots.tolist())} returned")

rep = gcepc.decode(survivors, H, P)
ref = gcepc.BlockMatrix(A.to_dense().T @ B.to_dense())
print(f"decoded from {len(survivors)} workers, error {gcepc.normalized_error(rep.product, ref):.2e}, "
      f"vandermonde condition {rep.vandermonde_condition:.1f}")

# Four complete groups plus one lone member of the fifth: 17 results, not enough.
bad = [r for r in results if r.group < 4] + [results[P.worker_index(4, 0)]]
try:
    gcepc.decode(bad, H, P)
except gcepc.InsufficientResultsError as exc:
    print("17 results in the wrong places:", exc)
