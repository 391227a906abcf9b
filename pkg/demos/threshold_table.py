"""Recovery threshold and encoding weight, GC-EPC against the plain EPC code."""
import gcepc

rows = [(24, 1, 6, 4), (24, 1, 6, 3), (24, 1, 6, 2), (10, 1, 6, 3),
        (64, 1, 4, 3), (64, 1, 8, 3), (64, 2, 4, 3)]

print(f"{'N':>3} {'k':>2} {'kp':>3} {'dp':>3} {'p':>3} | {'tau_epc':>7} {'tau_gc':>6} | {'wt_epc':>6} {'wt_gc':>5}")
for N, k, kp, dp in rows:
    r = gcepc.comparison_row(gcepc.derive_params(k, k, kp, dp, n_workers=N))
    epc = "N/A" if r["tau_epc"] is None else r["tau_epc"]
    print(f"{N:>3} {k:>2} {kp:>3} {dp:>3} {r['p']:>3} | {epc:>7} {r['tau_gc_epc']:>6} | "
          f"{r['wt_epc']:>6} {r['wt_gc_epc']:>5}")

# The occupancy search agrees with the closed form.
P = gcepc.derive_params(1, 1, 4, 3, n_groups=7)
print("\nbrute force:", gcepc.occupancy_threshold_oracle(P), " formula:", gcepc.recovery_threshold(P).tau)

# When delta_p divides kp, independent sub-codes do as well.
print("split scheme, kp=4 dp=2 N=20:", gcepc.split_scheme_threshold(1, 1, 4, 2, 20).tau)
