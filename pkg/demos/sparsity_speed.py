"""Encoded sparsity and simulated completion time vs delta_p.

Each encoded block sums delta_p input blocks, so on sparse inputs its
nonzero count (and the worker's multiply cost) grows with delta_p.  On dense
inputs nothing is lost and the gap disappears.
"""
import sys

import gcepc
from gcepc.sim import SPEED_COLUMNS, write_csv

for rho in (0.01, 1.0):
    print(f"rho = {rho}")
    rows = gcepc.speed_sweep(14, [1, 2, 7, 14], size=280, rho=rho, seed=0, trials=3)
    write_csv(rows, SPEED_COLUMNS, sys.stdout)
    print()
