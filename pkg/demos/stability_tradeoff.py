"""Numerical error vs recovery threshold as delta_p sweeps from 1 to kp.

Small delta_p: more workers needed, low interpolation degree, exact answers.
delta_p = kp is the plain EPC code: fewest workers, degree 26, garbage.
"""
import sys

import gcepc
from gcepc.sim import STABILITY_COLUMNS, write_csv

rows = gcepc.stability_sweep(14, [1, 2, 7, 14], size=280, rho=0.01, seed=0)
write_csv(rows, STABILITY_COLUMNS, sys.stdout)

