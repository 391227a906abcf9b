"""Recovery thresholds, decodability, a brute-force occupancy oracle and
encoding-weight / conditioning metrics."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, InfeasibleError, OracleSizeError, ParameterError

CSV_COLUMNS = ("scheme", "kA", "kB", "kp", "delta_p", "p", "c", "N",
               "tau", "degree", "weight_A", "weight_B")


@dataclass(frozen=True)
class ThresholdReport:
    scheme: str
    tau: int
    degree: int
    weight_a: int
    weight_b: int
    c_min: int
    k_a: int | None = None
    k_b: int | None = None
    k_p: int | None = None
    delta_p: int | None = None
    p: int | None = None
    c: int | None = None
    n_workers: int | None = None
    # Set for gc_epc when delta_p | k_p: the group-wise code degenerates to
    # kappa = 0 and the independent-split threshold is reported alongside.
    split_tau: int | None = None

    def feasible(self, n_workers=None):
        n_workers = self.n_workers if n_workers is None else n_workers
        return n_workers is None or self.tau <= n_workers

    def csv_row(self):
        vals = (self.scheme, self.k_a, self.k_b, self.k_p, self.delta_p, self.p, self.c,
                self.n_workers, self.tau, self.degree, self.weight_a, self.weight_b)
        return ["" if v is None else str(v) for v in vals]


def gc_epc_tau(k_a, k_b, k_p, delta_p, c):
    """Closed-form GC-EPC recovery threshold."""
    p = math.lcm(delta_p, k_p)
    return (p // delta_p - p // k_p) * c + (p // k_p) * (k_a * k_b * delta_p + delta_p - 2) + 1


def recovery_threshold(params):
    if params.c < params.c_min:
        raise InfeasibleError(f"c={params.c} below minimum {params.c_min}", required=params.c_min)
    tau = gc_epc_tau(params.k_a, params.k_b, params.k_p, params.delta_p, params.c)
    split = None
    if params.k_p % params.delta_p == 0:
        split = split_scheme_threshold(params.k_a, params.k_b, params.k_p, params.delta_p,
                                       params.n_workers).tau
    return ThresholdReport(
        "gc_epc", tau, params.degree, params.weight_a, params.weight_b, params.c_min,
        params.k_a, params.k_b, params.k_p, params.delta_p, params.p, params.c,
        params.n_workers, split)


def baseline_thresholds(k_a, k_b, k_p, p=None, m=1, n=1):
    """Thresholds of the classical schemes at the same storage fractions.

    ``p`` is the inner split used by MatDot and the EP code (defaults to
    ``k_p``); ``m, n`` are the EP code's outer splits.
    """
    p = k_p if p is None else p
    if min(k_a, k_b, k_p, p, m, n) < 1:
        raise ParameterError("all parameters must be positive")
    epc_deg = k_p * k_a * k_b + k_p - 2
    ep_deg = p * m * n + p - 2
    return {
        "epc": ThresholdReport("epc", epc_deg + 1, epc_deg, k_p * k_a, k_p * k_b, epc_deg + 1,
                               k_a, k_b, k_p, k_p, k_p),
        "matdot": ThresholdReport("matdot", 2 * p - 1, 2 * p - 2, p, p, 2 * p - 1,
                                  1, 1, p, p, p),
        "ep": ThresholdReport("ep", ep_deg + 1, ep_deg, p * m, p * n, ep_deg + 1,
                              m, n, p, p, p),
        "poly": ThresholdReport("poly", k_a * k_b, k_a * k_b - 1, k_a, k_b, k_a * k_b,
                                k_a, k_b, 1, 1, 1),
    }


def split_scheme_threshold(k_a, k_b, k_p, delta_p, n_workers):
    """Threshold of ``k_p/delta_p`` independent EP codes sharing the workers."""
    if delta_p > k_p or k_p % delta_p:
        raise ParameterError(f"split scheme needs delta_p | k_p (delta_p={delta_p}, k_p={k_p})")
    codes = k_p // delta_p
    if n_workers % codes:
        raise ParameterError(f"{codes} sub-codes must divide n_workers={n_workers}")
    per_code = n_workers // codes
    degree = k_a * k_b * delta_p + delta_p - 2
    if per_code < degree + 1:
        raise InfeasibleError(f"each sub-code needs {degree + 1} evaluations, has {per_code}",
                              required=degree + 1)
    tau = n_workers - per_code + degree + 1
    return ThresholdReport("split", tau, degree, delta_p * k_a, delta_p * k_b, degree + 1,
                           k_a, k_b, k_p, delta_p, k_p, per_code, n_workers)


def encoding_weight(params, scheme="gc_epc"):
    if scheme == "gc_epc":
        return params.delta_p * params.k_a, params.delta_p * params.k_b
    if scheme == "epc":
        return params.k_p * params.k_a, params.k_p * params.k_b
    raise ParameterError(f"unknown scheme {scheme!r}")


def comparison_row(params):
    """One row of the EPC vs GC-EPC comparison table (``None`` = N/A)."""
    gc = recovery_threshold(params)
    epc = baseline_thresholds(params.k_a, params.k_b, params.k_p)["epc"]
    return {
        "N": params.n_workers, "kA": params.k_a, "kB": params.k_b, "kp": params.k_p,
        "delta_p": params.delta_p, "p": params.p,
        "tau_epc": epc.tau if epc.tau <= params.n_workers else None,
        "tau_gc_epc": gc.tau,
        "wt_epc": encoding_weight(params, "epc")[0],
        "wt_gc_epc": encoding_weight(params, "gc_epc")[0],
    }


# -- decodability -----------------------------------------------------------

def _occupancy_list(occupancy, params):
    if isinstance(occupancy, dict):
        counts = [0] * params.c
        for g, k in occupancy.items():
            if not 0 <= g < params.c:
                raise ParameterError(f"group {g} out of range 0..{params.c - 1}")
            counts[g] = k
    else:
        counts = list(occupancy)
        if len(counts) > params.c:
            raise ParameterError(f"{len(counts)} occupancies given for {params.c} groups")
    if any(k < 0 or k > params.eta for k in counts):
        raise ParameterError(f"occupancies must lie in 0..{params.eta}")
    return counts


def decodable(occupancy, params):
    """Whether per-group survivor counts allow decoding.

    ``occupancy`` is a sequence indexed by group or a ``{group: count}``
    mapping (missing groups count as zero).
    """
    need = params.eta - params.kappa
    counts = _occupancy_list(occupancy, params)
    return sum(1 for k in counts if k >= need) >= params.degree + 1


def occupancy_threshold_oracle(params, max_states=5_000_000):
    """Recovery threshold by exhaustive search over occupancy vectors.

    Decodability is invariant under permuting groups, so it is enough to
    visit each multiset of per-group counts once.
    """
    states = math.comb(params.c + params.eta, params.eta)
    if states > max_states:
        raise OracleSizeError(
            f"{states} occupancy multisets exceed the limit of {max_states}")
    need = params.eta - params.kappa
    target = params.degree + 1
    worst = -1
    for counts in itertools.combinations_with_replacement(range(params.eta + 1), params.c):
        total = sum(counts)
        if total <= worst:
            continue
        qualified = sum(1 for k in counts if k >= need)
        if qualified < target:
            worst = total
    return worst + 1


# -- conditioning -----------------------------------------------------------

def _power_sigma(apply_gram, size, rtol=1e-10, max_iter=5000):
    """Largest eigenvalue of a symmetric PSD operator by power iteration."""
    v = np.linspace(1.0, 2.0, size)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = apply_gram(v)
        new = float(np.linalg.norm(w))
        if new == 0.0 or not np.isfinite(new):
            return new
        v = w / new
        if abs(new - lam) <= rtol * new:
            return new
        lam = new
    return lam


def vandermonde_condition(points, degree):
    """2-norm condition of the ``(degree+1)``-square Vandermonde matrix at the
    first ``degree + 1`` points, from power iterations on ``V^T V`` and its
    inverse."""
    pts = np.asarray(points, dtype=np.float64)[:degree + 1]
    if pts.size < degree + 1:
        raise ParameterError(f"need {degree + 1} points, got {pts.size}")
    if np.unique(pts).size != pts.size:
        raise ConfigurationError("duplicate interpolation points")
    if degree == 0:
        return 1.0
    V = np.vander(pts, degree + 1, increasing=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(V)

        def inv_gram(v):
            return scipy.linalg.lu_solve(lu, scipy.linalg.lu_solve(lu, v, trans=1))

        big = _power_sigma(lambda v: V.T @ (V @ v), degree + 1)
        small_inv = _power_sigma(inv_gram, degree + 1)
    return float(np.sqrt(big * small_inv))
