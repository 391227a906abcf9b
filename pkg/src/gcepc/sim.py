"""Straggler simulation and the stability / speed experiments."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import recovery_threshold, vandermonde_condition
from .decode import decode
from .errors import (
    GcepcError, InfeasibleRunError, ParameterError, ShapeError, UndefinedMetricError,
)
from .gradcode import construct_gc_matrix
from .matrix import BlockMatrix, frobenius_norm, random_sparse
from .scheme import compute_all_workers, derive_params

log = logging.getLogger(__name__)

# Desk-scale worker speed in floating-point operations per second.  Small
# enough that, at the default sizes, the compute term competes with the
# straggler delay as it does for large sparse inputs.
DEFAULT_COMPUTE_RATE = 1e4

_STREAMS = {"matrix": 0, "gc": 1, "delays": 2, "points": 3}


def substream(seed, name, *keys):
    """Independent generator for a named randomness consumer."""
    return np.random.default_rng([seed, _STREAMS[name], *keys])


@dataclass(frozen=True)
class ShiftedExponential:
    shift: float = 1.0
    rate: float = 1.0

    def sample(self, rng, size):
        return self.shift + rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class Deterministic:
    delay: float = 1.0

    def sample(self, rng, size):
        return np.full(size, float(self.delay))


def normalized_error(C_hat, C_ref):
    if C_hat.shape != C_ref.shape:
        raise ShapeError(f"shape mismatch {C_hat.shape} vs {C_ref.shape}")
    ref = frobenius_norm(C_ref)
    if ref == 0.0:
        raise UndefinedMetricError("reference product has zero norm")
    diff = C_hat.to_dense() - C_ref.to_dense()
    return float(np.linalg.norm(diff) / ref)


def finish_times(delays, op_counts, compute_rate=DEFAULT_COMPUTE_RATE):
    """Per-worker finish time: delay plus ``op_count / compute_rate``."""
    delays = np.asarray(delays, dtype=np.float64)
    if compute_rate is None:
        return delays.copy()
    return delays + np.asarray(op_counts, dtype=np.float64) / compute_rate


def sample_completion(finish, params):
    """Arrival-ordered survivors up to the first decodable prefix.

    ``finish[k]`` is the finish time of worker ``k`` (``eta*group + slot``).
    Ties are broken by worker index.  Returns ``(survivors, completion_time)``.
    """
    finish = np.asarray(finish, dtype=np.float64)
    if finish.size != params.n_workers:
        raise ShapeError(f"need {params.n_workers} finish times, got {finish.size}")
    order = np.argsort(finish, kind="stable")
    need = params.eta - params.kappa
    counts = np.zeros(params.c, dtype=np.int64)
    qualified = 0
    for k, w in enumerate(order):
        g = w // params.eta
        counts[g] += 1
        if counts[g] == need:
            qualified += 1
            if qualified == params.degree + 1:
                return [int(v) for v in order[:k + 1]], float(finish[w])
    raise InfeasibleRunError("all workers finished without reaching a decodable set")


@dataclass(frozen=True)
class SimConfig:
    params: object
    rho: float = 0.01
    matrix_rows: int = 280
    matrix_cols: int = 280
    gamma: int | None = None
    delay_model: object = field(default_factory=ShiftedExponential)
    compute_rate: float | None = DEFAULT_COMPUTE_RATE
    trials: int = 1
    seed: int = 0
    decode_mode: str = "exact"

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if not 0 < self.rho <= 1:
            raise ParameterError("rho must lie in (0, 1]")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    completion_time: float
    workers_finished: int
    normalized_error: float
    encoded_nnz_a: float
    encoded_nnz_b: float
    op_count: float
    vandermonde_condition: float


TRIAL_COLUMNS = ("trial", "completion_time", "workers_finished", "normalized_error",
                 "encoded_nnz_a", "encoded_nnz_b", "op_count", "vandermonde_condition")


@dataclass
class SimResult:
    config: SimConfig
    records: list

    def mean(self, name):
        return math.fsum(getattr(r, name) for r in self.records) / len(self.records)

    @property
    def mean_error(self):
        return self.mean("normalized_error")


def _thread_cap(threads):
    if threads is not None:
        return max(1, int(threads))
    return max(1, int(os.environ.get("CCGC_THREADS", "1")))


def _run_trial(config, H, t):
    params = config.params
    gamma = config.matrix_cols if config.gamma is None else config.gamma
    rng = substream(config.seed, "matrix", t)
    A = random_sparse(config.matrix_rows, config.matrix_cols, config.rho, rng)
    B = random_sparse(config.matrix_rows, gamma, config.rho, rng)
    results = compute_all_workers(params, H, A, B)
    ops = [r.op_count for r in results]
    delays = config.delay_model.sample(substream(config.seed, "delays", t), params.n_workers)
    survivors, t_done = sample_completion(finish_times(delays, ops, config.compute_rate), params)
    report = decode([results[w] for w in survivors], H, params, mode=config.decode_mode)
    ref = A.to_dense().T @ B.to_dense()
    err = normalized_error(report.product, BlockMatrix(ref))
    n = len(results)
    return TrialRecord(
        trial=t,
        completion_time=t_done,
        workers_finished=len(survivors),
        normalized_error=err,
        encoded_nnz_a=math.fsum(r.encoded_nnz_a for r in results) / n,
        encoded_nnz_b=math.fsum(r.encoded_nnz_b for r in results) / n,
        op_count=math.fsum(ops) / n,
        vandermonde_condition=report.vandermonde_condition,
    )


def run_experiment(config, threads=None):
    """Generate inputs, run all workers, straggle, decode; one record per trial."""
    params = config.params
    H = construct_gc_matrix(params.eta, params.kappa, seed=config.seed)
    cap = _thread_cap(threads)
    trials = range(config.trials)
    if cap > 1 and config.trials > 1:
        with ThreadPoolExecutor(max_workers=cap) as pool:
            records = list(pool.map(lambda t: _run_trial(config, H, t), trials))
    else:
        records = [_run_trial(config, H, t) for t in trials]
    return SimResult(config, records)


# -- sweeps -----------------------------------------------------------------

STABILITY_COLUMNS = ("delta_p", "tau", "degree", "condition", "mean_normalized_error")
SPEED_COLUMNS = ("delta_p", "encoded_nnz_a", "encoded_nnz_b", "op_count", "completion_time")


def _sweep_params(kp, delta_p_list, n_workers, k_a, k_b):
    n_workers = 4 * kp if n_workers is None else n_workers
    out = []
    for dp in delta_p_list:
        try:
            out.append(derive_params(k_a, k_b, kp, dp, n_workers=n_workers))
        except GcepcError as exc:
            log.warning("skipping delta_p=%s: %s", dp, exc)
    return out


def stability_sweep(kp, delta_p_list, size=280, rho=0.01, seed=0, *, n_workers=None,
                    trials=1, k_a=1, k_b=1, delay_model=None, compute_rate=None):
    """Error/threshold tradeoff over ``delta_p`` at a fixed worker count.

    Defaults: ``n_workers = 4 * kp`` and equal worker delays, so the decoder
    interpolates at the lowest-indexed points, the same points whose
    Vandermonde condition is reported.
    """
    delay_model = Deterministic() if delay_model is None else delay_model
    rows = []
    for params in _sweep_params(kp, delta_p_list, n_workers, k_a, k_b):
        res = run_experiment(SimConfig(params, rho, size, size, None, delay_model,
                                       compute_rate, trials, seed))
        rows.append({
            "delta_p": params.delta_p,
            "tau": recovery_threshold(params).tau,
            "degree": params.degree,
            "condition": vandermonde_condition(params.points, params.degree),
            "mean_normalized_error": res.mean_error,
        })
    return rows


def speed_sweep(kp, delta_p_list, size=280, rho=0.01, seed=0, *, n_workers=None,
                trials=3, k_a=1, k_b=1, delay_model=None, compute_rate=DEFAULT_COMPUTE_RATE):
    """Encoded sparsity, worker cost and simulated completion time over ``delta_p``."""
    delay_model = ShiftedExponential() if delay_model is None else delay_model
    rows = []
    for params in sorted(_sweep_params(kp, delta_p_list, n_workers, k_a, k_b),
                         key=lambda p: p.delta_p):
        res = run_experiment(SimConfig(params, rho, size, size, None, delay_model,
                                       compute_rate, trials, seed))
        rows.append({
            "delta_p": params.delta_p,
            "encoded_nnz_a": res.mean("encoded_nnz_a"),
            "encoded_nnz_b": res.mean("encoded_nnz_b"),
            "op_count": res.mean("op_count"),
            "completion_time": res.mean("completion_time"),
        })
    return rows


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return "" if v is None else str(v)


def write_csv(rows, columns, fh):
    """Header row then one line per row; reals with 12 significant digits."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            writer.writerow([_fmt(row[c]) for c in columns])
        else:
            writer.writerow([_fmt(getattr(row, c)) for c in columns])
