"""GC-EPC code parameters, encoders and the worker computation.

Conventions: ``A`` is ``beta x alpha`` and ``B`` is ``beta x gamma``; the
target is ``A^T B``.  The A-side grid is ``partition_grid(A, p, m)`` so that
block ``[i, j]`` is ``A_{i,j}`` and its transpose is the ``(i, j)`` block of
the ``A^T`` decomposition.  The B-side grid is ``partition_grid(B, p, n)``.

Worker ``(i, w)`` (group ``i``, slot ``w``) has global index
``eta * i + w`` and evaluation point ``x_i`` shared by its group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError, ParameterError
from .matrix import linear_combination, multiply, partition_grid


def equidistant_points(c):
    """``x_i = -1 + 2i/(c-1)``; a single group sits at 0."""
    if c == 1:
        return (0.0,)
    return tuple(float(v) for v in np.linspace(-1.0, 1.0, c))


def random_points(c, seed):
    rng = np.random.default_rng(seed)
    while True:
        pts = rng.uniform(-1.0, 1.0, size=c)
        if len(set(pts.tolist())) == c:
            return tuple(float(v) for v in pts)


@dataclass(frozen=True)
class SchemeParams:
    k_a: int
    k_b: int
    k_p: int
    delta_p: int
    m: int
    n: int
    p: int
    eta: int
    kappa: int
    c: int
    n_workers: int
    points: tuple
    degree: int

    @property
    def gamma_a(self):
        return 1.0 / (self.k_a * self.k_p)

    @property
    def gamma_b(self):
        return 1.0 / (self.k_b * self.k_p)

    @property
    def c_min(self):
        return self.degree + 1

    @property
    def survivors_needed(self):
        """Results a group must return before it can be combined."""
        return self.eta - self.kappa

    @property
    def stored_blocks(self):
        """``|P_p| = p / k_p`` encoded blocks per (m~, n~) index."""
        return self.kappa + 1

    @property
    def tasks_per_worker(self):
        return self.p * self.m * self.n // (self.k_p * self.k_a * self.k_b)

    @property
    def weight_a(self):
        return self.delta_p * self.k_a

    @property
    def weight_b(self):
        return self.delta_p * self.k_b

    def worker_index(self, group, slot):
        return self.eta * group + slot


def derive_params(k_a, k_b, k_p, delta_p, m=None, n=None, n_workers=None, *,
                  n_groups=None, point_rule="equidistant", seed=0, points=None):
    """Derive every GC-EPC quantity from the storage split and ``delta_p``.

    Exactly one of ``n_workers`` / ``n_groups`` must be given.  ``m`` and
    ``n`` default to ``k_a`` and ``k_b``.  ``point_rule`` is
    ``"equidistant"`` or ``"random"`` (seeded, uniform on [-1, 1]);
    explicit ``points`` override the rule.
    """
    for name, v in (("k_a", k_a), ("k_b", k_b), ("k_p", k_p), ("delta_p", delta_p)):
        if not isinstance(v, (int, np.integer)) or v < 1:
            raise ParameterError(f"{name} must be a positive integer, got {v!r}")
    m = k_a if m is None else m
    n = k_b if n is None else n
    if delta_p > k_p:
        raise ParameterError(f"delta_p={delta_p} exceeds k_p={k_p}")
    if m < 1 or m % k_a:
        raise ParameterError(f"k_a={k_a} must divide m={m}")
    if n < 1 or n % k_b:
        raise ParameterError(f"k_b={k_b} must divide n={n}")
    p = math.lcm(delta_p, k_p)
    eta = p // delta_p
    kappa = p // k_p - 1
    if (n_workers is None) == (n_groups is None):
        raise ParameterError("give exactly one of n_workers and n_groups")
    if n_groups is None:
        if n_workers < 1 or n_workers % eta:
            raise ParameterError(f"group size eta={eta} must divide n_workers={n_workers}")
        c = n_workers // eta
    else:
        c = n_groups
        if c < 1:
            raise ParameterError("n_groups must be positive")
    degree = k_a * k_b * delta_p + delta_p - 2
    if c < degree + 1:
        raise InfeasibleError(
            f"c={c} worker groups is below the minimum {degree + 1} "
            f"(k_a*k_b*delta_p + delta_p - 1)", required=degree + 1)
    if points is None:
        if point_rule == "equidistant":
            points = equidistant_points(c)
        elif point_rule == "random":
            points = random_points(c, seed)
        else:
            raise ParameterError(f"unknown point rule {point_rule!r}")
    points = tuple(float(x) for x in points)
    if len(points) != c:
        raise ParameterError(f"need {c} points, got {len(points)}")
    if len(set(points)) != c:
        raise ParameterError("evaluation points must be pairwise distinct")
    return SchemeParams(k_a, k_b, k_p, delta_p, m, n, p, eta, kappa, c, eta * c, points, degree)


# -- encoders ---------------------------------------------------------------

def a_terms(params, p_tilde, m_tilde):
    """``[(exponent, (i, j))]`` combined into the encoded A block."""
    d, ka = params.delta_p, params.k_a
    return [(l + s * d, (d * p_tilde + l, ka * m_tilde + s))
            for l in range(d) for s in range(ka)]


def b_terms(params, p_tilde, n_tilde):
    """``[(exponent, (i, j))]`` combined into the encoded B block."""
    d, ka, kb = params.delta_p, params.k_a, params.k_b
    return [(d - 1 - l + u * d * ka, (d * p_tilde + l, kb * n_tilde + u))
            for l in range(d) for u in range(kb)]


def _check_indices(params, p_tilde, other, limit, name):
    if not 0 <= p_tilde < params.eta:
        raise ParameterError(f"p_tilde={p_tilde} out of range 0..{params.eta - 1}")
    if not 0 <= other < limit:
        raise ParameterError(f"{name}={other} out of range 0..{limit - 1}")


def encode_A(a_grid, x, p_tilde, m_tilde, params):
    """Encoded ``Abar^T(x, p~, m~)``: ``sum_{l,s} x^(l + s*dp) A^T_{dp*p~+l, ka*m~+s}``."""
    _check_indices(params, p_tilde, m_tilde, params.m // params.k_a, "m_tilde")
    terms = a_terms(params, p_tilde, m_tilde)
    return linear_combination([x ** e for e, _ in terms], [a_grid[ij].T for _, ij in terms])


def encode_B(b_grid, x, p_tilde, n_tilde, params):
    """Encoded ``Bbar(x, p~, n~)``: ``sum_{l,u} x^(dp-1-l + u*dp*ka) B_{dp*p~+l, kb*n~+u}``."""
    _check_indices(params, p_tilde, n_tilde, params.n // params.k_b, "n_tilde")
    terms = b_terms(params, p_tilde, n_tilde)
    return linear_combination([x ** e for e, _ in terms], [b_grid[ij] for _, ij in terms])


def split_inputs(A, B, params):
    """Partition ``A`` (p x m grid) and ``B`` (p x n grid)."""
    if A.rows != B.rows:
        raise ParameterError(f"A and B need the same row count, got {A.rows} and {B.rows}")
    return partition_grid(A, params.p, params.m), partition_grid(B, params.p, params.n)


# -- workers ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WorkerAssignment:
    group: int
    slot: int
    point: float
    p_indices: tuple
    m_indices: tuple
    n_indices: tuple
    h_row: np.ndarray

    @property
    def tasks(self):
        return [(pt, mt, nt) for pt in self.p_indices for mt in self.m_indices for nt in self.n_indices]


@dataclass(eq=False)
class WorkerResult:
    group: int
    slot: int
    outputs: dict
    op_count: int
    encoded_entries_a: int = 0
    encoded_entries_b: int = 0
    encoded_nnz_a: int = 0
    encoded_nnz_b: int = 0
    worker: int = field(default=-1)


def worker_assignments(params, H):
    if (H.eta, H.kappa) != (params.eta, params.kappa):
        raise ParameterError(
            f"gradient coding matrix has (eta, kappa)=({H.eta}, {H.kappa}), "
            f"scheme needs ({params.eta}, {params.kappa})")
    m_idx = tuple(range(params.m // params.k_a))
    n_idx = tuple(range(params.n // params.k_b))
    out = []
    for i in range(params.c):
        for w in range(params.eta):
            pidx = tuple((w + j) % params.eta for j in range(params.kappa + 1))
            out.append(WorkerAssignment(i, w, params.points[i], pidx, m_idx, n_idx, H.row(w)))
    return out


def worker_compute(assignment, a_grid, b_grid, params):
    """Compute ``C_w(x_i, m~, n~) = sum_{p~ in P_p} h_{w,p~} Abar^T Bbar`` for all (m~, n~).

    ``op_count`` counts floating-point operations of the block products,
    two per multiply-add.
    """
    if (a_grid.block_rows, a_grid.block_cols) != (params.p, params.m):
        raise ParameterError(f"A grid must be {params.p}x{params.m} blocks")
    if (b_grid.block_rows, b_grid.block_cols) != (params.p, params.n):
        raise ParameterError(f"B grid must be {params.p}x{params.n} blocks")
    x = assignment.point
    enc_a = {(pt, mt): encode_A(a_grid, x, pt, mt, params)
             for pt in assignment.p_indices for mt in assignment.m_indices}
    enc_b = {(pt, nt): encode_B(b_grid, x, pt, nt, params)
             for pt in assignment.p_indices for nt in assignment.n_indices}
    h = assignment.h_row
    madds = 0
    outputs = {}
    for mt in assignment.m_indices:
        for nt in assignment.n_indices:
            prods = []
            for pt in assignment.p_indices:
                prod, ops = multiply(enc_a[pt, mt], enc_b[pt, nt])
                madds += ops
                prods.append(prod)
            outputs[mt, nt] = linear_combination([h[pt] for pt in assignment.p_indices], prods)
    return WorkerResult(
        group=assignment.group,
        slot=assignment.slot,
        outputs=outputs,
        op_count=2 * madds,
        encoded_entries_a=sum(b.capacity for b in enc_a.values()),
        encoded_entries_b=sum(b.capacity for b in enc_b.values()),
        encoded_nnz_a=sum(b.nnz for b in enc_a.values()),
        encoded_nnz_b=sum(b.nnz for b in enc_b.values()),
        worker=params.worker_index(assignment.group, assignment.slot),
    )


def compute_all_workers(params, H, A, B):
    """Run every worker of the scheme on ``(A, B)``; ordered by worker index."""
    a_grid, b_grid = split_inputs(A, B, params)
    return [worker_compute(a, a_grid, b_grid, params) for a in worker_assignments(params, H)]
