"""Gradient coding matrices: construction, verification, combine vectors.

A gradient coding matrix ``H`` (``eta x eta``, parameter ``kappa``) has
row ``i`` supported exactly on ``{i, ..., i+kappa} mod eta`` and the
all-ones row vector lies in the span of any ``eta - kappa`` of its rows.
Given the rows that survived, :func:`combine_vector` returns ``g`` with
``g^T H = 1^T``, supported on the survivors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConstructionError, InsufficientResultsError, ParameterError, SpanViolationError

SPAN_TOL = 1e-9
MAX_ATTEMPTS = 64


@dataclass(frozen=True, eq=False)
class GcMatrix:
    eta: int
    kappa: int
    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64)
        if arr.shape != (self.eta, self.eta):
            raise ParameterError(f"entries must be {self.eta}x{self.eta}, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def row(self, w):
        return self.entries[w]

    def support(self, w):
        return [(w + j) % self.eta for j in range(self.kappa + 1)]

    def to_text(self):
        """Plain-text table: ``eta kappa`` then one line per row."""
        lines = [f"{self.eta} {self.kappa}"]
        lines += [" ".join(f"{v:.17g}" for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        eta, kappa = (int(t) for t in lines[0].split())
        rows = [[float(t) for t in ln.split()] for ln in lines[1:1 + eta]]
        return cls(eta, kappa, np.array(rows))


@dataclass(frozen=True)
class GcReport:
    support_ok: bool
    span_ok: bool
    worst_residual: float
    worst_subset: tuple = ()

    @property
    def ok(self):
        return self.support_ok and self.span_ok


@dataclass(frozen=True, eq=False)
class CombineVector:
    g: np.ndarray
    support: tuple
    residual: float


def _solve_on_rows(entries, rows):
    """Minimum-norm ``g_S`` with ``g_S^T H[S] = 1^T``; returns (g_S, max residual)."""
    HS = entries[list(rows)]
    ones = np.ones(entries.shape[1])
    # gelsy: complete orthogonal factorization with column pivoting.
    gs, _, _, _ = scipy.linalg.lstsq(HS.T, ones, lapack_driver="gelsy")
    resid = float(np.max(np.abs(gs @ HS - ones)))
    return gs, resid


def verify_gc_matrix(H):
    eta, kappa = H.eta, H.kappa
    E = H.entries
    support_ok = 0 <= kappa < eta
    if support_ok:
        for i in range(eta):
            want = np.zeros(eta, dtype=bool)
            want[H.support(i)] = True
            if not np.array_equal(E[i] != 0, want):
                support_ok = False
                break
    worst, worst_subset = 0.0, ()
    if 0 <= kappa < eta:
        for J in itertools.combinations(range(eta), eta - kappa):
            _, resid = _solve_on_rows(E, J)
            if not resid <= worst:
                worst, worst_subset = resid, J
    else:
        worst = float("inf")
    return GcReport(support_ok, worst <= SPAN_TOL, worst, worst_subset)


def combine_vector(H, survivors):
    """Combine vector supported on ``survivors`` (row indices of ``H``)."""
    S = tuple(sorted(set(int(s) for s in survivors)))
    if any(s < 0 or s >= H.eta for s in S):
        raise ParameterError(f"survivor index out of range 0..{H.eta - 1}: {S}")
    if len(S) < H.eta - H.kappa:
        raise InsufficientResultsError(
            f"{len(S)} survivors given, at least {H.eta - H.kappa} are needed")
    gs, resid = _solve_on_rows(H.entries, S)
    if resid > SPAN_TOL:
        raise SpanViolationError(
            f"ones vector not in span of rows {S} (residual {resid:.3e})")
    g = np.zeros(H.eta)
    g[list(S)] = gs
    g.setflags(write=False)
    return CombineVector(g, S, resid)


# -- construction -----------------------------------------------------------

def _conjugate_root_sets(eta, kappa):
    """Exponent sets of eta-th roots of unity (excluding 1), closed under
    conjugation, of size ``kappa``."""
    pairs = [(k, eta - k) for k in range(1, (eta + 1) // 2)]
    singles = [(eta // 2,)] if eta % 2 == 0 else []
    units = pairs + singles
    out = []
    for r in range(len(units) + 1):
        for combo in itertools.combinations(units, r):
            ks = tuple(k for u in combo for k in u)
            if len(ks) == kappa:
                out.append(ks)
    return out


def _rescale_rows(E):
    peak = np.max(np.abs(E), axis=1, keepdims=True)
    return E / peak


def _circulant_candidate(eta, kappa, exps):
    roots = np.exp(2j * np.pi * np.array(exps, dtype=float) / eta)
    coeffs = np.real(np.poly(roots))[::-1] if len(exps) else np.ones(1)
    if np.min(np.abs(coeffs)) <= 1e-12 * np.max(np.abs(coeffs)):
        return None
    E = np.zeros((eta, eta))
    for i in range(eta):
        for j, a in enumerate(coeffs):
            E[i, (i + j) % eta] = a
    return _rescale_rows(E)


def _nullspace_candidate(eta, kappa, rng):
    """Rows drawn from the null space of a random ``kappa x eta`` matrix
    annihilating the ones vector, each restricted to its cyclic support."""
    Q = rng.standard_normal((kappa, eta))
    Q -= Q.mean(axis=1, keepdims=True)
    E = np.zeros((eta, eta))
    for i in range(eta):
        sup = [(i + j) % eta for j in range(kappa + 1)]
        if kappa == 0:
            b = np.ones(1)
        else:
            _, sv, vt = np.linalg.svd(Q[:, sup])
            if sv.size == kappa and sv[-1] < 1e-10 * sv[0]:
                return None
            b = vt[-1]
        if np.min(np.abs(b)) <= 1e-8 * np.max(np.abs(b)):
            return None
        if b[0] < 0:
            b = -b
        E[i, sup] = b
    return _rescale_rows(E)


def construct_gc_matrix(eta, kappa, seed=0):
    """Build a verified gradient coding matrix.

    Circulant generator-polynomial candidates (conjugate-closed sets of
    ``kappa`` nontrivial eta-th roots of unity) are tried first, in a
    seed-dependent order.  When none qualifies, candidates whose rows lie in
    a random ``(eta - kappa)``-dimensional subspace containing the ones
    vector are drawn.  At most ``MAX_ATTEMPTS`` candidates are verified.
    """
    if not 0 <= kappa < eta:
        raise ParameterError(f"need 0 <= kappa < eta, got eta={eta}, kappa={kappa}")
    if eta == 1:
        return GcMatrix(1, 0, np.ones((1, 1)))
    rng = np.random.default_rng([seed, eta, kappa])
    root_sets = _conjugate_root_sets(eta, kappa)
    rng.shuffle(root_sets)
    attempts = 0
    last = None
    for exps in root_sets:
        if attempts >= MAX_ATTEMPTS:
            break
        E = _circulant_candidate(eta, kappa, exps)
        if E is None:
            continue
        attempts += 1
        H = GcMatrix(eta, kappa, E)
        last = verify_gc_matrix(H)
        if last.ok:
            return H
    while attempts < MAX_ATTEMPTS:
        attempts += 1
        E = _nullspace_candidate(eta, kappa, rng)
        if E is None:
            continue
        H = GcMatrix(eta, kappa, E)
        last = verify_gc_matrix(H)
        if last.ok:
            return H
    subset = last.worst_subset if last is not None else None
    raise ConstructionError(
        f"no valid gradient coding matrix for eta={eta}, kappa={kappa} "
        f"after {attempts} attempts (failing subset {subset})", subset)
