"""Decoding: per-group gradient combination, cross-group interpolation,
useful-coefficient extraction and block assembly.

Also provides direct (encoder-free) formulas for the useful and
interference parts of a group's combined polynomial, used as test oracles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .analysis import vandermonde_condition
from .errors import ConfigurationError, GcepcError, InsufficientResultsError, ParameterError
from .gradcode import combine_vector
from .matrix import BlockGrid, BlockMatrix, assemble_grid, linear_combination


@dataclass(frozen=True)
class ExponentMap:
    degree: int
    useful: dict
    interference: frozenset

    @classmethod
    def build(cls, k_a, k_b, delta_p):
        base = {(s, u): delta_p - 1 + s * delta_p + u * delta_p * k_a
                for s in range(k_a) for u in range(k_b)}
        offsets = [t for t in range(-delta_p + 1, delta_p) if t != 0]
        interference = frozenset(e + t for e in base.values() for t in offsets)
        return cls(k_a * k_b * delta_p + delta_p - 2, base, interference)

    def overlap(self):
        """Exponents carrying both a useful and an interference term."""
        return sorted(set(self.useful.values()) & self.interference)

    def collisions(self):
        """Pairs of distinct (s, u) sharing an exponent."""
        items = sorted(self.useful.items())
        return [(a, b) for i, (a, ea) in enumerate(items) for b, eb in items[i + 1:] if ea == eb]

    def in_range(self):
        exps = set(self.useful.values()) | self.interference
        return all(0 <= e <= self.degree for e in exps)


def useful_exponents(params):
    emap = ExponentMap.build(params.k_a, params.k_b, params.delta_p)
    if emap.overlap() or emap.collisions() or not emap.in_range():
        raise GcepcError(f"exponent structure violated for {params}")
    return emap


# -- stages -----------------------------------------------------------------

def group_combine(results, H, params):
    """``sum_w g_w C_w`` over one group's results, keyed by ``(m~, n~)``."""
    results = list(results)
    if not results:
        raise InsufficientResultsError("no results for this group")
    groups = {r.group for r in results}
    if len(groups) != 1:
        raise ParameterError(f"results span several groups: {sorted(groups)}")
    by_slot = {r.slot: r for r in results}
    if len(by_slot) < params.eta - params.kappa:
        raise InsufficientResultsError(
            f"group {results[0].group} returned {len(by_slot)} results, "
            f"needs {params.eta - params.kappa}")
    cv = combine_vector(H, by_slot)
    slots = cv.support
    keys = by_slot[slots[0]].outputs.keys()
    return {key: linear_combination([cv.g[w] for w in slots],
                                    [by_slot[w].outputs[key] for w in slots])
            for key in keys}


class Extraction(NamedTuple):
    blocks: dict
    groups: tuple
    condition: float


def interpolate_and_extract(evaluations, params, mode="exact"):
    """Recover each useful coefficient from per-group evaluations.

    ``evaluations`` maps group index to ``{(m~, n~): BlockMatrix}``.  In
    ``"exact"`` mode the ``degree + 1`` lowest-indexed groups are used; in
    ``"lstsq"`` mode every supplied group enters a least-squares fit.
    Returns blocks keyed by ``(m~, n~, s, u)``.
    """
    need = params.degree + 1
    groups = sorted(evaluations)
    if len(groups) < need:
        raise InsufficientResultsError(
            f"{len(groups)} evaluation points available, {need} needed")
    if mode == "exact":
        groups = groups[:need]
    elif mode != "lstsq":
        raise ParameterError(f"unknown interpolation mode {mode!r}")
    x = np.array([params.points[g] for g in groups])
    if np.unique(x).size != x.size:
        raise ConfigurationError("interpolation points are not distinct")
    emap = useful_exponents(params)
    su = sorted(emap.useful)
    targets = np.zeros((need, len(su)))
    for k, key in enumerate(su):
        targets[emap.useful[key], k] = 1.0
    V = np.vander(x, need, increasing=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        if mode == "exact":
            # Row e of V^{-1} holds the weights that extract coefficient e.
            weights = scipy.linalg.lu_solve(scipy.linalg.lu_factor(V), targets, trans=1)
        else:
            weights = np.linalg.pinv(V).T @ targets
    cond = vandermonde_condition(x, params.degree)
    keys = evaluations[groups[0]].keys()
    blocks = {}
    for (mt, nt) in keys:
        evals = [evaluations[g][mt, nt] for g in groups]
        for k, (s, u) in enumerate(su):
            blocks[mt, nt, s, u] = linear_combination(weights[:, k], evals)
    return Extraction(blocks, tuple(groups), cond)


def assemble(extracted, params):
    """Place block ``(m~, n~, s, u)`` at ``(k_a*m~ + s, k_b*n~ + u)``."""
    grid = [[None] * params.n for _ in range(params.m)]
    for mt in range(params.m // params.k_a):
        for nt in range(params.n // params.k_b):
            for s in range(params.k_a):
                for u in range(params.k_b):
                    try:
                        blk = extracted[mt, nt, s, u]
                    except KeyError:
                        raise GcepcError(f"missing extracted block {(mt, nt, s, u)}") from None
                    grid[params.k_a * mt + s][params.k_b * nt + u] = blk
    return assemble_grid(BlockGrid(params.m, params.n, tuple(tuple(r) for r in grid)))


@dataclass(eq=False)
class DecodeReport:
    product: BlockMatrix | None
    groups_used: tuple
    survivors_used: dict
    vandermonde_condition: float
    success: bool
    message: str = ""


def decode(results, H, params, mode="exact", raise_on_failure=True):
    """Reconstruct ``A^T B`` from any collection of worker results."""
    by_group = {}
    for r in results:
        by_group.setdefault(r.group, {})[r.slot] = r
    need = params.eta - params.kappa
    qualified = sorted(g for g, slots in by_group.items() if len(slots) >= need)
    if len(qualified) < params.degree + 1:
        msg = (f"only {len(qualified)} groups have >= {need} results; "
               f"{params.degree + 1} are required")
        if raise_on_failure:
            raise InsufficientResultsError(msg)
        return DecodeReport(None, tuple(qualified), {}, float("nan"), False, msg)
    if mode == "exact":
        qualified = qualified[:params.degree + 1]
    evaluations = {g: group_combine(by_group[g].values(), H, params) for g in qualified}
    ext = interpolate_and_extract(evaluations, params, mode=mode)
    product = assemble(ext.blocks, params)
    survivors = {g: tuple(sorted(by_group[g])) for g in ext.groups}
    return DecodeReport(product, ext.groups, survivors, ext.condition, True)


# -- oracles ----------------------------------------------------------------

def _at(a_grid, i, j):
    return a_grid[i, j].to_dense().T


def useful_block(a_grid, b_grid, m_tilde, n_tilde, s, u, params):
    """``sum_{l'} A^T_{l', ka*m~+s} B_{l', kb*n~+u}``, computed densely."""
    col_a, col_b = params.k_a * m_tilde + s, params.k_b * n_tilde + u
    return sum(_at(a_grid, l, col_a) @ b_grid[l, col_b].to_dense() for l in range(params.p))


def interference_term(a_grid, b_grid, x, m_tilde, n_tilde, params):
    """Interference part of the combined polynomial at ``x``, computed densely.

    Only products ``A^T_{l1} B_{l2}`` with ``l1 != l2`` inside the same
    ``delta_p``-sized chunk contribute; the exponent is shifted from the
    matching useful exponent by ``l1 - l2``.
    """
    d, ka, kb = params.delta_p, params.k_a, params.k_b
    h = a_grid.block_shape[1]
    w = b_grid.block_shape[1]
    total = np.zeros((h, w))
    for shift in range(-d + 1, d):
        if shift == 0:
            continue
        for s in range(ka):
            for u in range(kb):
                e = d - 1 + s * d + u * d * ka + shift
                acc = np.zeros((h, w))
                for pt in range(params.eta):
                    for l2 in range(d):
                        l1 = l2 + shift
                        if not 0 <= l1 < d:
                            continue
                        acc += (_at(a_grid, d * pt + l1, ka * m_tilde + s)
                                @ b_grid[d * pt + l2, kb * n_tilde + u].to_dense())
                total += x ** e * acc
    return BlockMatrix(total)
