import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import four_slot_params
from gcepc import (
    BlockMatrix, GcMatrix, InfeasibleError, ParameterError, compute_all_workers,
    construct_gc_matrix, derive_params, encode_A, encode_B, partition_grid,
    random_sparse, split_inputs, worker_assignments, worker_compute,
)
from gcepc.scheme import a_terms, b_terms, equidistant_points, random_points


def scalar_grids(a, b):
    """Column-vector inputs split into scalar blocks (one per inner index)."""
    A = BlockMatrix(np.asarray(a, dtype=float).reshape(-1, 1))
    B = BlockMatrix(np.asarray(b, dtype=float).reshape(-1, 1))
    return partition_grid(A, len(a), 1), partition_grid(B, len(b), 1)


def val(M):
    return M.to_dense()[0, 0]


# -- parameters ---------------------------------------------------------------

def test_four_slot_parameters():
    P = derive_params(1, 1, 4, 3, 1, 1, 20)
    assert (P.p, P.eta, P.kappa, P.c, P.degree) == (12, 4, 2, 5, 4)
    assert P.points == (-1.0, -0.5, 0.0, 0.5, 1.0)


def test_kp15_dp6_parameters():
    P = derive_params(1, 1, 15, 6, n_groups=11)
    assert (P.p, P.eta, P.kappa, P.degree) == (30, 5, 1, 10)
    assert P.n_workers == 55


@pytest.mark.parametrize("kp", [1, 3, 6])
def test_epc_degeneration(kp):
    P = derive_params(1, 1, kp, kp, n_workers=40)
    assert (P.eta, P.kappa, P.c) == (1, 0, 40)


def test_delta_above_kp_rejected():
    with pytest.raises(ParameterError):
        derive_params(1, 1, 6, 7, n_workers=24)


def test_too_few_groups():
    with pytest.raises(InfeasibleError) as info:
        derive_params(1, 1, 4, 3, n_groups=4)
    assert info.value.required == 5


@pytest.mark.parametrize("kwargs", [
    dict(n_workers=21),                 # eta=4 does not divide 21
    dict(n_workers=20, n_groups=5),     # both given
    dict(),                              # neither given
])
def test_bad_worker_counts(kwargs):
    with pytest.raises(ParameterError):
        derive_params(1, 1, 4, 3, **kwargs)


def test_split_divisibility():
    with pytest.raises(ParameterError):
        derive_params(2, 1, 4, 3, m=3, n_groups=20)
    with pytest.raises(ParameterError):
        derive_params(1, 2, 4, 3, n=3, n_groups=20)


def test_duplicate_points_rejected():
    with pytest.raises(ParameterError):
        derive_params(1, 1, 2, 2, n_groups=3, points=(0.0, 0.5, 0.5))


def test_point_rules():
    assert equidistant_points(1) == (0.0,)
    assert equidistant_points(3) == (-1.0, 0.0, 1.0)
    pts = random_points(6, seed=2)
    assert pts == random_points(6, seed=2)
    assert all(-1 <= x <= 1 for x in pts)
    P = derive_params(1, 1, 2, 2, n_groups=4, point_rule="random", seed=2)
    assert P.points == random_points(4, 2)


def test_table1_counts():
    P = derive_params(1, 1, 4, 3, n_groups=5)
    assert P.tasks_per_worker == 3
    assert P.stored_blocks == 3
    assert (P.weight_a, P.weight_b) == (3, 3)
    assert P.gamma_a == 1 / 4


# -- encoders -----------------------------------------------------------------

def test_encode_delta1_is_plain_block():
    P = derive_params(1, 1, 3, 1, n_groups=1)
    ga, gb = scalar_grids([4.0, 5.0, 6.0], [1.0, 2.0, 3.0])
    for pt in range(3):
        assert val(encode_A(ga, 0.7, pt, 0, P)) == ga[pt, 0].to_dense()[0, 0]
        assert val(encode_B(gb, 0.7, pt, 0, P)) == gb[pt, 0].to_dense()[0, 0]


def test_encode_scalar_weights_delta2():
    P = derive_params(1, 1, 4, 2, n_groups=3)
    a = [3.0, 5.0, 7.0, 11.0]
    b = [2.0, 13.0, 17.0, 19.0]
    ga, gb = scalar_grids(a, b)
    assert val(encode_A(ga, 2.0, 0, 0, P)) == a[0] + 2 * a[1]
    assert val(encode_B(gb, 2.0, 0, 0, P)) == 2 * b[0] + b[1]
    assert val(encode_A(ga, 2.0, 1, 0, P)) == a[2] + 2 * a[3]


def test_encode_four_slot_form(four_slot, rng):
    a, b = rng.standard_normal(12), rng.standard_normal(12)
    ga, gb = scalar_grids(a, b)
    x = four_slot.points[1]
    for pt in range(4):
        assert np.isclose(val(encode_A(ga, x, pt, 0, four_slot)),
                          sum(x ** l * a[3 * pt + l] for l in range(3)))
        assert np.isclose(val(encode_B(gb, x, pt, 0, four_slot)),
                          sum(x ** (2 - l) * b[3 * pt + l] for l in range(3)))


def test_encode_transposes_a_blocks(rng):
    P = derive_params(2, 1, 2, 2, m=2, n_groups=5)
    A = BlockMatrix(rng.standard_normal((4, 6)))
    B = BlockMatrix(rng.standard_normal((4, 3)))
    ga, gb = split_inputs(A, B, P)
    enc = encode_A(ga, 0.3, 0, 0, P)
    assert enc.shape == (3, 2)
    want = sum(0.3 ** (l + 2 * s) * ga[l, s].to_dense().T for l in range(2) for s in range(2))
    assert np.allclose(enc.to_dense(), want)


def test_encode_index_range(four_slot):
    ga, gb = scalar_grids(np.ones(12), np.ones(12))
    with pytest.raises(ParameterError):
        encode_A(ga, 0.0, 4, 0, four_slot)
    with pytest.raises(ParameterError):
        encode_B(gb, 0.0, 0, 1, four_slot)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 6), st.data())
def test_encoding_weight_law(ka, kb, kp, data):
    dp = data.draw(st.integers(1, kp))
    P = derive_params(ka, kb, kp, dp, n_groups=ka * kb * dp + dp)
    for pt in range(P.eta):
        ta = a_terms(P, pt, 0)
        tb = b_terms(P, pt, 0)
        assert len(ta) == len({ij for _, ij in ta}) == dp * ka
        assert len(tb) == len({ij for _, ij in tb}) == dp * kb


# -- workers ------------------------------------------------------------------

def test_assignment_cyclic_indices(four_slot):
    H = construct_gc_matrix(4, 2)
    asg = worker_assignments(four_slot, H)
    assert len(asg) == 20
    assert asg[3].p_indices == (3, 0, 1)
    assert asg[7].group == 1 and asg[7].slot == 3
    assert all(len(a.tasks) == 3 for a in asg)


def test_assignment_epc_case():
    P = derive_params(1, 1, 3, 3, n_workers=9)
    asg = worker_assignments(P, construct_gc_matrix(1, 0))
    assert all(a.p_indices == (0,) for a in asg)


def test_assignment_h_mismatch(four_slot):
    with pytest.raises(ParameterError):
        worker_assignments(four_slot, construct_gc_matrix(3, 1))


def test_epc_worker_is_single_product(rng):
    P = derive_params(1, 1, 2, 2, n_groups=4)
    A = BlockMatrix(rng.standard_normal((4, 3)))
    B = BlockMatrix(rng.standard_normal((4, 2)))
    ga, gb = split_inputs(A, B, P)
    H = GcMatrix(1, 0, [[1.0]])
    for asg in worker_assignments(P, H):
        res = worker_compute(asg, ga, gb, P)
        x = asg.point
        want = encode_A(ga, x, 0, 0, P).to_dense() @ encode_B(gb, x, 0, 0, P).to_dense()
        assert np.allclose(res.outputs[0, 0].to_dense(), want)


def test_four_slot_worker_scalar(four_slot, rng):
    a, b = rng.standard_normal(12), rng.standard_normal(12)
    ga, gb = scalar_grids(a, b)
    H = construct_gc_matrix(4, 2)
    asg = worker_assignments(four_slot, H)[four_slot.worker_index(2, 0)]
    x = asg.point
    Abar = lambda pt: sum(x ** l * a[3 * pt + l] for l in range(3))
    Bbar = lambda pt: sum(x ** (2 - l) * b[3 * pt + l] for l in range(3))
    want = sum(H.entries[0, pt] * Abar(pt) * Bbar(pt) for pt in range(3))
    res = worker_compute(asg, ga, gb, four_slot)
    assert np.isclose(val(res.outputs[0, 0]), want)
    assert (res.group, res.slot, res.worker) == (2, 0, 8)


@pytest.mark.parametrize("ka, kb, kp, dp, m, n", [
    (1, 1, 4, 3, 1, 1), (2, 1, 2, 2, 2, 1), (1, 2, 4, 3, 2, 4), (2, 2, 3, 2, 4, 2),
])
def test_op_count_dense(ka, kb, kp, dp, m, n, rng):
    P = derive_params(ka, kb, kp, dp, m, n, n_groups=ka * kb * dp + dp)
    A = BlockMatrix(rng.standard_normal((P.p * 2, m * 2)))
    B = BlockMatrix(rng.standard_normal((P.p * 2, n * 2)))
    H = construct_gc_matrix(P.eta, P.kappa)
    res = compute_all_workers(P, H, A, B)
    per_product = 2 * 2 * 2 * 2   # 8 multiply-adds, two flops each
    want = (P.kappa + 1) * (m // ka) * (n // kb) * per_product
    assert all(r.op_count == want for r in res)


@pytest.mark.parametrize("ka, kb, kp, dp, m, n, beta, alpha, gamma", [
    (1, 1, 4, 3, 1, 1, 24, 6, 12),
    (2, 1, 6, 4, 4, 3, 24, 8, 6),
    (2, 2, 4, 3, 2, 4, 12, 4, 8),
    (1, 3, 5, 5, 1, 3, 10, 5, 6),
])
def test_storage_law_dense(ka, kb, kp, dp, m, n, beta, alpha, gamma, rng):
    P = derive_params(ka, kb, kp, dp, m, n, n_groups=ka * kb * dp + dp)
    A = BlockMatrix(rng.standard_normal((beta, alpha)))
    B = BlockMatrix(rng.standard_normal((beta, gamma)))
    res = compute_all_workers(P, construct_gc_matrix(P.eta, P.kappa), A, B)
    for r in res:
        assert r.encoded_entries_a * ka * kp == alpha * beta
        assert r.encoded_entries_b * kb * kp == beta * gamma


def test_worker_purity(four_slot):
    A = random_sparse(24, 24, 0.2, 1)
    B = random_sparse(24, 24, 0.2, 2)
    H = construct_gc_matrix(4, 2)
    r1 = compute_all_workers(four_slot, H, A, B)
    r2 = compute_all_workers(four_slot, H, A, B)
    for x, y in zip(r1, r2):
        assert x.op_count == y.op_count
        assert x.outputs[0, 0] == y.outputs[0, 0]


def test_grid_shape_checked(four_slot):
    ga, gb = scalar_grids(np.ones(6), np.ones(6))
    asg = worker_assignments(four_slot, construct_gc_matrix(4, 2))[0]
    with pytest.raises(ParameterError):
        worker_compute(asg, ga, gb, four_slot)


def test_split_inputs_row_mismatch(four_slot):
    with pytest.raises(ParameterError):
        split_inputs(BlockMatrix(np.zeros((12, 2))), BlockMatrix(np.zeros((24, 2))), four_slot)
