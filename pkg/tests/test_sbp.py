"""Tests for the 1-D LGL SBP operators and their tensor-product form."""

import numpy as np
import numpy.testing as npt
import pytest

from gclopt.sbp import (
    SbpOperator1D,
    TensorOperator3D,
    build_sbp_1d,
    face_direction,
    face_node_indices,
    face_normal_sign,
    face_quadrature_weights,
    lgl_nodes,
    operator_1d,
)

# Closed-form LGL nodes/weights (classical values, independent of the
# Newton iteration in lgl_nodes).
LGL_TABLE = {
    2: ([-1.0, 1.0], [1.0, 1.0]),
    3: ([-1.0, 0.0, 1.0], [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]),
    4: (
        [-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0],
        [1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0],
    ),
    5: (
        [-1.0, -np.sqrt(3.0 / 7.0), 0.0, np.sqrt(3.0 / 7.0), 1.0],
        [0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1],
    ),
}


@pytest.mark.parametrize("n", sorted(LGL_TABLE))
def test_lgl_nodes_match_closed_form(n):
    ns = lgl_nodes(n)
    x_ref, w_ref = LGL_TABLE[n]
    npt.assert_allclose(ns.nodes, x_ref, rtol=0.0, atol=1e-15)
    npt.assert_allclose(ns.weights, w_ref, rtol=1e-15)


def test_lgl_symmetry_is_bitwise():
    for n in range(2, 18):
        x = lgl_nodes(n).nodes
        assert np.all(x == -x[::-1])
        assert x[0] == -1.0 and x[-1] == 1.0


def test_lgl_rejects_single_node():
    with pytest.raises(ValueError):
        lgl_nodes(1)


def test_derivative_matrix_frozen_n3():
    # differentiating the quadratic interpolant through -1, 0, 1
    D = operator_1d(2).D
    D_ref = np.array([[-1.5, 2.0, -0.5], [-0.5, 0.0, 0.5], [0.5, -2.0, 1.5]])
    npt.assert_allclose(D, D_ref, rtol=0.0, atol=1e-14)


@pytest.mark.parametrize("p", range(1, 17))
def test_sbp_definition(p):
    """Accuracy on monomials, Q + Q^T = E, and P SPD, all at 1e-12."""
    op = operator_1d(p)
    x = op.nodes
    for k in range(p + 1):
        want = k * x ** (k - 1) if k > 0 else np.zeros_like(x)
        npt.assert_allclose(op.D @ x**k, want, rtol=0.0, atol=1e-12)
    npt.assert_allclose(op.Q + op.Q.T, op.E, rtol=0.0, atol=1e-12)
    assert np.all(op.weights > 0.0)
    npt.assert_allclose(op.weights.sum(), 2.0, rtol=1e-13)


def test_quadrature_exactness():
    # LGL with n points integrates degree 2n-3 exactly
    for n in range(2, 10):
        ns = lgl_nodes(n)
        for k in range(2 * n - 2):
            exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
            npt.assert_allclose(np.dot(ns.weights, ns.nodes**k), exact, atol=1e-13)


def test_build_sbp_rejects_bad_shapes():
    with pytest.raises(AssertionError):
        SbpOperator1D(np.zeros(3), np.ones(3), np.eye(4))


# -- tensor-product operator -------------------------------------------------


def _random_field(op, trail=(), seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((op.n_nodes,) + trail)


@pytest.mark.parametrize("direction", [1, 2, 3])
@pytest.mark.parametrize("trail", [(), (5,), (3, 2)])
def test_apply_dxi_matches_dense_kronecker(direction, trail):
    op = TensorOperator3D.cube(3)
    f = _random_field(op, trail, seed=direction)
    dense = op.dense_dxi(direction)
    want = (dense @ f.reshape(op.n_nodes, -1)).reshape(f.shape)
    npt.assert_allclose(op.apply_dxi(f, direction), want, rtol=0.0, atol=1e-13)


def test_apply_dxi_differentiates_coordinates():
    op = TensorOperator3D.cube(4)
    xi = op.reference_nodes()
    for d in range(1, 4):
        got = op.apply_dxi(xi, d)
        want = np.zeros_like(xi)
        want[:, d - 1] = 1.0
        npt.assert_allclose(got, want, rtol=0.0, atol=1e-13)


def test_apply_dxi_rejects_bad_direction():
    op = TensorOperator3D.cube(2)
    with pytest.raises(ValueError):
        op.apply_dxi(np.zeros(op.n_nodes), 4)


def test_weights_3d_ordering():
    # direction 1 fastest: flat index = i1 + n1*(i2 + n2*i3)
    op = TensorOperator3D.cube(2)
    w = op.ops[0].weights
    n = op.ops[0].n
    flat = 1 + n * (2 + n * 0)
    assert op.weights_3d[flat] == w[1] * w[2] * w[0]
    npt.assert_allclose(op.weights_3d.sum(), 8.0, rtol=1e-13)


def test_face_nodes_sit_on_the_face():
    op = TensorOperator3D.cube(3)
    xi = op.reference_nodes()
    for face in range(6):
        d, side = face_direction(face)
        ids = face_node_indices(op, face)
        npt.assert_array_equal(xi[ids, d - 1], -1.0 if side == 0 else 1.0)
        assert face_normal_sign(face) == (-1.0 if side == 0 else 1.0)


def test_face_quadrature_weights_integrate_the_face():
    op = TensorOperator3D.cube(3)
    for face in range(6):
        npt.assert_allclose(face_quadrature_weights(op, face).sum(), 4.0, rtol=1e-13)


def test_face_direction_rejects_out_of_range():
    with pytest.raises(ValueError):
        face_direction(6)


def test_dense_q_is_norm_weighted():
    op = TensorOperator3D.cube(2)
    for d in (1, 2, 3):
        npt.assert_allclose(
            op.dense_q(d), op.weights_3d[:, None] * op.dense_dxi(d), atol=0.0
        )


def test_operator_suite_runtime():
    """Building and checking p = 1..16 stays under a second."""
    import time

    t0 = time.perf_counter()
    for p in range(1, 17):
        op = build_sbp_1d(lgl_nodes(p + 1))
        assert np.allclose(op.Q + op.Q.T, op.E, atol=1e-12)
    assert time.perf_counter() - t0 < 1.0
