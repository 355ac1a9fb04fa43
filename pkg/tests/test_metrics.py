"""Tests for the three metric constructions and the GCL residual report.

The optimized metrics are checked against an independent dense KKT
solve of the equality-constrained least-squares problem, with the
constraint operator and face data rebuilt from explicit Kronecker
products rather than the module's own assembly.
"""

import numpy as np
import numpy.testing as npt
import pytest

from gclopt.mesh import build_perturbed_cube
from gclopt.metrics import (
    ANALYTIC,
    KINDS,
    OPTIMIZED,
    THOMAS_LOMBARD,
    analytic_metrics,
    assemble_constraints,
    build_metrics,
    gcl_residual,
    optimized_metrics,
    project_element,
    thomas_lombard_metrics,
)
from gclopt.sbp import face_node_indices
from oracles import kkt_projection, oracle_constraint_data


def test_unknown_kind_raises():
    mesh = build_perturbed_cube(cells_per_dir=1, eta=0.0, degree=1)
    with pytest.raises(ValueError):
        build_metrics(mesh, "curl")


def test_kinds_tuple():
    assert KINDS == (ANALYTIC, THOMAS_LOMBARD, OPTIMIZED)


def test_affine_elements_make_all_kinds_agree():
    """On the Cartesian mesh the metrics are constant and every
    construction reproduces them to roundoff."""
    mesh = build_perturbed_cube(cells_per_dir=2, eta=0.0, degree=2)
    ana = analytic_metrics(mesh)
    h = 2.0 / 2.0
    want = (h / 2.0) ** 2  # adjugate entry of diag(h/2)
    npt.assert_allclose(ana.jac, (h / 2.0) ** 3, rtol=1e-14)
    for l in range(3):
        for m in range(3):
            target = want if l == m else 0.0
            npt.assert_allclose(ana.a[:, l, m], target, atol=1e-15)
    for kind in (THOMAS_LOMBARD, OPTIMIZED):
        ms = build_metrics(mesh, kind)
        npt.assert_allclose(ms.a, ana.a, atol=1e-13)


def test_face_rows_match_direct_indexing():
    mesh = build_perturbed_cube(cells_per_dir=2, eta=1.0, degree=2)
    ana = analytic_metrics(mesh)
    for face in range(6):
        ids = face_node_indices(mesh.op, face)
        d = face // 2
        got = ana.face_rows(1, face, mesh.op)
        npt.assert_array_equal(got, ana.a[1, d, :, ids])


@pytest.mark.parametrize("degree", [2, 3])
def test_tl_satisfies_volume_gcl(degree):
    mesh = build_perturbed_cube(cells_per_dir=3, eta=1.0, degree=degree)
    ana = analytic_metrics(mesh)
    tl = thomas_lombard_metrics(mesh)
    rep = gcl_residual(tl, mesh, ana)
    assert rep.max_volume <= 1e-12 * rep.scale
    # ... but not the face-coupled form
    assert rep.max_coupling > 1e-6 * rep.scale


@pytest.mark.parametrize("degree", [2, 3])
def test_optimized_satisfies_coupling_gcl(degree):
    mesh = build_perturbed_cube(cells_per_dir=3, eta=1.0, degree=degree)
    ana = analytic_metrics(mesh)
    opt = optimized_metrics(mesh, ana)
    rep = gcl_residual(opt, mesh, ana)
    assert rep.max_coupling <= 1e-11 * rep.scale
    # the homogeneous volume form is deliberately not imposed
    assert rep.max_volume > 1e-6 * rep.scale


def test_analytic_violates_both_forms_on_curved_cells():
    mesh = build_perturbed_cube(cells_per_dir=3, eta=1.0, degree=2)
    ana = analytic_metrics(mesh)
    rep = gcl_residual(ana, mesh, ana)
    assert rep.max_volume > 1e-8
    assert rep.max_coupling > 1e-8


def test_metric_continuity_across_faces():
    # face-normal rows of the analytic and TL metrics are bitwise equal
    # across conforming interfaces (they see only shared face data)
    mesh = build_perturbed_cube(cells_per_dir=3, eta=1.0, degree=2)
    for ms in (analytic_metrics(mesh), thomas_lombard_metrics(mesh)):
        for conn in mesh.connections:
            rows_a = ms.face_rows(conn.elem_a, conn.face_a, mesh.op)
            rows_b = ms.face_rows(conn.elem_b, conn.face_b, mesh.op)[conn.perm]
            assert np.abs(rows_a - rows_b).max() <= 1e-13


# -- independent constraint assembly and KKT oracle ---------------------------


def test_constraint_rhs_equals_analytic_surface_assembly():
    mesh = build_perturbed_cube(cells_per_dir=2, eta=1.0, degree=2)
    ana = analytic_metrics(mesh)
    for elem in (0, 3, 7):
        system = assemble_constraints(mesh, ana, elem)
        _, c = oracle_constraint_data(mesh, ana, elem)
        npt.assert_allclose(system.rhs, c, rtol=0.0, atol=1e-13)


@pytest.mark.parametrize("degree", [2, 3])
def test_optimized_matches_dense_kkt_oracle(degree):
    """Stationarity system of min 1/2 ||a - target||^2 s.t. M a = c.

    The KKT matrix is singular (constants span the left null space of
    M) but the primal block of any least-squares solution is unique.
    """
    mesh = build_perturbed_cube(cells_per_dir=2, eta=1.0, degree=degree)
    ana = analytic_metrics(mesh)
    opt = optimized_metrics(mesh, ana)
    N = mesh.op.n_nodes
    scale = np.abs(ana.a).max()
    for elem in range(mesh.n_elements):
        M, c = oracle_constraint_data(mesh, ana, elem)
        for m in range(3):
            target = ana.a[elem, :, m, :].reshape(-1)
            a_kkt = kkt_projection(M, c[m], target).reshape(3, N)
            npt.assert_allclose(opt.a[elem, :, m, :], a_kkt, rtol=0.0,
                                atol=1e-10 * scale)
            assert np.abs(M @ a_kkt.reshape(-1) - c[m]).max() <= 1e-11 * scale


def test_projection_is_idempotent_and_optimal():
    mesh = build_perturbed_cube(cells_per_dir=2, eta=1.0, degree=2)
    ana = analytic_metrics(mesh)
    system = assemble_constraints(mesh, ana, 5)
    once = project_element(system, ana.a[5])
    twice = project_element(system, once)
    npt.assert_allclose(twice, once, rtol=0.0, atol=1e-13)
    assert system.residual(once) <= 1e-12

    # any other feasible point is farther from the target
    rng = np.random.default_rng(11)
    for _ in range(5):
        other = project_element(system, ana.a[5] + 0.1 * rng.standard_normal(ana.a[5].shape))
        assert system.residual(other) <= 1e-11
        d_opt = np.linalg.norm(once - ana.a[5])
        d_other = np.linalg.norm(other - ana.a[5])
        assert d_opt <= d_other + 1e-12


def test_projection_is_affine():
    # P(t a + (1-t) b) == t P(a) + (1-t) P(b) for feasible-space projections
    mesh = build_perturbed_cube(cells_per_dir=2, eta=1.0, degree=2)
    ana = analytic_metrics(mesh)
    system = assemble_constraints(mesh, ana, 2)
    rng = np.random.default_rng(7)
    a = rng.standard_normal(ana.a[2].shape)
    b = rng.standard_normal(ana.a[2].shape)
    t = 0.3
    mixed = project_element(system, t * a + (1.0 - t) * b)
    split = t * project_element(system, a) + (1.0 - t) * project_element(system, b)
    npt.assert_allclose(mixed, split, rtol=0.0, atol=1e-12)


def test_degree_one_metric_sets_are_bitwise_equal():
    """All three constructions coincide on straight-sided cells, which
    is what pins the p = 1 rows of the comparison studies to 1.000."""
    mesh = build_perturbed_cube(cells_per_dir=3, eta=1.0, degree=1)
    ana = analytic_metrics(mesh)
    tl = thomas_lombard_metrics(mesh)
    opt = optimized_metrics(mesh, ana)
    assert np.array_equal(tl.a, ana.a)
    assert np.array_equal(opt.a, ana.a)
