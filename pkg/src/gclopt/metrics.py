"""Metric terms for curvilinear elements: analytic, curl-form, and the
face-coupled optimized metrics.

``a[l, m] = J * d xi_l / d x_m`` is stored nodally per element as an
array of shape ``(3, 3, N)``.  Three constructions are provided:

* ``analytic_metrics``: adjugate of the collocation Jacobian matrix.
  Exact for the mapping's interpolant.  Note that the face-normal rows
  ``a[d, :]`` on a face ``xi_d = const`` involve only tangential
  derivatives of the face geometry, so on a watertight mesh they are
  *continuous* across conforming interfaces (bitwise, with shared face
  nodes).  The volume GCL ``sum_l D_l a_lm = 0`` does not hold for
  curved elements of degree >= 2.

* ``thomas_lombard_metrics``: symmetric curl form.  Telescopes under
  the commuting tensor-product derivatives, so the volume GCL holds to
  roundoff; its face-normal rows are likewise continuous across
  conforming faces.

* ``optimized_metrics``: minimum-norm correction of the analytic
  metrics subject to the coupling (GCL) constraint

      M a_m = c_m,   M = [Q_1^T, Q_2^T, Q_3^T],

  where ``c_m`` carries the face-quadrature trace of the analytic
  surface metrics (own and neighbour halves averaged; they coincide on
  watertight meshes).  This is the form of the GCL obtained by moving
  the volume statement onto the faces with ``Q = E - Q^T``, and it is
  exactly what free-stream preservation of the two-set interface
  penalty requires.  The system is always consistent: the left null
  space of M is spanned by the constant vector and ``1^T c_m = 0``
  holds exactly because the face quadratures integrate the closed
  surface of the (polynomial) element exactly.

  The *homogeneous* volume GCL is deliberately not imposed: stacking it
  on top of the coupling rows renders the system infeasible for even
  polynomial degrees on general curved elements, and free-stream
  preservation does not need it - the volume defect is exactly balanced
  by the own-face penalty terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import HexMesh, mapping_jacobian
from .sbp import (
    TensorOperator3D,
    face_direction,
    face_node_indices,
    face_normal_sign,
    face_quadrature_weights,
)

ANALYTIC = "analytic"
THOMAS_LOMBARD = "thomas_lombard"
OPTIMIZED = "optimized"

KINDS = (ANALYTIC, THOMAS_LOMBARD, OPTIMIZED)


@dataclass
class MetricSet:
    """Nodal metric terms ``a[k, l, m, :]`` and Jacobian ``jac[k, :]``."""

    kind: str
    a: np.ndarray  # (K, 3, 3, N)
    jac: np.ndarray  # (K, N)

    @property
    def n_elements(self) -> int:
        return self.a.shape[0]

    def face_rows(self, elem: int, face: int, op: TensorOperator3D) -> np.ndarray:
        """``(F, 3)`` rows ``a[d, m]`` at the face nodes, d the face normal."""
        d, _ = face_direction(face)
        ids = face_node_indices(op, face)
        return self.a[elem, d - 1, :, ids]


def analytic_metrics(mesh: HexMesh) -> MetricSet:
    K, N = mesh.coords.shape[:2]
    a = np.empty((K, 3, 3, N))
    jac = np.empty((K, N))
    for k in range(K):
        dx, J = mapping_jacobian(mesh.coords[k], mesh.op)
        jac[k] = J
        for l in range(3):
            l1, l2 = (l + 1) % 3, (l + 2) % 3
            for m in range(3):
                m1, m2 = (m + 1) % 3, (m + 2) % 3
                a[k, l, m] = dx[:, m1, l1] * dx[:, m2, l2] - dx[:, m1, l2] * dx[:, m2, l1]
    return MetricSet(ANALYTIC, a, jac)


def thomas_lombard_metrics(mesh: HexMesh) -> MetricSet:
    """Symmetric curl form; volume GCL holds to roundoff by telescoping."""
    op = mesh.op
    K, N = mesh.coords.shape[:2]
    a = np.empty((K, 3, 3, N))
    jac = np.empty((K, N))
    for k in range(K):
        x = mesh.coords[k]
        _, jac[k] = mapping_jacobian(x, op)
        dx = {l: op.apply_dxi(x, l + 1) for l in range(3)}  # (N, 3) each
        for l in range(3):
            l1, l2 = (l + 1) % 3, (l + 2) % 3
            for m in range(3):
                m1, m2 = (m + 1) % 3, (m + 2) % 3
                inner2 = x[:, m1] * dx[l2][:, m2] - x[:, m2] * dx[l2][:, m1]
                inner1 = x[:, m1] * dx[l1][:, m2] - x[:, m2] * dx[l1][:, m1]
                a[k, l, m] = 0.5 * (
                    op.apply_dxi(inner2, l1 + 1) - op.apply_dxi(inner1, l2 + 1)
                )
    return MetricSet(THOMAS_LOMBARD, a, jac)


# dense constraint operators depend only on the tensor operator; cache by dims
_MATRIX_CACHE: dict = {}


def _constraint_matrices(op: TensorOperator3D):
    key = op.dims
    if key not in _MATRIX_CACHE:
        Q = [op.dense_q(d) for d in (1, 2, 3)]
        m_coupling = np.hstack([q.T for q in Q])  # (N, 3N)
        m_volume = np.hstack(Q)  # (N, 3N)
        pinv = np.linalg.pinv(m_coupling, rcond=1e-12)
        _MATRIX_CACHE[key] = (m_coupling, m_volume, pinv)
    return _MATRIX_CACHE[key]


@dataclass
class ConstraintSystem:
    """Per-element linear system pinning the optimized metrics.

    ``coupling_matrix @ a_m = rhs[m]`` is the face-coupled form of the
    GCL; ``volume_matrix @ a_m`` evaluates the homogeneous volume GCL
    (reported, not imposed).  ``a_m`` stacks the three directional
    components ``(a_1m, a_2m, a_3m)`` of one Cartesian column m.
    """

    elem: int
    coupling_matrix: np.ndarray  # (N, 3N)
    volume_matrix: np.ndarray  # (N, 3N)
    rhs: np.ndarray  # (3, N)
    target: np.ndarray  # (3, 3N) stacked analytic targets per m

    def residual(self, a_elem: np.ndarray) -> float:
        """Max-norm residual of the coupling constraint for ``a_elem``
        of shape ``(3, 3, N)``."""
        worst = 0.0
        for m in range(3):
            vec = a_elem[:, m, :].reshape(-1)
            worst = max(worst, float(np.abs(self.coupling_matrix @ vec - self.rhs[m]).max()))
        return worst


def assemble_constraints(mesh: HexMesh, analytic: MetricSet, elem: int) -> ConstraintSystem:
    """Build the coupling right-hand side from analytic surface metrics.

    The interface penalty sees the element's own and the neighbour's
    analytic surface metrics in equal halves, so the face datum is
    their average; on a watertight mesh the two coincide (the
    face-normal analytic metrics are tangential derivatives of shared
    face data), and on physical boundaries both halves are the
    element's own.
    """
    op = mesh.op
    m_coupling, m_volume, _ = _constraint_matrices(op)
    N = op.n_nodes
    fm = mesh.face_map()
    c = np.zeros((3, N))
    for face in range(6):
        ids = face_node_indices(op, face)
        wperp = face_quadrature_weights(op, face)
        s = face_normal_sign(face)
        own = analytic.face_rows(elem, face, op)  # (F, 3)
        nbr = fm[(elem, face)]
        if nbr is None:
            rows = own
        else:
            ne, nf, perm = nbr
            rows = 0.5 * (own + analytic.face_rows(ne, nf, op)[perm])
        for m in range(3):
            c[m, ids] += s * wperp * rows[:, m]
    target = np.stack([analytic.a[elem, :, m, :].reshape(-1) for m in range(3)])
    return ConstraintSystem(elem, m_coupling, m_volume, c, target)


def project_element(system: ConstraintSystem, a_elem: np.ndarray) -> np.ndarray:
    """Project one element's metrics ``(3, 3, N)`` onto the affine
    subspace ``M a_m = c_m``: ``a - M^+(M a - c)``.  Idempotent, and
    minimum-distance among all constraint-satisfying corrections."""
    pinv = np.linalg.pinv(system.coupling_matrix, rcond=1e-12)
    out = np.empty_like(a_elem)
    for m in range(3):
        target = a_elem[:, m, :].reshape(-1)
        defect = system.coupling_matrix @ target - system.rhs[m]
        out[:, m, :] = (target - pinv @ defect).reshape(a_elem.shape[0], -1)
    return out


def optimized_metrics(mesh: HexMesh, analytic: MetricSet | None = None) -> MetricSet:
    """Euclidean projection of the analytic metrics onto the affine
    subspace satisfying the coupling constraints, via pseudo-inverse."""
    if analytic is None:
        analytic = analytic_metrics(mesh)
    op = mesh.op
    _, _, pinv = _constraint_matrices(op)
    K, N = analytic.jac.shape
    a = analytic.a.copy()
    for k in range(K):
        system = assemble_constraints(mesh, analytic, k)
        for m in range(3):
            target = system.target[m]
            defect = system.coupling_matrix @ target - system.rhs[m]
            a[k, :, m, :] = (target - pinv @ defect).reshape(3, N)
    return MetricSet(OPTIMIZED, a, analytic.jac.copy())


@dataclass(frozen=True)
class GclReport:
    """Volume-form and coupling-form GCL residuals, per element."""

    kind: str
    volume: np.ndarray  # (K,) max-norm residual of sum_l D_l a_lm
    coupling: np.ndarray  # (K,) max-norm residual of M a_m - c_m
    scale: float

    @property
    def max_volume(self) -> float:
        return float(self.volume.max())

    @property
    def max_coupling(self) -> float:
        return float(self.coupling.max())


def gcl_residual(
    metrics: MetricSet, mesh: HexMesh, analytic: MetricSet | None = None
) -> GclReport:
    """Evaluate both GCL forms for a metric set.

    The two residuals differ by the mismatch between the set's own
    surface traces and the analytic coupling data: a set may satisfy
    one form exactly and the other only to truncation order.
    """
    if analytic is None:
        analytic = metrics if metrics.kind == ANALYTIC else analytic_metrics(mesh)
    op = mesh.op
    K = metrics.n_elements
    vol = np.zeros(K)
    coup = np.zeros(K)
    for k in range(K):
        system = assemble_constraints(mesh, analytic, k)
        coup[k] = system.residual(metrics.a[k])
        for m in range(3):
            acc = np.zeros(op.n_nodes)
            for l in range(3):
                acc += op.apply_dxi(metrics.a[k, l, m], l + 1)
            vol[k] = max(vol[k], float(np.abs(acc).max()))
    return GclReport(metrics.kind, vol, coup, float(np.abs(metrics.a).max()))


def build_metrics(mesh: HexMesh, kind: str) -> MetricSet:
    if kind == ANALYTIC:
        return analytic_metrics(mesh)
    if kind == THOMAS_LOMBARD:
        return thomas_lombard_metrics(mesh)
    if kind == OPTIMIZED:
        return optimized_metrics(mesh)
    raise ValueError(f"unknown metric kind {kind!r}; expected one of {KINDS}")
