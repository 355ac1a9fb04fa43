"""One-dimensional diagonal-norm summation-by-parts operators on
Legendre-Gauss-Lobatto nodes, and their tensor-product extension to the
reference hexahedron ``[-1, 1]^3``.

A degree-``p`` operator acts on ``n = p + 1`` nodes and satisfies

    D = P^{-1} Q,        Q + Q^T = E = diag(-1, 0, ..., 0, 1),

with ``P`` the (diagonal, positive) LGL quadrature norm.  ``D`` is the
exact collocation derivative of the degree-``p`` interpolant, so it
differentiates polynomials up to degree ``p`` exactly.

Volume indices on the hexahedron are flattened with the *first*
reference direction fastest:

    idx = i1 + n1 * (i2 + n2 * i3).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class NodeSet1D:
    """Quadrature nodes and weights on the reference interval ``[-1, 1]``."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        assert self.nodes.ndim == 1 and self.nodes.shape == self.weights.shape
        assert self.nodes.size >= 2

    @property
    def n(self) -> int:
        return self.nodes.size


def lgl_nodes(n: int) -> NodeSet1D:
    """Legendre-Gauss-Lobatto nodes and weights for ``n >= 2`` points.

    Newton iteration on the stationary points of P_{n-1} starting from
    Chebyshev-Gauss-Lobatto nodes; the Legendre values are produced by
    the three-term recurrence.  The node set is symmetrized afterwards
    so that ``x[i] == -x[n-1-i]`` holds bitwise.
    """
    if n < 2:
        raise ValueError(f"need at least two nodes, got {n}")
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    pk = np.zeros((n, n))
    for _ in range(200):
        pk[:, 0] = 1.0
        pk[:, 1] = x
        for k in range(2, n):
            pk[:, k] = ((2 * k - 1) * x * pk[:, k - 1] - (k - 1) * pk[:, k - 2]) / k
        dx = (x * pk[:, n - 1] - pk[:, n - 2]) / (n * pk[:, n - 1])
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    pk[:, 0] = 1.0
    pk[:, 1] = x
    for k in range(2, n):
        pk[:, k] = ((2 * k - 1) * x * pk[:, k - 1] - (k - 1) * pk[:, k - 2]) / k
    w = 2.0 / ((n - 1) * n * pk[:, n - 1] ** 2)
    # enforce the symmetry the iteration has up to roundoff
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x[0], x[-1] = -1.0, 1.0
    return NodeSet1D(x, w)


def _barycentric_weights(x: np.ndarray) -> np.ndarray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


@dataclass(frozen=True)
class SbpOperator1D:
    """Collocation derivative ``D`` with its SBP companions on a node set.

    ``Q = P D`` holds by construction and ``Q + Q^T = E`` up to roundoff,
    where ``E`` carries the boundary terms of integration by parts.
    """

    nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray

    def __post_init__(self) -> None:
        n = self.nodes.size
        assert self.D.shape == (n, n)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def degree(self) -> int:
        return self.n - 1

    @property
    def P(self) -> np.ndarray:
        return np.diag(self.weights)

    @property
    def Q(self) -> np.ndarray:
        return self.weights[:, None] * self.D

    @property
    def E(self) -> np.ndarray:
        e = np.zeros((self.n, self.n))
        e[0, 0] = -1.0
        e[-1, -1] = 1.0
        return e


def build_sbp_1d(nodes: NodeSet1D) -> SbpOperator1D:
    """Differentiation matrix of the interpolant through ``nodes``.

    Off-diagonal entries come from the barycentric form
    ``D[i, j] = (b_j / b_i) / (x_i - x_j)``; the diagonal uses the
    negative-sum trick so constants are differentiated to exactly zero.
    """
    x = nodes.nodes
    b = _barycentric_weights(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (b[None, :] / b[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return SbpOperator1D(x, nodes.weights, D)


@lru_cache(maxsize=None)
def operator_1d(degree: int) -> SbpOperator1D:
    """Cached degree-``p`` LGL operator."""
    return build_sbp_1d(lgl_nodes(degree + 1))


class TensorOperator3D:
    """Tensor-product SBP operator on the reference hexahedron.

    Holds one 1-D operator per reference direction and applies the
    directional derivatives matrix-free.  Fields are arrays whose
    leading axis is the flat volume index (length ``N = n1*n2*n3``,
    direction 1 fastest); trailing axes are carried along unchanged.
    """

    def __init__(self, ops: tuple[SbpOperator1D, SbpOperator1D, SbpOperator1D]):
        self.ops = tuple(ops)
        assert len(self.ops) == 3

    @classmethod
    def cube(cls, degree: int) -> "TensorOperator3D":
        op = operator_1d(degree)
        return cls((op, op, op))

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.ops[0].n, self.ops[1].n, self.ops[2].n)

    @property
    def n_nodes(self) -> int:
        n1, n2, n3 = self.dims
        return n1 * n2 * n3

    @property
    def weights_3d(self) -> np.ndarray:
        """Diagonal of the volume norm ``P3 (x) P2 (x) P1``, flat ordering."""
        w1, w2, w3 = (op.weights for op in self.ops)
        return np.kron(w3, np.kron(w2, w1))

    def reference_nodes(self) -> np.ndarray:
        """Flat ``(N, 3)`` array of reference coordinates."""
        n1, n2, n3 = self.dims
        x1, x2, x3 = (op.nodes for op in self.ops)
        g3, g2, g1 = np.meshgrid(x3, x2, x1, indexing="ij")
        return np.stack([g1.ravel(), g2.ravel(), g3.ravel()], axis=-1)

    def apply_dxi(self, field: np.ndarray, direction: int) -> np.ndarray:
        """Apply the directional derivative ``D_xi{direction}``.

        ``field`` has shape ``(N, ...)``; returns the same shape.
        ``direction`` is 1, 2 or 3.
        """
        if direction not in (1, 2, 3):
            raise ValueError(f"direction must be 1, 2 or 3, got {direction}")
        n1, n2, n3 = self.dims
        D = self.ops[direction - 1].D
        shape = field.shape
        trail = int(np.prod(shape[1:], dtype=int)) if len(shape) > 1 else 1
        if direction == 1:
            f = field.reshape(n3 * n2, n1, trail)
            out = np.matmul(D, f)
        elif direction == 2:
            f = field.reshape(n3, n2, n1 * trail)
            out = np.matmul(D, f)
        else:
            f = field.reshape(n3, n2 * n1 * trail)
            out = np.matmul(D, f)
        return out.reshape(shape)

    def dense_dxi(self, direction: int) -> np.ndarray:
        """Dense ``(N, N)`` Kronecker form of ``apply_dxi`` (for tests/assembly)."""
        n1, n2, n3 = self.dims
        i1, i2, i3 = np.eye(n1), np.eye(n2), np.eye(n3)
        D = self.ops[direction - 1].D
        if direction == 1:
            return np.kron(i3, np.kron(i2, D))
        if direction == 2:
            return np.kron(i3, np.kron(D, i1))
        if direction == 3:
            return np.kron(D, np.kron(i2, i1))
        raise ValueError(f"direction must be 1, 2 or 3, got {direction}")

    def dense_q(self, direction: int) -> np.ndarray:
        """Dense volume ``Q`` in one direction: norm-weighted ``dense_dxi``."""
        return self.weights_3d[:, None] * self.dense_dxi(direction)


# Faces of the reference hexahedron are numbered 0..5 with
# face = 2*(d-1) + side, d the normal direction and side 0/1 the
# xi_d = -1 / +1 end.


def face_direction(face: int) -> tuple[int, int]:
    """Return ``(direction, side)`` with direction in 1..3 and side 0/1."""
    if not 0 <= face <= 5:
        raise ValueError(f"face must be in 0..5, got {face}")
    return face // 2 + 1, face % 2


def face_node_indices(op: TensorOperator3D, face: int) -> np.ndarray:
    """Flat volume indices of a face, ordered with the lower of the two
    tangential directions varying fastest."""
    n1, n2, n3 = op.dims
    grid = np.arange(op.n_nodes).reshape(n3, n2, n1)
    d, side = face_direction(face)
    if d == 1:
        sl = grid[:, :, -side]
    elif d == 2:
        sl = grid[:, -side, :]
    else:
        sl = grid[-side, :, :]
    # C-order flattening leaves the lower-numbered direction fastest
    return sl.ravel()


def face_quadrature_weights(op: TensorOperator3D, face: int) -> np.ndarray:
    """Tangential quadrature weights at the face nodes (same ordering
    as :func:`face_node_indices`)."""
    d, _ = face_direction(face)
    tang = [op.ops[i].weights for i in range(3) if i != d - 1]
    return np.kron(tang[1], tang[0])


def face_normal_sign(face: int) -> float:
    """Outward sign of the face: -1 on xi_d = -1, +1 on xi_d = +1."""
    return -1.0 if face % 2 == 0 else 1.0
