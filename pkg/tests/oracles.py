"""Dense reference constructions shared by the metric test modules.

Everything here is built from explicit Kronecker products, independent
of the library's matrix-free tensor kernels.
"""

import numpy as np


def dense_operators(op):
    """Q_l and E_l = Q_l + Q_l^T from explicit Kronecker products."""
    q1, p1 = op.ops[0].Q, np.diag(op.ops[0].weights)
    Q = [
        np.kron(p1, np.kron(p1, q1)),
        np.kron(p1, np.kron(q1, p1)),
        np.kron(q1, np.kron(p1, p1)),
    ]
    E = [q + q.T for q in Q]
    return Q, E


def oracle_constraint_data(mesh, ana, elem):
    """(M, c) with c taken from the element's own analytic traces.

    On a watertight mesh the neighbour's face data coincide with the
    element's own, so the constraint right-hand side equals the signed
    surface assembly sum_l E_l a_lm of the analytic metrics.
    """
    Q, E = dense_operators(mesh.op)
    M = np.hstack([q.T for q in Q])
    c = np.stack(
        [sum(E[l] @ ana.a[elem, l, m] for l in range(3)) for m in range(3)]
    )
    return M, c


def kkt_projection(M, c, target):
    """Primal block of the equality-constrained least-squares system.

    The KKT matrix is singular (constants span the left null space of
    M) but the primal block of any least-squares solution is unique.
    """
    n = target.size
    kkt = np.block([[np.eye(n), M.T], [M, np.zeros((M.shape[0], M.shape[0]))]])
    sol = np.linalg.lstsq(kkt, np.concatenate([target, c]), rcond=None)[0]
    return sol[:n]
