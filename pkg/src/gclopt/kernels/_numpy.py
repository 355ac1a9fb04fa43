"""Vectorized reference implementation of the volume kernels.

Pairmatrices are materialized per line of nodes: for direction l the
field is reshaped into (lines, n_l) and all n_l x n_l two-point fluxes
of a line are evaluated in one broadcast call.  Memory stays small
because lines are short (n <= p+1).
"""

from __future__ import annotations

import numpy as np

from ..physics import GasModel, chandrashekar_flux


def _line_view(q: np.ndarray, a_dir: np.ndarray, dims, direction: int):
    """Reshape (K, N, c) fields into (K, L, n, c) line batches."""
    n1, n2, n3 = dims
    K = q.shape[0]
    qc = q.shape[-1]
    if direction == 1:
        qv = q.reshape(K, n3 * n2, n1, qc)
        av = a_dir.reshape(K, n3 * n2, n1, 3)
    elif direction == 2:
        qv = np.moveaxis(q.reshape(K, n3, n2, n1, qc), 2, 3).reshape(K, n3 * n1, n2, qc)
        av = np.moveaxis(a_dir.reshape(K, n3, n2, n1, 3), 2, 3).reshape(K, n3 * n1, n2, 3)
    else:
        qv = np.moveaxis(q.reshape(K, n3, n2, n1, qc), 1, 3).reshape(K, n2 * n1, n3, qc)
        av = np.moveaxis(a_dir.reshape(K, n3, n2, n1, 3), 1, 3).reshape(K, n2 * n1, n3, 3)
    return qv, av


def _line_unview(out_lines: np.ndarray, dims, direction: int):
    n1, n2, n3 = dims
    K = out_lines.shape[0]
    c = out_lines.shape[-1]
    if direction == 1:
        return out_lines.reshape(K, n3 * n2 * n1, c)
    if direction == 2:
        back = np.moveaxis(out_lines.reshape(K, n3, n1, n2, c), 3, 2)
        return back.reshape(K, n3 * n2 * n1, c)
    back = np.moveaxis(out_lines.reshape(K, n2, n1, n3, c), 3, 1)
    return back.reshape(K, n3 * n2 * n1, c)


def euler_volume(q, a, D1, D2, D3, dims, gamma, R):
    """Hadamard-form volume term: -2 sum_l D_l o F_l applied to every
    element.  Returns J dq/dt contributions of shape (K, N, 5)."""
    gas = GasModel(gamma=gamma, R=R)
    K, N, _ = q.shape
    out = np.zeros((K, N, 5))
    Ds = (D1, D2, D3)
    for direction in (1, 2, 3):
        a_dir = np.moveaxis(a[:, direction - 1], 1, 2)  # (K, N, 3)
        qv, av = _line_view(q, np.ascontiguousarray(a_dir), dims, direction)
        nbar = 0.5 * (av[:, :, :, None, :] + av[:, :, None, :, :])
        F = chandrashekar_flux(qv[:, :, :, None, :], qv[:, :, None, :, :], gas, nbar)
        lines = -2.0 * np.einsum("ab,klabc->klac", Ds[direction - 1], F)
        out += _line_unview(lines, dims, direction)
    return out
