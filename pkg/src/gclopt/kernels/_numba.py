"""Compiled volume kernels.

One thread per element; every element writes only its own slab of the
output, so results are bitwise independent of the thread count.
``fastmath`` stays off to keep the numpy backend bit-compatible.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange


@njit(inline="always", cache=True)
def _log_mean(x, y):
    f2 = ((x - y) / (x + y)) ** 2
    if f2 < 1e-4:
        return (x + y) / (2.0 + f2 * (2.0 / 3.0 + f2 * (2.0 / 5.0 + f2 * (2.0 / 7.0))))
    return (x - y) / math.log(x / y)


@njit(inline="always", cache=True)
def _chandra(qi, qj, n0, n1, n2, gamma, R, out):
    # primitive decode
    ri = qi[0]
    ui0 = qi[1] / ri
    ui1 = qi[2] / ri
    ui2 = qi[3] / ri
    usqi = ui0 * ui0 + ui1 * ui1 + ui2 * ui2
    Ti = (qi[4] - 0.5 * ri * usqi) * (gamma - 1.0) / (ri * R)
    rj = qj[0]
    uj0 = qj[1] / rj
    uj1 = qj[2] / rj
    uj2 = qj[3] / rj
    usqj = uj0 * uj0 + uj1 * uj1 + uj2 * uj2
    Tj = (qj[4] - 0.5 * rj * usqj) * (gamma - 1.0) / (rj * R)

    bi = 1.0 / (2.0 * R * Ti)
    bj = 1.0 / (2.0 * R * Tj)
    rho_ln = _log_mean(ri, rj)
    beta_ln = _log_mean(bi, bj)
    u0 = 0.5 * (ui0 + uj0)
    u1 = 0.5 * (ui1 + uj1)
    u2 = 0.5 * (ui2 + uj2)
    usq_avg = 0.5 * (usqi + usqj)
    p_mean = 0.5 * (ri + rj) / (bi + bj)

    un = u0 * n0 + u1 * n1 + u2 * n2
    mdot = rho_ln * un
    out[0] = mdot
    out[1] = mdot * u0 + p_mean * n0
    out[2] = mdot * u1 + p_mean * n1
    out[3] = mdot * u2 + p_mean * n2
    out[4] = mdot * (0.5 / ((gamma - 1.0) * beta_ln) - 0.5 * usq_avg) + (
        out[1] * u0 + out[2] * u1 + out[3] * u2
    )


@njit(cache=True, parallel=True)
def euler_volume(q, a, D1, D2, D3, dims, gamma, R):
    n1, n2, n3 = dims[0], dims[1], dims[2]
    K, N, _ = q.shape
    out = np.zeros((K, N, 5))
    for k in prange(K):
        flux = np.empty(5)
        for i3 in range(n3):
            for i2 in range(n2):
                base = (i3 * n2 + i2) * n1
                for al in range(n1):
                    ia = base + al
                    for be in range(al, n1):
                        ib = base + be
                        nb0 = 0.5 * (a[k, 0, 0, ia] + a[k, 0, 0, ib])
                        nb1 = 0.5 * (a[k, 0, 1, ia] + a[k, 0, 1, ib])
                        nb2 = 0.5 * (a[k, 0, 2, ia] + a[k, 0, 2, ib])
                        _chandra(q[k, ia], q[k, ib], nb0, nb1, nb2, gamma, R, flux)
                        cab = -2.0 * D1[al, be]
                        if al == be:
                            for c in range(5):
                                out[k, ia, c] += cab * flux[c]
                        else:
                            cba = -2.0 * D1[be, al]
                            for c in range(5):
                                out[k, ia, c] += cab * flux[c]
                                out[k, ib, c] += cba * flux[c]
        for i3 in range(n3):
            for i1 in range(n1):
                base = i3 * n2 * n1 + i1
                for al in range(n2):
                    ia = base + al * n1
                    for be in range(al, n2):
                        ib = base + be * n1
                        nb0 = 0.5 * (a[k, 1, 0, ia] + a[k, 1, 0, ib])
                        nb1 = 0.5 * (a[k, 1, 1, ia] + a[k, 1, 1, ib])
                        nb2 = 0.5 * (a[k, 1, 2, ia] + a[k, 1, 2, ib])
                        _chandra(q[k, ia], q[k, ib], nb0, nb1, nb2, gamma, R, flux)
                        cab = -2.0 * D2[al, be]
                        if al == be:
                            for c in range(5):
                                out[k, ia, c] += cab * flux[c]
                        else:
                            cba = -2.0 * D2[be, al]
                            for c in range(5):
                                out[k, ia, c] += cab * flux[c]
                                out[k, ib, c] += cba * flux[c]
        for i2 in range(n2):
            for i1 in range(n1):
                base = i2 * n1 + i1
                for al in range(n3):
                    ia = base + al * n2 * n1
                    for be in range(al, n3):
                        ib = base + be * n2 * n1
                        nb0 = 0.5 * (a[k, 2, 0, ia] + a[k, 2, 0, ib])
                        nb1 = 0.5 * (a[k, 2, 1, ia] + a[k, 2, 1, ib])
                        nb2 = 0.5 * (a[k, 2, 2, ia] + a[k, 2, 2, ib])
                        _chandra(q[k, ia], q[k, ib], nb0, nb1, nb2, gamma, R, flux)
                        cab = -2.0 * D3[al, be]
                        if al == be:
                            for c in range(5):
                                out[k, ia, c] += cab * flux[c]
                        else:
                            cba = -2.0 * D3[be, al]
                            for c in range(5):
                                out[k, ia, c] += cab * flux[c]
                                out[k, ib, c] += cba * flux[c]
    return out
