"""Compressible-flow thermodynamics, entropy variables, and flux
functions for an ideal gas.

Nondimensionalization: reference density and temperature are 1 and the
gas constant defaults to ``R = 1/gamma`` so that the sound speed at the
reference state is 1 (Mach-number data can be used directly as
velocities).  Conserved states are ``q = [rho, rho*u1, rho*u2, rho*u3, E]``
with ``E = rho*cv*T + rho*|u|^2/2``; primitive states are
``v = [rho, u1, u2, u3, T]``.  All functions broadcast over leading axes
with the component axis last.

The entropy pair is ``S = -rho*s`` with specific entropy
``s = cv*ln T - R*ln rho``; its entropy variables are

    w = [cp - s - |u|^2/(2T),  u/T,  -1/T],

and the flux potential is ``psi_m = R*rho*u_m``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GasModel:
    gamma: float = 1.4
    R: float = None  # type: ignore[assignment]  # defaults to 1/gamma
    mu: float = 0.0
    Pr: float = 0.75

    def __post_init__(self) -> None:
        if self.R is None:
            object.__setattr__(self, "R", 1.0 / self.gamma)
        assert self.gamma > 1 and self.R > 0

    @property
    def cv(self) -> float:
        return self.R / (self.gamma - 1.0)

    @property
    def cp(self) -> float:
        return self.gamma * self.R / (self.gamma - 1.0)

    @property
    def kappa(self) -> float:
        """Heat conductivity from the Prandtl number."""
        return self.cp * self.mu / self.Pr


def cons_to_prim(q: np.ndarray, gas: GasModel) -> np.ndarray:
    rho = q[..., 0]
    u = q[..., 1:4] / rho[..., None]
    e_int = q[..., 4] - 0.5 * rho * np.sum(u * u, axis=-1)
    T = e_int / (rho * gas.cv)
    return np.concatenate([rho[..., None], u, T[..., None]], axis=-1)


def prim_to_cons(v: np.ndarray, gas: GasModel) -> np.ndarray:
    rho = v[..., 0]
    u = v[..., 1:4]
    T = v[..., 4]
    E = rho * gas.cv * T + 0.5 * rho * np.sum(u * u, axis=-1)
    return np.concatenate([rho[..., None], rho[..., None] * u, E[..., None]], axis=-1)


def pressure(q: np.ndarray, gas: GasModel) -> np.ndarray:
    v = cons_to_prim(q, gas)
    return v[..., 0] * gas.R * v[..., 4]


def specific_entropy(q: np.ndarray, gas: GasModel) -> np.ndarray:
    v = cons_to_prim(q, gas)
    return gas.cv * np.log(v[..., 4]) - gas.R * np.log(v[..., 0])


def entropy(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Mathematical entropy ``S = -rho*s`` (convex in q)."""
    return -q[..., 0] * specific_entropy(q, gas)


def entropy_vars(q: np.ndarray, gas: GasModel) -> np.ndarray:
    v = cons_to_prim(q, gas)
    u = v[..., 1:4]
    T = v[..., 4]
    s = gas.cv * np.log(T) - gas.R * np.log(v[..., 0])
    w1 = gas.cp - s - 0.5 * np.sum(u * u, axis=-1) / T
    return np.concatenate(
        [w1[..., None], u / T[..., None], -1.0 / T[..., None]], axis=-1
    )


def entropy_to_cons(w: np.ndarray, gas: GasModel) -> np.ndarray:
    T = -1.0 / w[..., 4]
    u = w[..., 1:4] * T[..., None]
    s = gas.cp - w[..., 0] - 0.5 * np.sum(u * u, axis=-1) / T
    rho = np.exp((gas.cv * np.log(T) - s) / gas.R)
    return prim_to_cons(
        np.concatenate([rho[..., None], u, T[..., None]], axis=-1), gas
    )


def dwdq(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Jacobian ``dw/dq`` (symmetric positive definite), shape (..., 5, 5)."""
    v = cons_to_prim(q, gas)
    rho = v[..., 0]
    u = v[..., 1:4]
    T = v[..., 4]
    usq = np.sum(u * u, axis=-1)

    shape = q.shape[:-1]
    dWdV = np.zeros(shape + (5, 5))
    dWdV[..., 0, 0] = gas.R / rho
    for i in range(3):
        dWdV[..., 0, 1 + i] = -u[..., i] / T
        dWdV[..., 1 + i, 1 + i] = 1.0 / T
        dWdV[..., 1 + i, 4] = -u[..., i] / T**2
    dWdV[..., 0, 4] = -gas.cv / T + 0.5 * usq / T**2
    dWdV[..., 4, 4] = 1.0 / T**2

    dVdQ = np.zeros(shape + (5, 5))
    dVdQ[..., 0, 0] = 1.0
    for i in range(3):
        dVdQ[..., 1 + i, 0] = -u[..., i] / rho
        dVdQ[..., 1 + i, 1 + i] = 1.0 / rho
        dVdQ[..., 4, 1 + i] = -u[..., i] / (rho * gas.cv)
    dVdQ[..., 4, 0] = (0.5 * usq - gas.cv * T) / (rho * gas.cv)
    dVdQ[..., 4, 4] = 1.0 / (rho * gas.cv)
    return dWdV @ dVdQ


def dqdw(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Inverse entropy Jacobian ``dq/dw`` at the state q."""
    return np.linalg.inv(dwdq(q, gas))


def euler_flux(q: np.ndarray, gas: GasModel, n: np.ndarray) -> np.ndarray:
    """Inviscid flux contracted with a (metric-scaled) direction vector."""
    v = cons_to_prim(q, gas)
    rho = v[..., 0]
    u = v[..., 1:4]
    p = rho * gas.R * v[..., 4]
    un = np.sum(u * n, axis=-1)
    f = np.empty(np.broadcast_shapes(q.shape[:-1], n.shape[:-1]) + (5,))
    f[..., 0] = rho * un
    f[..., 1:4] = rho[..., None] * u * un[..., None] + p[..., None] * n
    f[..., 4] = (q[..., 4] + p) * un
    return f


def max_wavespeed(q: np.ndarray, gas: GasModel, n: np.ndarray) -> np.ndarray:
    """``|u . n| + c |n|`` for the direction vector n."""
    v = cons_to_prim(q, gas)
    c = np.sqrt(gas.gamma * gas.R * v[..., 4])
    un = np.sum(v[..., 1:4] * n, axis=-1)
    return np.abs(un) + c * np.sqrt(np.sum(n * n, axis=-1))


def characteristic_dissipation(
    q: np.ndarray, gas: GasModel, n: np.ndarray
) -> np.ndarray:
    """Upwind dissipation matrix ``|A(q; n)| dq/dw``, shape (..., 5, 5).

    ``A`` is the Jacobian of :func:`euler_flux` in the direction ``n``.  The
    product with the entropy Hessian is symmetric positive semi-definite no
    matter the evaluation state, so a penalty ``-1/2 |A| dq/dw (w_a - w_b)``
    is entropy dissipative while damping each characteristic field at its
    own wave speed (the scalar variant damps everything at ``|u.n| + c``).
    """
    v = cons_to_prim(q, gas)
    rho = v[..., 0]
    u = v[..., 1:4]
    T = v[..., 4]
    p = rho * gas.R * T
    c = np.sqrt(gas.gamma * gas.R * T)
    h = (q[..., 4] + p) / rho  # total specific enthalpy

    nn = np.sqrt(np.sum(n * n, axis=-1))
    nhat = n / nn[..., None]
    un = np.sum(u * nhat, axis=-1)

    # tangent pair: reflect the basis vector least aligned with nhat
    shape = np.broadcast_shapes(q.shape[:-1], n.shape[:-1])
    pick = np.argmin(np.abs(nhat), axis=-1)
    e = np.zeros(shape + (3,))
    np.put_along_axis(e, pick[..., None], 1.0, axis=-1)
    t1 = e - np.sum(e * nhat, axis=-1)[..., None] * nhat
    t1 /= np.sqrt(np.sum(t1 * t1, axis=-1))[..., None]
    t2 = np.cross(nhat, t1)

    r = np.zeros(shape + (5, 5))
    r[..., 0, 0] = r[..., 0, 1] = r[..., 0, 4] = 1.0
    r[..., 1:4, 0] = u - c[..., None] * nhat
    r[..., 1:4, 1] = u
    r[..., 1:4, 2] = t1
    r[..., 1:4, 3] = t2
    r[..., 1:4, 4] = u + c[..., None] * nhat
    r[..., 4, 0] = h - c * un
    r[..., 4, 1] = 0.5 * np.sum(u * u, axis=-1)
    r[..., 4, 2] = np.sum(u * t1, axis=-1)
    r[..., 4, 3] = np.sum(u * t2, axis=-1)
    r[..., 4, 4] = h + c * un

    lam = np.empty(shape + (5,))
    lam[..., 0] = np.abs(un - c)
    lam[..., 1:4] = np.abs(un)[..., None]
    lam[..., 4] = np.abs(un + c)

    # |A| H = R |Lambda| R^-1 H; |Lambda| commutes with the symmetrizer on
    # the repeated eigenspace, so this is symmetric PSD up to roundoff
    d = r @ (lam[..., :, None] * np.linalg.solve(r, dqdw(q, gas)))
    d = 0.5 * (d + np.swapaxes(d, -1, -2))
    return d * nn[..., None, None]


def entropy_potential(q: np.ndarray, gas: GasModel, n: np.ndarray) -> np.ndarray:
    """Flux potential ``psi . n = R * rho * (u . n)``."""
    return gas.R * np.sum(q[..., 1:4] * n, axis=-1)


def log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Logarithmic mean ``(a - b)/ln(a/b)`` with a series branch near a == b."""
    a, b = np.broadcast_arrays(a, b)
    f2 = ((a - b) / (a + b)) ** 2
    near = f2 < 1e-4
    series = (a + b) / (2.0 + f2 * (2.0 / 3.0 + f2 * (2.0 / 5.0 + f2 * (2.0 / 7.0))))
    ratio = np.where(near, 1.0, np.abs(a / np.where(near, a, b)))
    # ratio == 1 exactly on the series branch, so the log is safe
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (a - b) / np.log(ratio)
    return np.where(near, series, direct)


def chandrashekar_flux(qL: np.ndarray, qR: np.ndarray, gas: GasModel, n: np.ndarray) -> np.ndarray:
    """Entropy-conservative two-point flux contracted with n.

    Satisfies ``(w(qL) - w(qR)) . f* = psi(qL) . n - psi(qR) . n`` for
    the entropy pair of this module (any R), and is kinetic-energy
    preserving.  ``n`` may vary per point (metric-averaged directions).
    """
    vL = cons_to_prim(qL, gas)
    vR = cons_to_prim(qR, gas)
    rhoL, rhoR = vL[..., 0], vR[..., 0]
    uL, uR = vL[..., 1:4], vR[..., 1:4]
    TL, TR = vL[..., 4], vR[..., 4]
    betaL = 1.0 / (2.0 * gas.R * TL)
    betaR = 1.0 / (2.0 * gas.R * TR)

    rho_ln = log_mean(rhoL, rhoR)
    beta_ln = log_mean(betaL, betaR)
    u_avg = 0.5 * (uL + uR)
    usq_avg = 0.5 * (np.sum(uL * uL, axis=-1) + np.sum(uR * uR, axis=-1))
    p_mean = 0.5 * (rhoL + rhoR) / (betaL + betaR)

    un = np.sum(u_avg * n, axis=-1)
    f = np.empty(np.broadcast_shapes(qL.shape[:-1], qR.shape[:-1], n.shape[:-1]) + (5,))
    mdot = rho_ln * un
    f[..., 0] = mdot
    f[..., 1:4] = mdot[..., None] * u_avg + p_mean[..., None] * n
    f[..., 4] = mdot * (
        0.5 / ((gas.gamma - 1.0) * beta_ln) - 0.5 * usq_avg
    ) + np.sum(f[..., 1:4] * u_avg, axis=-1)
    return f


def viscous_flux(q: np.ndarray, grad_w: np.ndarray, gas: GasModel) -> np.ndarray:
    """Viscous fluxes from entropy-variable gradients.

    ``grad_w[..., j, :]`` holds the physical gradient ``dw/dx_j``.
    Returns ``F[..., m, :]``, the viscous flux in physical direction m:
    Newtonian stress with Stokes' hypothesis plus Fourier heat flux.
    """
    v = cons_to_prim(q, gas)
    u = v[..., 1:4]
    T = v[..., 4]

    # dT/dx_j = T^2 dw5/dx_j ;  du_i/dx_j = T dw_{1+i}/dx_j + u_i T dw5/dx_j
    dw5 = grad_w[..., 4]
    dT = T[..., None] ** 2 * dw5
    du = (
        T[..., None, None] * np.swapaxes(grad_w[..., 1:4], -1, -2)
        + u[..., :, None] * (T[..., None] * dw5)[..., None, :]
    )
    div = np.trace(du, axis1=-2, axis2=-1)
    tau = gas.mu * (du + np.swapaxes(du, -1, -2))
    idx = np.arange(3)
    tau[..., idx, idx] -= (2.0 / 3.0) * gas.mu * div[..., None]

    F = np.zeros(q.shape[:-1] + (3, 5))
    F[..., :, 1:4] = np.swapaxes(tau, -1, -2)  # F[m, 1+i] = tau_im
    F[..., :, 4] = np.einsum("...im,...i->...m", tau, u) + gas.kappa * dT
    return F


def cartesian_viscous_matrices(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Coefficient matrices ``C[..., m, j]`` with
    ``F^v_m = sum_j C_mj dw/dx_j`` for the viscous flux above.

    The block structure satisfies ``C_mj = C_jm^T`` and the assembled
    ``3N x 3N`` operator is positive semidefinite.
    """
    v = cons_to_prim(q, gas)
    u = v[..., 1:4]
    T = v[..., 4]
    usq = np.sum(u * u, axis=-1)
    mu, kap = gas.mu, gas.kappa

    d = np.eye(3)
    C = np.zeros(q.shape[:-1] + (3, 3, 5, 5))
    muT = mu * T
    for m in range(3):
        for j in range(3):
            for i in range(3):
                for k in range(3):
                    C[..., m, j, 1 + i, 1 + k] = muT * (
                        d[j, m] * d[i, k] + d[j, i] * d[k, m] - (2.0 / 3.0) * d[i, m] * d[k, j]
                    )
                C[..., m, j, 1 + i, 4] = muT * (
                    d[j, m] * u[..., i] + d[j, i] * u[..., m] - (2.0 / 3.0) * d[i, m] * u[..., j]
                )
            for k in range(3):
                C[..., m, j, 4, 1 + k] = muT * (
                    d[j, m] * u[..., k] + d[k, m] * u[..., j] - (2.0 / 3.0) * d[k, j] * u[..., m]
                )
            C[..., m, j, 4, 4] = muT * (
                d[j, m] * usq + u[..., j] * u[..., m] / 3.0
            ) + kap * T**2 * d[j, m]
    return C


def viscous_coefficient_matrices(
    q: np.ndarray, gas: GasModel, a: np.ndarray, jac: np.ndarray
) -> np.ndarray:
    """Metric-contracted viscous blocks ``Chat[..., l, a]`` such that the
    reference-direction viscous flux is ``g_l = sum_a Chat_la (D_a w)``.

    ``a`` holds the metric terms ``a[..., l, m]`` and ``jac`` the
    Jacobian determinant.
    """
    C = cartesian_viscous_matrices(q, gas)
    return np.einsum("...lm,...mjpq,...aj->...lapq", a, C, a) / jac[..., None, None, None, None]
