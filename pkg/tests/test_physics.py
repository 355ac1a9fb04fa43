"""Thermodynamics, entropy-variable, and flux-function oracles.

Derivative claims are checked against central finite differences;
algebraic identities (entropy conservation of the two-point flux,
coefficient-matrix symmetry) are checked at random states drawn from a
seeded generator.
"""

import numpy as np
import numpy.testing as npt
import pytest

from gclopt.physics import (
    GasModel,
    cartesian_viscous_matrices,
    chandrashekar_flux,
    characteristic_dissipation,
    cons_to_prim,
    dqdw,
    dwdq,
    entropy,
    entropy_potential,
    entropy_to_cons,
    entropy_vars,
    euler_flux,
    log_mean,
    max_wavespeed,
    pressure,
    prim_to_cons,
    specific_entropy,
    viscous_flux,
)

GAS = GasModel(mu=0.1)
VISCOUS = GasModel(mu=0.3, Pr=0.75)


def random_states(n, seed, spread=1.0):
    rng = np.random.default_rng(seed)
    v = np.empty((n, 5))
    v[:, 0] = 1.0 + 0.5 * spread * rng.uniform(-1.0, 1.0, n)  # rho
    v[:, 1:4] = 1.5 * spread * rng.uniform(-1.0, 1.0, (n, 3))
    v[:, 4] = 1.0 + 0.5 * spread * rng.uniform(-1.0, 1.0, n)  # T
    return prim_to_cons(v, GAS)


def test_gas_model_defaults():
    gas = GasModel()
    npt.assert_allclose(gas.R, 1.0 / 1.4, rtol=1e-15)
    npt.assert_allclose(gas.cv, gas.R / 0.4, rtol=1e-15)
    npt.assert_allclose(gas.cp - gas.cv, gas.R, rtol=1e-15)
    # sound speed 1 at the reference state rho = T = 1
    q = prim_to_cons(np.array([1.0, 0.0, 0.0, 0.0, 1.0]), gas)
    npt.assert_allclose(max_wavespeed(q, gas, np.array([1.0, 0.0, 0.0])), 1.0,
                        rtol=1e-14)


def test_prim_cons_roundtrip():
    q = random_states(64, 0)
    v = cons_to_prim(q, GAS)
    npt.assert_allclose(prim_to_cons(v, GAS), q, rtol=1e-14, atol=1e-14)


def test_pressure_is_ideal_gas_law():
    q = random_states(16, 1)
    v = cons_to_prim(q, GAS)
    npt.assert_allclose(pressure(q, GAS), v[:, 0] * GAS.R * v[:, 4], rtol=1e-14)


def test_entropy_vars_roundtrip():
    q = random_states(64, 2)
    npt.assert_allclose(entropy_to_cons(entropy_vars(q, GAS), GAS), q,
                        rtol=1e-12, atol=1e-13)


def test_entropy_vars_are_entropy_gradient():
    # w = dS/dq, central differences
    q = random_states(20, 3)
    w = entropy_vars(q, GAS)
    h = 1e-6
    for c in range(5):
        dq = np.zeros(5)
        dq[c] = h
        fd = (entropy(q + dq, GAS) - entropy(q - dq, GAS)) / (2.0 * h)
        npt.assert_allclose(fd, w[:, c], rtol=0.0, atol=1e-7)


def test_dwdq_matches_finite_differences():
    q = random_states(10, 4)
    jac = dwdq(q, GAS)
    npt.assert_allclose(jac, np.swapaxes(jac, -1, -2), atol=1e-13)  # symmetric
    h = 1e-6
    for c in range(5):
        dq = np.zeros(5)
        dq[c] = h
        fd = (entropy_vars(q + dq, GAS) - entropy_vars(q - dq, GAS)) / (2.0 * h)
        npt.assert_allclose(fd, jac[:, :, c], rtol=0.0, atol=1e-7)


def test_dwdq_is_positive_definite_and_dqdw_inverts_it():
    q = random_states(32, 5)
    H = dwdq(q, GAS)
    assert np.linalg.eigvalsh(H).min() > 0.0
    prod = dqdw(q, GAS) @ H
    npt.assert_allclose(prod, np.broadcast_to(np.eye(5), prod.shape),
                        rtol=0.0, atol=1e-10)


# -- logarithmic mean ---------------------------------------------------------


def test_log_mean_basic_properties():
    rng = np.random.default_rng(6)
    a = rng.uniform(0.1, 10.0, 200)
    b = rng.uniform(0.1, 10.0, 200)
    lm = log_mean(a, b)
    npt.assert_allclose(log_mean(b, a), lm, rtol=1e-14)
    assert np.all(lm >= np.minimum(a, b) - 1e-14)
    assert np.all(lm <= 0.5 * (a + b) + 1e-14)
    npt.assert_allclose(lm, (a - b) / np.log(a / b), rtol=1e-13)


def test_log_mean_equal_arguments():
    a = np.array([0.3, 1.0, 7.5])
    npt.assert_array_equal(log_mean(a, a), a)


def test_log_mean_series_branch_is_smooth():
    # straddle the series/direct switch at f2 = 1e-4 (|a-b|/(a+b) = 1e-2)
    a = np.float64(1.0)
    for eps in (1e-12, 1e-9, 1e-6, 0.00999, 0.01001, 0.02):
        b = a * (1.0 + eps)
        want = eps / np.log1p(eps) if eps > 1e-7 else 1.0 + eps / 2 - eps**2 / 12
        npt.assert_allclose(log_mean(a, b), want, rtol=1e-12)


# -- inviscid fluxes ----------------------------------------------------------


def test_euler_flux_components():
    q = random_states(16, 7)
    v = cons_to_prim(q, GAS)
    p = pressure(q, GAS)
    n = np.array([1.0, 0.0, 0.0])
    f = euler_flux(q, GAS, n)
    npt.assert_allclose(f[:, 0], q[:, 1], rtol=1e-14)
    npt.assert_allclose(f[:, 1], q[:, 1] * v[:, 1] + p, rtol=1e-14)
    npt.assert_allclose(f[:, 4], (q[:, 4] + p) * v[:, 1], rtol=1e-14)
    # linear in n
    rng = np.random.default_rng(8)
    n2 = rng.standard_normal((16, 3))
    f1 = euler_flux(q, GAS, n2)
    f2 = euler_flux(q, GAS, 2.0 * n2)
    npt.assert_allclose(f2, 2.0 * f1, rtol=1e-13)


def test_chandrashekar_consistency_and_symmetry():
    q = random_states(32, 9)
    n = np.random.default_rng(10).standard_normal((32, 3))
    npt.assert_allclose(chandrashekar_flux(q, q, GAS, n), euler_flux(q, GAS, n),
                        rtol=1e-12, atol=1e-13)
    qa, qb = q[:16], q[16:]
    npt.assert_allclose(chandrashekar_flux(qa, qb, GAS, n[:16]),
                        chandrashekar_flux(qb, qa, GAS, n[:16]), rtol=1e-13)


@pytest.mark.parametrize("R", [1.0 / 1.4, 1.0, 0.7])
def test_chandrashekar_entropy_conservation_identity(R):
    """(w_L - w_R) . f* == psi_L - psi_R, the Tadmor shuffle condition."""
    gas = GasModel(R=R)
    rng = np.random.default_rng(11)
    v = np.empty((256, 5))
    v[:, 0] = rng.uniform(0.4, 2.5, 256)
    v[:, 1:4] = rng.uniform(-2.0, 2.0, (256, 3))
    v[:, 4] = rng.uniform(0.4, 2.5, 256)
    q = prim_to_cons(v, gas)
    qL, qR = q[:128], q[128:]
    n = rng.standard_normal((128, 3))
    f = chandrashekar_flux(qL, qR, gas, n)
    lhs = np.sum((entropy_vars(qL, gas) - entropy_vars(qR, gas)) * f, axis=-1)
    rhs = entropy_potential(qL, gas, n) - entropy_potential(qR, gas, n)
    npt.assert_allclose(lhs, rhs, rtol=0.0, atol=1e-11)


def test_max_wavespeed():
    q = prim_to_cons(np.array([1.0, 0.3, -0.4, 1.2, 1.0]), GAS)
    got = max_wavespeed(q, GAS, np.array([0.0, 3.0, 0.0]))
    npt.assert_allclose(got, 3.0 * (0.4 + 1.0), rtol=1e-14)


# -- interface dissipation ----------------------------------------------------


def test_characteristic_dissipation_is_symmetric_psd():
    q = random_states(48, 12)
    n = np.random.default_rng(13).standard_normal((48, 3))
    d = characteristic_dissipation(q, GAS, n)
    npt.assert_allclose(d, np.swapaxes(d, -1, -2), atol=1e-13)
    assert np.linalg.eigvalsh(d).min() >= -1e-11


def test_characteristic_dissipation_dissipates_entropy():
    # the interface penalty -dw . D dw must not produce entropy
    q = random_states(64, 14)
    w = entropy_vars(q, GAS)
    dw = w[:32] - w[32:]
    d = characteristic_dissipation(0.5 * (q[:32] + q[32:]), GAS,
                                   np.random.default_rng(15).standard_normal((32, 3)))
    quad = np.einsum("np,npq,nq->n", dw, d, dw)
    assert quad.min() >= -1e-12


def test_characteristic_dissipation_supersonic_equals_flux_jacobian():
    """For u.n > c all waves move one way, so |A| H == A H; A from
    central differences of the flux."""
    v = np.array([[1.1, 2.8, 0.4, -0.3, 0.9], [0.8, -3.0, 0.2, 0.5, 1.1]])
    q = prim_to_cons(v, GAS)
    n = np.array([[1.0, 0.1, -0.2], [-1.0, 0.15, 0.1]])
    d = characteristic_dissipation(q, GAS, n)
    h = 1e-5
    A = np.empty((2, 5, 5))
    for c in range(5):
        dq = np.zeros(5)
        dq[c] = h
        A[:, :, c] = (euler_flux(q + dq, GAS, n) - euler_flux(q - dq, GAS, n)) / (2 * h)
    sign = np.sign(np.sum(v[:, 1:4] * n, axis=-1))
    want = sign[:, None, None] * (A @ dqdw(q, GAS))
    # agreement is limited by the O(h^2) difference stencil
    npt.assert_allclose(d, want, rtol=0.0, atol=1e-8 * np.abs(want).max())


# -- viscous terms ------------------------------------------------------------


def test_kappa_from_prandtl():
    npt.assert_allclose(VISCOUS.kappa, VISCOUS.cp * 0.3 / 0.75, rtol=1e-15)


def test_viscous_matrices_block_symmetry():
    q = random_states(24, 16)
    C = cartesian_viscous_matrices(q, VISCOUS)
    for m in range(3):
        for j in range(3):
            npt.assert_allclose(C[:, m, j], np.swapaxes(C[:, j, m], -1, -2),
                                rtol=0.0, atol=1e-12)


def test_viscous_matrices_match_stress_form():
    """sum_j C_mj (dw/dx_j) reproduces the Newtonian stress + Fourier
    flux computed directly from the velocity and temperature gradients."""
    q = random_states(24, 17)
    grad_w = np.random.default_rng(18).standard_normal((24, 3, 5))
    grad_w[..., 0] = 0.0  # w1 never enters the viscous flux
    F_direct = viscous_flux(q, grad_w, VISCOUS)
    C = cartesian_viscous_matrices(q, VISCOUS)
    F_matrix = np.einsum("nmjpq,njq->nmp", C, grad_w)
    npt.assert_allclose(F_matrix, F_direct, rtol=0.0, atol=1e-10)


def test_viscous_flux_ignores_w1_gradient():
    q = random_states(8, 19)
    grad_w = np.random.default_rng(20).standard_normal((8, 3, 5))
    with_w1 = viscous_flux(q, grad_w, VISCOUS)
    grad_w0 = grad_w.copy()
    grad_w0[..., 0] = 0.0
    npt.assert_array_equal(with_w1, viscous_flux(q, grad_w0, VISCOUS))


def test_viscous_quadratic_form_is_psd():
    # entropy dissipation: sum_mj (dw/dx_m) . C_mj (dw/dx_j) >= 0
    q = random_states(40, 21)
    C = cartesian_viscous_matrices(q, VISCOUS)
    theta = np.random.default_rng(22).standard_normal((40, 3, 5))
    quad = np.einsum("nmp,nmjpq,njq->n", theta, C, theta)
    assert quad.min() >= -1e-12


def test_viscous_flux_zero_without_gradients():
    q = random_states(8, 23)
    npt.assert_array_equal(viscous_flux(q, np.zeros((8, 3, 5)), VISCOUS), 0.0)


def test_specific_entropy_definition():
    q = random_states(8, 24)
    v = cons_to_prim(q, GAS)
    want = GAS.cv * np.log(v[:, 4]) - GAS.R * np.log(v[:, 0])
    npt.assert_allclose(specific_entropy(q, GAS), want, rtol=1e-14)
    npt.assert_allclose(entropy(q, GAS), -v[:, 0] * want, rtol=1e-13)
