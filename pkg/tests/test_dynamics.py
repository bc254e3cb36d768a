"""Plant/error dynamics and integrator tests.

The two-formulation consistency check integrates both the plant (ambient
coordinates) and the error dynamics with an independent high-order adaptive
integrator, isolating the right-hand-side algebra from the fixed-step
production scheme.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from liecontrol.config import default_config
from liecontrol.dynamics import (Gains, NumericalAbort, PlantParams,
                                 coupling_term, error_rhs, ideal_control,
                                 nominal_rhs, plant_rhs, simulate_plant, step)
from liecontrol.errfun import Se3ErrorFunction
from liecontrol.groups import (SE3, Ad, GroupElement, ad, config_error,
                               exp_group, frob_norm, hat, inv_mat, vel_error)
from liecontrol.scenario import leader_desired
from liecontrol.validate import random_se3, random_twist

INERTIA = np.diag([1.1, 0.9, 1.3, 1.8, 1.8, 1.8])


@pytest.fixture
def errf():
    return Se3ErrorFunction.isotropic()


@pytest.fixture
def gains():
    return Gains(damping=4.0 * np.eye(6), kp=1.0)


def _full_plant():
    return PlantParams(
        inertia=lambda t: INERTIA,
        fault=lambda t: np.array([0.8, 1.0, 0.9, 1.0, 0.7, 1.0]),
        mu=lambda g, xi, t: -0.3 * xi + 0.05 * np.sin(np.arange(1.0, 7.0) * t),
        dist=lambda t: 0.1 * np.sin(2 * np.pi * t / np.arange(5.0, 11.0)),
    )


# -- plant_rhs ------------------------------------------------------------------

def test_plant_rhs_rest_is_zero():
    plant = PlantParams.unforced(INERTIA)
    out = plant_rhs(GroupElement.identity(), np.zeros(6), np.zeros(6), plant, 0.0)
    assert_allclose(out, np.zeros(6))


def test_plant_rhs_unit_inertia_formula(rng):
    # with I = identity the inertia drops out of the gyroscopic sandwich
    eff = rng.uniform(0.3, 1.0, size=6)
    mu_val = rng.normal(size=6)
    d_val = rng.normal(size=6)
    plant = PlantParams(inertia=lambda t: np.eye(6), fault=lambda t: eff,
                        mu=lambda g, xi, t: mu_val, dist=lambda t: d_val)
    xi = rng.normal(size=6)
    u = rng.normal(size=6)
    out = plant_rhs(GroupElement.identity(), xi, u, plant, 0.0)
    assert_allclose(out, ad(xi).T @ xi + eff * u + mu_val + d_val, atol=1e-13)


def test_plant_rhs_rejects_singular_inertia():
    plant = PlantParams.unforced(np.diag([1.0, 1.0, 0.0, 1.0, 1.0, 1.0]))
    with pytest.raises(NumericalAbort):
        plant_rhs(GroupElement.identity(), np.ones(6), np.zeros(6), plant, 0.0)


def test_free_body_conserves_kinetic_energy():
    # unforced Euler-Poincare flow keeps 0.5 xi^T I xi constant: 1e4 steps
    plant = PlantParams.unforced(INERTIA)
    xi0 = np.array([0.7, -0.4, 0.9, 0.3, -0.2, 0.5])
    _, vels, _ = simulate_plant(GroupElement.identity(), xi0, plant,
                                lambda t, g, xi: np.zeros(6), 1e-3, 10_000)
    energy = 0.5 * np.einsum("ij,jk,ik->i", vels, INERTIA, vels)
    assert np.max(np.abs(energy - energy[0])) <= 1e-5 * energy[0]


# -- ideal control ----------------------------------------------------------------

def test_ideal_control_at_rest_is_zero(errf, gains):
    plant = PlantParams.unforced(INERTIA)
    u = ideal_control(GroupElement.identity(), np.zeros(6), GroupElement.identity(),
                      np.zeros(6), np.zeros(6), INERTIA, plant.mu, gains, errf)
    assert_allclose(u, np.zeros(6), atol=1e-14)


def test_ideal_control_linearizes_error_dynamics(errf, gains, rng):
    # substituting u* into the error dynamics (no fault, no disturbance)
    # reproduces the nominal vector field exactly
    curve = default_config().leader.curve
    plant = PlantParams(inertia=lambda t: INERTIA, fault=lambda t: np.ones(6),
                        mu=lambda g, xi, t: -0.3 * xi, dist=lambda t: np.zeros(6))
    for _ in range(20):
        g_err = random_se3(rng, max_angle=1.0, max_trans=2.0)
        xi_err = rng.normal(size=6)
        t = rng.uniform(0.0, 10.0)
        pose, vel, acc = leader_desired(curve, t)
        u = ideal_control(g_err, xi_err, pose, vel, acc, INERTIA, plant.mu,
                          gains, errf, t)
        _, xi_dot = error_rhs(g_err, xi_err, u, plant, pose, vel, acc, t)
        _, xi_dot_nom = nominal_rhs(g_err, xi_err, gains, errf)
        assert np.max(np.abs(xi_dot - xi_dot_nom)) <= 1e-8


def test_coupling_term_hover_reduction(errf, rng):
    # constant desired pose: the drift reduces to the gyroscopic term plus mu
    def mu(g, xi, t):
        return -0.3 * xi

    g_err = random_se3(rng, max_angle=1.0, max_trans=2.0)
    xi_err = rng.normal(size=6)
    tau = coupling_term(g_err, xi_err, GroupElement.identity(), np.zeros(6),
                        np.zeros(6), INERTIA, mu, 2.0)
    expected = np.linalg.inv(INERTIA) @ (ad(xi_err).T @ (INERTIA @ xi_err))
    expected += mu(None, xi_err, 2.0)
    assert_allclose(tau, expected, atol=1e-12)


# -- nominal dynamics --------------------------------------------------------------

def test_nominal_rhs_equilibrium(errf, gains):
    g_dot, xi_dot = nominal_rhs(GroupElement.identity(), np.zeros(6), gains, errf)
    assert_allclose(g_dot, np.zeros((4, 4)))
    assert_allclose(xi_dot, np.zeros(6))


def test_nominal_rhs_pure_gradient_descent(errf, gains, rng):
    g_err = random_se3(rng)
    _, xi_dot = nominal_rhs(g_err, np.zeros(6), gains, errf)
    assert_allclose(xi_dot, -gains.kp * errf.grad(g_err))


def test_nominal_settling_time(errf, gains):
    # published initial error of the first vehicle settles below 1% in 2.5 s
    g_err = GroupElement.from_rotation_translation(np.eye(3), [0.0, 1.0, -6.0])
    xi_err = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    dt, n_steps = 1e-3, 2500
    pose, vec = [g_err.mat], xi_err
    psi0 = errf.value(g_err)

    def rhs(t, v, poses):
        return nominal_rhs(GroupElement(poses[0], SE3, check=False), v, gains, errf)[1]

    settled = None
    for k in range(n_steps):
        pose, vec = step(k * dt, dt, pose, vec, lambda v: [v], rhs)
        if errf.value(GroupElement(pose[0], SE3, check=False)) < 0.01 * psi0:
            settled = (k + 1) * dt
            break
    assert settled is not None and settled <= 2.5


# -- error dynamics -----------------------------------------------------------------

def test_error_rhs_two_path_consistency(rng):
    # path A: plant in ambient coordinates, errors formed afterwards;
    # path B: error dynamics directly.  Both via solve_ivp at tight tolerance.
    curve = default_config().leader.curve
    plant = _full_plant()

    def u_of_t(t):
        return 0.2 * np.sin(t * np.arange(1.0, 7.0) + 0.3)

    g_init = random_se3(rng, max_angle=0.5, max_trans=1.0)
    xi_init = 0.3 * rng.normal(size=6)

    def rhs_plant(t, y):
        g = GroupElement(y[:16].reshape(4, 4), SE3, check=False)
        xi = y[16:]
        return np.concatenate([(g.mat @ hat(xi)).ravel(),
                               plant_rhs(g, xi, u_of_t(t), plant, t)])

    pose0, vel0, _ = leader_desired(curve, 0.0)
    g_err0 = config_error(pose0, g_init)
    xi_err0 = vel_error(g_err0, xi_init, vel0)

    def rhs_error(t, y):
        g_err = GroupElement(y[:16].reshape(4, 4), SE3, check=False)
        xi_err = y[16:]
        pose, vel, acc = leader_desired(curve, t)
        g_dot, xi_dot = error_rhs(g_err, xi_err, u_of_t(t), plant, pose, vel, acc, t)
        return np.concatenate([g_dot.ravel(), xi_dot])

    sol_a = solve_ivp(rhs_plant, (0.0, 1.0),
                      np.concatenate([g_init.mat.ravel(), xi_init]),
                      rtol=1e-11, atol=1e-12, method="DOP853")
    sol_b = solve_ivp(rhs_error, (0.0, 1.0),
                      np.concatenate([g_err0.mat.ravel(), xi_err0]),
                      rtol=1e-11, atol=1e-12, method="DOP853")
    g_end = sol_a.y[:16, -1].reshape(4, 4)
    xi_end = sol_a.y[16:, -1]
    pose1, vel1, _ = leader_desired(curve, 1.0)
    g_err_a = inv_mat(pose1.mat) @ g_end
    xi_err_a = xi_end - Ad(GroupElement(inv_mat(g_err_a), SE3, check=False)) @ vel1
    assert np.max(np.abs(g_err_a - sol_b.y[:16, -1].reshape(4, 4))) <= 1e-6
    assert np.max(np.abs(xi_err_a - sol_b.y[16:, -1])) <= 1e-6


def test_error_rhs_zero_desired_reduces_to_plant(rng):
    # constant identity desired pose: error coordinates are plant coordinates
    plant = _full_plant()
    g = random_se3(rng, max_angle=1.0, max_trans=2.0)
    xi = rng.normal(size=6)
    u = rng.normal(size=6)
    t = 1.7
    _, xi_dot_err = error_rhs(g, xi, u, plant, GroupElement.identity(),
                              np.zeros(6), np.zeros(6), t)
    assert_allclose(xi_dot_err, plant_rhs(g, xi, u, plant, t), atol=1e-12)


def test_error_rhs_inverts_to_nominal(errf, gains, rng):
    # u = (I E^{-1}) (-tau - A xi - kp grad^T) recovers the nominal field
    # even with actuator faults, when the controller knows them
    plant = _full_plant()
    curve = default_config().leader.curve
    g_err = random_se3(rng, max_angle=1.0, max_trans=2.0)
    xi_err = rng.normal(size=6)
    t = 0.9
    pose, vel, acc = leader_desired(curve, t)
    tau = coupling_term(g_err, xi_err, pose, vel, acc, INERTIA, plant.mu, t)
    target = -gains.damping @ xi_err - gains.kp * errf.grad(g_err)
    u = (INERTIA @ (target - tau)) / plant.fault(t)
    plant_no_dist = PlantParams(inertia=plant.inertia, fault=plant.fault,
                                mu=plant.mu, dist=lambda t: np.zeros(6))
    _, xi_dot = error_rhs(g_err, xi_err, u, plant_no_dist, pose, vel, acc, t)
    assert_allclose(xi_dot, nominal_rhs(g_err, xi_err, gains, errf)[1], atol=1e-10)


# -- integrator -----------------------------------------------------------------------

def test_step_one_parameter_subgroup_exact(rng):
    # constant body velocity, no forces: g(t) = g(0) exp(t xi^) exactly
    g0 = random_se3(rng)
    xi = random_twist(rng)
    pose, vec = [g0.mat], xi.copy()
    dt, n = 1e-2, 100
    for k in range(n):
        pose, vec = step(k * dt, dt, pose, vec, lambda v: [v],
                         lambda t, v, p: np.zeros(6))
    assert frob_norm(pose[0] - (g0.mat @ exp_group(n * dt * xi).mat)) <= 1e-11


def test_step_richardson_first_order_configuration(rng):
    # halving dt roughly halves the terminal configuration error (Lie-Euler)
    plant = PlantParams.unforced(INERTIA)
    g0 = random_se3(rng)
    xi0 = 0.5 * rng.normal(size=6)

    def terminal(dt):
        n = int(round(1.0 / dt))
        poses, vels, _ = simulate_plant(g0, xi0, plant,
                                        lambda t, g, xi: np.zeros(6), dt, n)
        return poses[-1].mat

    ref = terminal(1.25e-4)
    err_coarse = frob_norm(terminal(1e-3) - ref)
    err_fine = frob_norm(terminal(5e-4) - ref)
    ratio = err_coarse / err_fine
    assert 1.5 <= ratio <= 3.0  # first-order convergence band


def test_step_orthogonality_long_run():
    plant = PlantParams.unforced(INERTIA)
    xi0 = np.array([0.9, -0.7, 1.1, 0.2, 0.1, -0.3])
    poses, _, _ = simulate_plant(GroupElement.identity(), xi0, plant,
                                 lambda t, g, xi: np.zeros(6), 1e-3, 30_000)
    R = poses[-1].rotation
    assert frob_norm(R.T @ R - np.eye(3)) <= 1e-9


def test_step_detects_nan():
    with pytest.raises(NumericalAbort):
        step(0.0, 1e-3, [np.eye(4)], np.zeros(6), lambda v: [v],
             lambda t, v, p: np.full(6, np.nan), step_index=7)


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        step(0.0, 0.0, [np.eye(4)], np.zeros(6), lambda v: [v],
             lambda t, v, p: np.zeros(6))


def test_ideal_closed_loop_tracks_nominal_envelope(errf, gains, rng):
    # with exact model knowledge, the actual error trajectory follows the
    # nominal one within integration tolerance
    plant = PlantParams(inertia=lambda t: INERTIA, fault=lambda t: np.ones(6),
                        mu=lambda g, xi, t: -0.3 * xi, dist=lambda t: np.zeros(6))
    curve = default_config().leader.curve
    pose0, vel0, _ = leader_desired(curve, 0.0)
    g0 = GroupElement(pose0.mat @ exp_group(
        np.array([0.1, -0.05, 0.08, 0.3, -0.2, 0.25])).mat, SE3, check=False)
    xi0 = vel0 + np.array([0.1, 0.0, -0.1, 0.2, 0.0, 0.1])

    g_err0 = config_error(pose0, g0)
    xi_err0 = vel_error(g_err0, xi0, vel0)

    def control(t, g, xi):
        pose, vel, acc = leader_desired(curve, t)
        g_err = config_error(pose, g)
        xi_err = vel_error(g_err, xi, vel)
        return ideal_control(g_err, xi_err, pose, vel, acc, INERTIA, plant.mu,
                             gains, errf, t)

    dt, n = 1e-3, 2000
    poses, vels, times = simulate_plant(g0, xi0, plant, control, dt, n)

    nom_pose, nom_vec = [g_err0.mat], xi_err0.copy()
    tol = 5e-3
    for k in range(n):
        nom_pose, nom_vec = step(times[k], dt, nom_pose, nom_vec, lambda v: [v],
                                 lambda t, v, p: nominal_rhs(
                                     GroupElement(p[0], SE3, check=False), v,
                                     gains, errf)[1])
        pose_k, vel_k, _ = leader_desired(curve, times[k + 1])
        g_err = config_error(pose_k, poses[k + 1])
        xi_err = vel_error(g_err, vels[k + 1], vel_k)
        psi_nom = errf.value(GroupElement(nom_pose[0], SE3, check=False))
        assert errf.value(g_err) <= psi_nom + tol
        assert np.linalg.norm(xi_err) <= np.linalg.norm(nom_vec) + tol
