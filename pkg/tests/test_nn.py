"""Neural controller tests: activation, input packing, learning rules,
sensitivity equations, diagnostic constants."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from liecontrol.errfun import Se3ErrorFunction
from liecontrol.groups import GroupElement, config_error, exp_group, flat12
from liecontrol.nn import (FullSensitivity, LearnParams, N_INPUTS, NNWeights,
                           build_input, control, cost_gradient_W,
                           effort_gradient_V, full_sensitivity_rhs, pi_diag,
                           pi_matrix, sens_rhs_static, sigmoid,
                           ultimate_weight_bound, weight_rate_V, weight_rate_W)
from liecontrol.validate import (_cost_gradient_fd_error, random_se3,
                                 sensitivity_vs_resimulation)

SV_LEARN = dict(rho1=800.0, rho2=2.0, gamma1=2.0, gamma2=0.7,
                alpha1=0.5, alpha2=0.5, eff_inertia_floor=0.1)


# -- activation ---------------------------------------------------------------

def test_sigmoid_at_zero():
    assert_allclose(sigmoid(np.zeros(4)), np.zeros(4))
    assert_allclose(pi_matrix(np.zeros(4)), np.eye(4))


def test_sigmoid_saturation():
    assert sigmoid(np.array([50.0]))[0] == pytest.approx(1.0)
    assert sigmoid(np.array([-50.0]))[0] == pytest.approx(-1.0)
    assert pi_diag(np.array([50.0]))[0] == pytest.approx(0.0, abs=1e-12)


def test_sigmoid_range_and_norm(rng):
    # strict interior on moderate inputs; double precision saturates to +-1
    # (slope 0) for |y| above ~19, still within the closed bounds
    y = 3.0 * rng.normal(size=100)
    s = sigmoid(y)
    assert np.all(np.abs(s) < 1.0)
    assert np.linalg.norm(s) <= np.sqrt(s.size)
    p = pi_diag(y)
    assert np.all(p > 0.0) and np.all(p <= 1.0)
    extreme = sigmoid(np.array([-300.0, 300.0]))
    assert np.all(np.abs(extreme) <= 1.0)
    assert np.all(pi_diag(np.array([-300.0, 300.0])) >= 0.0)


def test_sigmoid_slope_identity(rng):
    # d sigma / dy = 1 - sigma^2 against central differences
    y = rng.normal(size=30)
    h = 1e-6
    fd = (sigmoid(y + h) - sigmoid(y - h)) / (2.0 * h)
    assert np.max(np.abs(fd - pi_diag(y))) <= 1e-8


# -- input packing --------------------------------------------------------------

def test_build_input_identity_case():
    x = build_input(GroupElement.identity(), np.zeros(6),
                    GroupElement.identity(), np.zeros(6), np.zeros(6))
    ident = flat12(np.eye(4))
    assert x.size == N_INPUTS == 42
    assert_allclose(x[:12], ident)
    assert_allclose(x[18:30], ident)
    assert_allclose(np.delete(x, list(range(12)) + list(range(18, 30))), np.zeros(18))


def test_build_input_layout(rng):
    g_err = random_se3(rng)
    g_des = random_se3(rng)
    xi_err, xi_des, dxi_des = rng.normal(size=6), rng.normal(size=6), rng.normal(size=6)
    x = build_input(g_err, xi_err, g_des, xi_des, dxi_des)
    assert_allclose(x[:12], flat12(g_err.mat))
    assert_allclose(x[12:18], xi_err)
    assert_allclose(x[18:30], flat12(g_des.mat))
    assert_allclose(x[30:36], xi_des)
    assert_allclose(x[36:], dxi_des)


def test_build_input_rejects_bad_lengths(rng):
    with pytest.raises(ValueError):
        build_input(GroupElement.identity(), np.zeros(5),
                    GroupElement.identity(), np.zeros(6), np.zeros(6))


# -- forward control -------------------------------------------------------------

def test_control_zero_output_weights(rng):
    w = NNWeights(np.zeros((6, 8)), rng.normal(size=(8, 42)))
    assert_allclose(control(w, rng.normal(size=42)), np.zeros(6))


def test_control_zero_hidden_weights(rng):
    w = NNWeights(rng.normal(size=(6, 8)), np.zeros((8, 42)))
    assert_allclose(control(w, rng.normal(size=42)), np.zeros(6))


def test_control_scalar_case():
    w = NNWeights(np.array([[2.0]]), np.array([[1.0]]))
    assert control(w, np.array([0.5]))[0] == pytest.approx(0.92423431, abs=5e-7)


# -- weights bundle ----------------------------------------------------------------

def test_weights_shape_validation():
    with pytest.raises(ValueError):
        NNWeights(np.zeros((6, 5)), np.zeros((4, 42)))
    with pytest.raises(ValueError):
        NNWeights(np.full((2, 2), np.nan), np.zeros((2, 3)))


def test_weights_save_load_round_trip(rng, tmp_path):
    w = NNWeights(rng.normal(size=(6, 5)), rng.normal(size=(5, 42)))
    path = tmp_path / "weights.csv"
    w.save(path)
    loaded = NNWeights.load(path)
    assert np.array_equal(loaded.W, w.W)
    assert np.array_equal(loaded.V, w.V)


def test_init_random_scale_and_bound(rng):
    w = NNWeights.init_random(6, 50, 42, 0.01, rng)
    assert np.max(np.abs(w.W)) <= 0.01 and np.max(np.abs(w.V)) <= 0.01
    beta = ultimate_weight_bound(LearnParams(**SV_LEARN), 50)
    assert np.linalg.norm(w.W) < beta


def test_learn_params_validation():
    bad = dict(SV_LEARN)
    bad["gamma1"] = 0.0
    with pytest.raises(ValueError):
        LearnParams(**bad)


def test_learn_params_degeneracy_flag():
    degenerate = LearnParams(rho1=1.0, rho2=1.0, gamma1=1.0, gamma2=1.0,
                             alpha1=1.0, alpha2=1.0, eff_inertia_floor=1.0)
    assert degenerate.degenerate(m=1)
    assert not LearnParams(**SV_LEARN).degenerate(m=50)


# -- diagnostic constant -------------------------------------------------------------

def test_ultimate_weight_bound_unit_case():
    p = LearnParams(rho1=1.0, rho2=1.0, gamma1=1.0, gamma2=1.0,
                    alpha1=1.0, alpha2=1.0, eff_inertia_floor=1.0)
    assert ultimate_weight_bound(p, 1) == pytest.approx(1.0)


def test_ultimate_weight_bound_published_parameters():
    assert ultimate_weight_bound(LearnParams(**SV_LEARN), 50) == pytest.approx(
        14142.14, abs=0.01)


def test_ultimate_weight_bound_monotone_in_rate():
    lo = ultimate_weight_bound(LearnParams(**SV_LEARN), 50)
    hi_params = dict(SV_LEARN)
    hi_params["rho1"] = 1600.0
    hi = ultimate_weight_bound(LearnParams(**hi_params), 50)
    assert hi == pytest.approx(2.0 * lo)


# -- sensitivity equations ------------------------------------------------------------

def test_sens_rhs_static_zero_case():
    out = sens_rhs_static(np.zeros((6, 30)), np.zeros(6), np.zeros(5),
                          np.zeros((6, 6)), np.linalg.inv(4.0 * np.eye(6)),
                          1.0, 0.1)
    assert_allclose(out, np.zeros((6, 30)))


def test_sens_rhs_static_drive_blocks(rng):
    # GW = 0, A = 4I, floor 0.1: block j equals (sigma_j / 0.4) I
    sigma = rng.uniform(-0.9, 0.9, size=5)
    out = sens_rhs_static(np.zeros((6, 30)), np.zeros(6), sigma,
                          np.zeros((6, 6)), np.linalg.inv(4.0 * np.eye(6)),
                          1.0, 0.1)
    for j in range(5):
        assert_allclose(out[:, 6 * j:6 * (j + 1)], (sigma[j] / 0.4) * np.eye(6),
                        atol=1e-14)


def test_sens_rhs_static_shape(rng):
    m = 7
    out = sens_rhs_static(rng.normal(size=(6, 6 * m)), rng.normal(size=6),
                          rng.normal(size=m), rng.normal(size=(6, 6)),
                          np.linalg.inv(4.0 * np.eye(6)), 1.0, 0.1)
    assert out.shape == (6, 6 * m)


def test_full_sensitivity_zero_state(rng):
    weights = NNWeights(np.zeros((6, 4)), np.zeros((4, 42)))
    sens = FullSensitivity.zeros(6, 4, 42)
    out = full_sensitivity_rhs(sens, weights, np.zeros(42), np.zeros(6),
                               np.zeros((6, 6)), 4.0 * np.eye(6), 1.0, np.eye(6))
    for block in (out.GW, out.XW, out.GV, out.XV):
        assert_allclose(block, np.zeros_like(block))


def test_full_sensitivity_v_drive_vanishes_with_zero_W(rng):
    weights = NNWeights(np.zeros((6, 4)), rng.normal(size=(4, 42)))
    sens = FullSensitivity(GW=np.zeros((6, 24)), XW=np.zeros((6, 24)),
                           GV=rng.normal(size=(6, 168)), XV=rng.normal(size=(6, 168)))
    hess = rng.normal(size=(6, 6))
    A = 4.0 * np.eye(6)
    out = full_sensitivity_rhs(sens, weights, rng.normal(size=42),
                               rng.normal(size=6), hess, A, 1.0, np.eye(6))
    assert_allclose(out.XV, -A @ sens.XV - hess @ sens.GV, atol=1e-12)


def test_full_sensitivity_pack_unpack_round_trip(rng):
    sens = FullSensitivity(GW=rng.normal(size=(6, 24)), XW=rng.normal(size=(6, 24)),
                           GV=rng.normal(size=(6, 168)), XV=rng.normal(size=(6, 168)))
    back = FullSensitivity.unpack(sens.pack(), 6, 4, 42)
    for a, b in ((sens.GW, back.GW), (sens.XW, back.XW),
                 (sens.GV, back.GV), (sens.XV, back.XV)):
        assert np.array_equal(a, b)


def test_sensitivity_equations_vs_resimulation():
    rel = sensitivity_vs_resimulation(n_hidden=3, horizon=0.02, dt=1e-4,
                                      seed=11, n_w_cols=6, n_v_cols=6)
    assert max(rel.values()) <= 1e-3


# -- learning rules ----------------------------------------------------------------------

def test_cost_gradient_zero_case(rng):
    errf = Se3ErrorFunction.isotropic()
    params = LearnParams(**SV_LEARN)
    out = cost_gradient_W(np.zeros(6), GroupElement.identity(), np.zeros((6, 24)),
                          np.zeros(4), rng.normal(size=(6, 6)), 1.0, errf, params)
    assert_allclose(out, np.zeros((6, 4)))


def test_cost_gradient_velocity_only_term(rng):
    # GW = 0 and identity pose deviation leaves only alpha1 Xi sigma^T / floor
    errf = Se3ErrorFunction.isotropic()
    params = LearnParams(**SV_LEARN)
    xi_dev = rng.normal(size=6)
    sigma = rng.uniform(-0.9, 0.9, size=4)
    out = cost_gradient_W(xi_dev, GroupElement.identity(), np.zeros((6, 24)),
                          sigma, rng.normal(size=(6, 6)), 1.0, errf, params)
    assert_allclose(out, params.alpha1 * np.outer(xi_dev, sigma)
                    / params.eff_inertia_floor, atol=1e-12)


def test_cost_gradient_vs_finite_differences(rng):
    for _ in range(5):
        assert _cost_gradient_fd_error(rng) <= 1e-4


def test_weight_rate_W_zero_case():
    params = LearnParams(**SV_LEARN)
    out = weight_rate_W(np.zeros((6, 4)), np.zeros((6, 4)), 0.0, 0.0, 0.0, 0.0,
                        1.0, params)
    assert_allclose(out, np.zeros((6, 4)))


def test_weight_rate_W_pure_decay(rng):
    # zero gradient, zero GW, identity pose deviation: -gamma1 ||Xi|| W
    params = LearnParams(**SV_LEARN)
    W = rng.normal(size=(6, 4))
    xi_dev_norm = 0.7
    out = weight_rate_W(W, np.zeros((6, 4)), xi_dev_norm, 0.0,
                        hess_norm=3.0, GW_norm=0.0, kp=1.0, params=params)
    assert_allclose(out, -params.gamma1 * xi_dev_norm * W)


def test_weight_rate_W_descends_cost(rng):
    # with damping removed, stepping along the rule decreases the cost to
    # first order under the same static variation model used for the gradient
    errf = Se3ErrorFunction.isotropic()
    params = LearnParams(**SV_LEARN)
    kp, A = 1.0, 4.0 * np.eye(6)
    n, m = 6, 4
    g_err = random_se3(rng, max_angle=0.8, max_trans=1.0)
    g_nom = random_se3(rng, max_angle=0.7, max_trans=1.0)
    xi_err, xi_nom = 0.3 * rng.normal(size=6), 0.3 * rng.normal(size=6)
    sigma = rng.uniform(-0.9, 0.9, size=m)
    GW = 0.5 * rng.normal(size=(n, n * m))
    hess = errf.hess(g_err)
    g_dev = config_error(g_nom, g_err)
    grad = cost_gradient_W(xi_err - xi_nom, g_dev, GW, sigma, hess, kp, errf, params)
    rate = -params.rho1 * grad  # damping zeroed

    sens_xi = -kp * np.linalg.solve(A, hess @ GW) + np.linalg.solve(
        A, np.kron(sigma[np.newaxis, :], np.eye(n) / params.eff_inertia_floor))

    def cost(delta_flat):
        xi_p = xi_err + sens_xi @ delta_flat
        g_p = GroupElement(g_err.mat @ exp_group(GW @ delta_flat).mat,
                           check=False)
        dev = config_error(g_nom, g_p)
        diff = xi_p - xi_nom
        return (0.5 * params.alpha1 * float(diff @ A @ diff)
                + params.alpha2 * errf.value(dev))

    eps = 1e-7
    drop = cost(eps * rate.ravel(order="F")) - cost(np.zeros(n * m))
    assert drop < 0.0


def test_weight_rate_V_zero_hidden(rng):
    params = LearnParams(**SV_LEARN)
    weights = NNWeights(rng.normal(size=(6, 4)), np.zeros((4, 42)))
    # sigma(0) = 0 kills the effort term; V = 0 kills the decay term
    out = weight_rate_V(weights, np.zeros(42), rng.normal(size=6), params)
    assert_allclose(out, np.zeros((4, 42)))


def test_weight_rate_V_pure_decay(rng):
    params = LearnParams(**SV_LEARN)
    weights = NNWeights(np.zeros((6, 4)), rng.normal(size=(4, 42)))
    xi_err = rng.normal(size=6)
    out = weight_rate_V(weights, rng.normal(size=42), xi_err, params)
    assert_allclose(out, -params.gamma2 * np.linalg.norm(xi_err) * weights.V)


def test_weight_rate_V_effort_term_is_effort_gradient(rng):
    params = LearnParams(**SV_LEARN)
    weights = NNWeights(rng.normal(size=(6, 4)), rng.normal(size=(4, 42)))
    x = rng.normal(size=42)
    out = weight_rate_V(weights, x, np.zeros(6), params)
    assert_allclose(out, -params.rho2 * effort_gradient_V(weights, x))


def test_effort_gradient_zero_cases(rng):
    x = rng.normal(size=42)
    assert_allclose(effort_gradient_V(NNWeights(np.zeros((6, 4)),
                                                rng.normal(size=(4, 42))), x),
                    np.zeros((4, 42)))
    w = NNWeights(rng.normal(size=(6, 4)), rng.normal(size=(4, 42)))
    assert_allclose(effort_gradient_V(w, np.zeros(42)), np.zeros((4, 42)))


def test_effort_gradient_vs_finite_differences(rng):
    # 100 random shapes, entrywise relative tolerance 1e-6
    for _ in range(100):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(2, 9))
        M = int(rng.integers(2, 12))
        W = rng.normal(size=(n, m))
        V = rng.normal(size=(m, M))
        x = rng.normal(size=M)
        grad = effort_gradient_V(NNWeights(W, V), x)
        h = 1e-6
        for _ in range(4):  # spot-check entries; full sweep in the suite
            i, j = int(rng.integers(m)), int(rng.integers(M))
            Vp, Vm = V.copy(), V.copy()
            Vp[i, j] += h
            Vm[i, j] -= h
            up = control(NNWeights(W, Vp), x)
            um = control(NNWeights(W, Vm), x)
            fd = (0.5 * up @ up - 0.5 * um @ um) / (2.0 * h)
            # 1e-2 absolute floor keeps finite-difference round-off
            # (~|u|^2 eps / h) out of the entrywise relative comparison
            assert abs(grad[i, j] - fd) <= 1e-6 * (1e-2 + abs(fd))
