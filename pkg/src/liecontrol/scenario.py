"""Leader/follower formation simulation.

One virtual leader with known dynamics tracks an analytic desired curve
under the feedback-linearizing PD law; each agent tracks a fixed offset
from the broadcast leader state with its own neural controller, while its
true plant carries unknown time-varying inertia, actuator faults, gravity
and center-of-mass torque, viscous drag, and seeded disturbances.

Decentralization contract: an agent's update (see :func:`agent_rates`)
receives only the leader broadcast (g0, xi0, xi0_dot) and the agent's own
state and parameters.  Agents never see each other.

Everything is advanced in lockstep by the geometric integrator; per-agent
randomness (inertia constants, disturbance tables, initial weights) comes
from independent child generators seeded by (seed, agent index), so one
agent's configuration cannot perturb another's draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import (AgentConfig, DisturbanceConfig, FaultConfig,
                     LeaderCurveConfig, ScenarioConfig)
from .dynamics import Gains, PlantParams, ideal_control, nominal_rhs, plant_rhs, step
from .errfun import Se3ErrorFunction
from .groups import (SE3, Ad, GroupElement, config_error, exp_group, exp_so3,
                     flat12, rotation_angle, vel_error)
from .nn import (N_INPUTS, LearnParams, NNWeights, build_input,
                 cost_gradient_W, sens_rhs_static, sigmoid, weight_rate_V,
                 weight_rate_W)

N_DIM = 6

RUNLOG_COLUMNS = (
    ["t"]
    + ["r11", "r21", "r31", "r12", "r22", "r32", "r13", "r23", "r33", "px", "py", "pz"]
    + [f"xi{i}" for i in range(1, 7)]
    + ["er11", "er21", "er31", "er12", "er22", "er32", "er13", "er23", "er33",
       "epx", "epy", "epz"]
    + [f"exi{i}" for i in range(1, 7)]
    + [f"nexi{i}" for i in range(1, 7)]
    + ["psi", "psi_nom"]
    + [f"u{i}" for i in range(1, 7)]
    + ["w_norm", "v_norm", "theta"]
    + [f"d{i}" for i in range(1, 7)]
)

NOMINAL_COLUMNS = (
    ["t"]
    + ["er11", "er21", "er31", "er12", "er22", "er32", "er13", "er23", "er33",
       "epx", "epy", "epz"]
    + [f"exi{i}" for i in range(1, 7)]
    + [f"nexi{i}" for i in range(1, 7)]
    + ["psi", "psi_nom"]
)


# -- desired trajectories -----------------------------------------------------


_PRE_POSE_CACHE: dict = {}


def leader_desired(curve: LeaderCurveConfig, t: float) -> tuple[GroupElement, np.ndarray, np.ndarray]:
    """Desired leader pose exp(pre^) exp(a sin(t/T) dir^) with its analytic
    body velocity and acceleration (the exponent direction is fixed, so the
    velocity is just the scalar rate times the direction)."""
    direction = np.asarray(curve.direction, dtype=float)
    key = tuple(curve.pre_twist)
    pre_mat = _PRE_POSE_CACHE.get(key)
    if pre_mat is None:
        pre_mat = exp_group(np.asarray(key, dtype=float)).mat
        _PRE_POSE_CACHE[key] = pre_mat
    s = curve.amplitude * np.sin(t / curve.timescale)
    pose = GroupElement(pre_mat @ exp_group(s * direction).mat, SE3, check=False)
    vel = (curve.amplitude / curve.timescale) * np.cos(t / curve.timescale) * direction
    acc = -(curve.amplitude / curve.timescale ** 2) * np.sin(t / curve.timescale) * direction
    return pose, vel, acc


def agent_desired(g0: GroupElement, xi0: np.ndarray, xi0_dot: np.ndarray,
                  offset: GroupElement) -> tuple[GroupElement, np.ndarray, np.ndarray]:
    """Offset target: pose g0 offset, velocities mapped by Ad(offset^{-1})."""
    adj = Ad(offset.inverse())
    pose = GroupElement(g0.mat @ offset.mat, SE3, check=False)
    return pose, adj @ np.asarray(xi0, dtype=float), adj @ np.asarray(xi0_dot, dtype=float)


# -- plant ingredients --------------------------------------------------------


def fault_efficiencies(cfg: FaultConfig, t: float) -> np.ndarray:
    """Actuator efficiency diagonal: all ones until the start time, then the
    configured profile on the faulty channels."""
    eff = np.ones(N_DIM)
    if cfg.kind == "none" or t <= cfg.start:
        return eff
    if cfg.kind == "const":
        eff[cfg.channels] = cfg.level
    else:  # sin2
        s = np.sin(2.0 * np.pi * t / cfg.period)
        eff[cfg.channels] = cfg.floor + cfg.swing * s * s
    return eff


def body_wrench_accel(g: GroupElement, xi: np.ndarray, inertia_diag: np.ndarray,
                      gravity: np.ndarray, com_offset: np.ndarray,
                      drag: float) -> np.ndarray:
    """Acceleration-level unknown forces: gravity pulled into the body frame,
    the center-of-mass offset torque, and viscous drag, premultiplied by the
    inverse (diagonal) inertia.

        wrench = [r_c x (m R^T a_g); m R^T a_g] - drag * xi
    """
    mass = inertia_diag[3]
    f_body = mass * (g.rotation.T @ gravity)
    r = com_offset
    torque = np.array([r[1] * f_body[2] - r[2] * f_body[1],
                       r[2] * f_body[0] - r[0] * f_body[2],
                       r[0] * f_body[1] - r[1] * f_body[0]])
    wrench = np.concatenate([torque, f_body])
    wrench -= drag * np.asarray(xi, dtype=float)
    return wrench / inertia_diag


def _disturbance_table(cfg: DisturbanceConfig, rng: np.random.Generator) -> np.ndarray:
    """Resolve the per-axis (amplitude, period, phase) triples.

    Shape (6, terms, 3).  Draw order per axis, per term: amplitude, period,
    phase -- fixed so runs are reproducible from the seed alone.
    """
    if cfg.kind == "none":
        return np.zeros((N_DIM, 1, 3))
    if cfg.kind == "explicit":
        return np.asarray(cfg.table, dtype=float)
    table = np.zeros((N_DIM, cfg.terms, 3))
    for axis in range(N_DIM):
        for j in range(cfg.terms):
            table[axis, j, 0] = rng.uniform(*cfg.amplitude_range)
            table[axis, j, 1] = rng.uniform(*cfg.period_range)
            table[axis, j, 2] = rng.uniform(0.0, 2.0 * np.pi)
    return table


@dataclass
class AgentRuntime:
    """Per-agent materialized parameters and initial state."""

    name: str
    offset: GroupElement
    adj_offset_inv: np.ndarray
    plant: PlantParams
    inertia_diag: Callable[[float], np.ndarray]
    disturbance: Callable[[float], np.ndarray]
    learn: LearnParams
    hidden: int
    weights0: NNWeights
    g0: GroupElement
    xi0: np.ndarray


def materialize_agent(cfg: ScenarioConfig, agent: AgentConfig, index: int) -> AgentRuntime:
    """Resolve one agent's randomness and closures.  index is 1-based."""
    rng = np.random.default_rng([cfg.seed, index])
    ine = agent.inertia
    if ine.randomize:
        draws = rng.uniform(0.0, 1.0, size=4)
        rot_base = np.array([0.7, 0.8, 0.6]) + draws[:3]
        mass = 0.8 + draws[3]
    else:
        rot_base = np.asarray(ine.rot_diag, dtype=float)
        mass = ine.mass
    base_diag = np.concatenate([rot_base, mass * np.ones(3)])
    wobble_amp = ine.wobble_amplitude
    wobble_omega = 2.0 * np.pi / ine.wobble_period

    def inertia_diag(t: float) -> np.ndarray:
        return base_diag + wobble_amp * np.sin(wobble_omega * t)

    table = _disturbance_table(agent.disturbance, rng)
    amp = table[:, :, 0]
    omega = 2.0 * np.pi / np.maximum(table[:, :, 1], 1e-12)
    phase = table[:, :, 2]
    if agent.disturbance.kind == "none":
        amp = np.zeros_like(amp)

    def disturbance(t: float) -> np.ndarray:
        return np.sum(amp * np.sin(omega * t + phase), axis=1)

    gravity = np.asarray(agent.forces.gravity, dtype=float)
    com_offset = np.asarray(agent.forces.com_offset, dtype=float)
    drag = agent.forces.drag
    fault_cfg = agent.fault

    plant = PlantParams(
        inertia=lambda t: np.diag(inertia_diag(t)),
        fault=lambda t: fault_efficiencies(fault_cfg, t),
        mu=lambda g, xi, t: body_wrench_accel(g, xi, inertia_diag(t), gravity,
                                              com_offset, drag),
        dist=disturbance,
    )
    weights0 = NNWeights.init_random(N_DIM, agent.hidden, N_INPUTS,
                                     agent.weight_scale, rng)
    offset = GroupElement.from_rotation_translation(
        exp_so3(np.asarray(agent.offset_rotvec, dtype=float)),
        np.asarray(agent.offset_position, dtype=float))
    g_init = GroupElement.from_rotation_translation(
        exp_so3(np.asarray(agent.initial_rotvec, dtype=float)),
        np.asarray(agent.initial_position, dtype=float))
    return AgentRuntime(
        name=agent.name,
        offset=offset,
        adj_offset_inv=Ad(offset.inverse()),
        plant=plant,
        inertia_diag=inertia_diag,
        disturbance=disturbance,
        learn=agent.learn.to_params(agent.eff_inertia_floor),
        hidden=agent.hidden,
        weights0=weights0,
        g0=g_init,
        xi0=np.asarray(agent.initial_velocity, dtype=float),
    )


def leader_initials(cfg: ScenarioConfig) -> tuple[GroupElement, np.ndarray]:
    ld = cfg.leader
    g = GroupElement.from_rotation_translation(
        exp_so3(np.asarray(ld.initial_rotvec, dtype=float)),
        np.asarray(ld.initial_position, dtype=float))
    return g, np.asarray(ld.initial_velocity, dtype=float)


def scenario_gains(cfg: ScenarioConfig) -> tuple[Gains, Se3ErrorFunction]:
    gains = Gains(damping=cfg.gains.damping * np.eye(N_DIM), kp=cfg.gains.kp)
    errf = Se3ErrorFunction.isotropic(cfg.gains.rot_weight, cfg.gains.pos_weight)
    return gains, errf


# -- per-agent update (the decentralization boundary) -------------------------


def agent_rates(t: float, g0: GroupElement, xi0: np.ndarray, xi0_dot: np.ndarray,
                g_mat: np.ndarray, g_nom_mat: np.ndarray, state: np.ndarray,
                rt: AgentRuntime, gains: Gains, errf: Se3ErrorFunction,
                mode: str, damping_inv: np.ndarray) -> np.ndarray:
    """Time derivative of one agent's vector block given only the leader
    broadcast and the agent's own state.  Block layout:
    [xi (6), xi_nom (6), breve(W), breve(V), GW.ravel()]."""
    m = rt.hidden
    xi = state[0:6]
    xi_nom = state[6:12]
    w_end = 12 + N_DIM * m
    v_end = w_end + m * N_INPUTS
    W = state[12:w_end].reshape(N_DIM, m, order="F")
    V = state[w_end:v_end].reshape(m, N_INPUTS, order="F")
    GW = state[v_end:].reshape(N_DIM, N_DIM * m)

    g = GroupElement(g_mat, SE3, check=False)
    g_nom = GroupElement(g_nom_mat, SE3, check=False)
    g_des, xi_des, dxi_des = agent_desired(g0, xi0, xi0_dot, rt.offset)
    g_err = config_error(g_des, g)
    xi_err = vel_error(g_err, xi, xi_des)

    out = np.zeros_like(state)
    if mode == "nn":
        x = build_input(g_err, xi_err, g_des, xi_des, dxi_des)
        weights = NNWeights(W, V, check=False)
        sigma = sigmoid(V @ x)
        u = W @ sigma
        hess = errf.hess(g_err)
        g_dev = config_error(g_nom, g_err)
        xi_dev = xi_err - xi_nom
        grad_dev = errf.grad(g_dev)
        grad_F = cost_gradient_W(xi_dev, g_dev, GW, sigma, hess, gains.kp,
                                 errf, rt.learn)
        out[12:w_end] = weight_rate_W(
            W, grad_F,
            xi_dev_norm=float(np.linalg.norm(xi_dev)),
            g_dev_grad_norm=float(np.linalg.norm(grad_dev)),
            hess_norm=float(np.linalg.norm(hess)),
            GW_norm=float(np.linalg.norm(GW)),
            kp=gains.kp, params=rt.learn).ravel(order="F")
        out[w_end:v_end] = weight_rate_V(weights, x, xi_err, rt.learn).ravel(order="F")
        out[v_end:] = sens_rhs_static(GW, xi_err, sigma, hess, damping_inv,
                                      gains.kp, rt.learn.eff_inertia_floor).ravel()
    elif mode == "ideal":
        u = ideal_control(g_err, xi_err, g_des, xi_des, dxi_des,
                          rt.plant.inertia(t), rt.plant.mu, gains, errf, t)
    elif mode == "pd":
        u = -gains.damping @ xi_err - gains.kp * errf.grad(g_err)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    out[0:6] = plant_rhs(g, xi, u, rt.plant, t)
    out[6:12] = nominal_rhs(g_nom, xi_nom, gains, errf)[1]
    return out


def _agent_observables(t: float, g0: GroupElement, xi0: np.ndarray,
                       xi0_dot: np.ndarray, g_mat: np.ndarray,
                       g_nom_mat: np.ndarray, state: np.ndarray,
                       rt: AgentRuntime, gains: Gains, errf: Se3ErrorFunction,
                       mode: str) -> np.ndarray:
    """One RunLog row for an agent at a step boundary."""
    m = rt.hidden
    xi = state[0:6]
    xi_nom = state[6:12]
    w_end = 12 + N_DIM * m
    v_end = w_end + m * N_INPUTS
    W = state[12:w_end].reshape(N_DIM, m, order="F")
    V = state[w_end:v_end].reshape(m, N_INPUTS, order="F")

    g = GroupElement(g_mat, SE3, check=False)
    g_nom = GroupElement(g_nom_mat, SE3, check=False)
    g_des, xi_des, dxi_des = agent_desired(g0, xi0, xi0_dot, rt.offset)
    g_err = config_error(g_des, g)
    xi_err = vel_error(g_err, xi, xi_des)
    if mode == "nn":
        x = build_input(g_err, xi_err, g_des, xi_des, dxi_des)
        u = W @ sigmoid(V @ x)
    elif mode == "ideal":
        u = ideal_control(g_err, xi_err, g_des, xi_des, dxi_des,
                          rt.plant.inertia(t), rt.plant.mu, gains, errf, t)
    else:
        u = -gains.damping @ xi_err - gains.kp * errf.grad(g_err)
    return np.concatenate([
        [t], flat12(g.mat), xi, flat12(g_err.mat), xi_err, xi_nom,
        [errf.value(g_err), errf.value(g_nom)], u,
        [np.linalg.norm(W), np.linalg.norm(V), rotation_angle(g.rotation)],
        rt.disturbance(t),
    ])


# -- run log ------------------------------------------------------------------


@dataclass
class RunLog:
    columns: list
    bodies: dict

    def body(self, name: str) -> np.ndarray:
        return self.bodies[name]

    def column(self, name: str, body: str) -> np.ndarray:
        return self.bodies[body][:, self.columns.index(name)]

    def write_csv(self, out_dir: str | Path) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, rows in self.bodies.items():
            path = out_dir / f"{name}.csv"
            np.savetxt(path, rows, fmt="%.9g", delimiter=",",
                       header=",".join(self.columns), comments="")
            paths.append(path)
        return paths


# -- main drivers -------------------------------------------------------------


def run_scenario(cfg: ScenarioConfig) -> RunLog:
    """Integrate the full formation scenario and return the per-body log."""
    gains, errf = scenario_gains(cfg)
    damping_inv = np.linalg.inv(gains.damping)
    curve = cfg.leader.curve
    agents = [materialize_agent(cfg, a, i + 1) for i, a in enumerate(cfg.agents)]
    leader_plant = PlantParams.unforced(np.eye(N_DIM))
    zero_mu = leader_plant.mu

    # vector layout: leader [xi0, xi_nom0], then per agent
    # [xi, xi_nom, breve(W), breve(V), GW.ravel()]
    block = [12 + N_DIM * a.hidden + a.hidden * N_INPUTS + N_DIM * N_DIM * a.hidden
             for a in agents]
    slices = []
    start = 12
    for size in block:
        slices.append(slice(start, start + size))
        start += size
    n_vec = start

    g_leader, xi_leader = leader_initials(cfg)
    des0_pose, des0_vel, _ = leader_desired(curve, 0.0)
    g_err0 = config_error(des0_pose, g_leader)
    xi_err0 = vel_error(g_err0, xi_leader, des0_vel)

    vec = np.zeros(n_vec)
    vec[0:6] = xi_leader
    vec[6:12] = xi_err0
    poses = [g_leader.mat, g_err0.mat]
    for rt, sl in zip(agents, slices):
        g_des, xi_des, _ = agent_desired(g_leader, xi_leader, np.zeros(6), rt.offset)
        g_err = config_error(g_des, rt.g0)
        xi_err = vel_error(g_err, rt.xi0, xi_des)
        state = np.zeros(sl.stop - sl.start)
        state[0:6] = rt.xi0
        state[6:12] = xi_err  # nominal states start at the actual errors
        w_end = 12 + N_DIM * rt.hidden
        state[12:w_end] = rt.weights0.W.ravel(order="F")
        state[w_end:w_end + rt.hidden * N_INPUTS] = rt.weights0.V.ravel(order="F")
        vec[sl] = state
        poses.extend([rt.g0.mat, g_err.mat])

    def pose_vel(v: np.ndarray) -> list:
        vels = [v[0:6], v[6:12]]
        for sl in slices:
            vels.extend([v[sl.start:sl.start + 6], v[sl.start + 6:sl.start + 12]])
        return vels

    def vec_rhs(t: float, v: np.ndarray, pose_mats: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros_like(v)
        g0 = GroupElement(pose_mats[0], SE3, check=False)
        g_nom0 = GroupElement(pose_mats[1], SE3, check=False)
        xi0 = v[0:6]
        des_pose, des_vel, des_acc = leader_desired(curve, t)
        g_err = config_error(des_pose, g0)
        xi_err = vel_error(g_err, xi0, des_vel)
        u0 = ideal_control(g_err, xi_err, des_pose, des_vel, des_acc,
                           np.eye(N_DIM), zero_mu, gains, errf, t)
        xi0_dot = plant_rhs(g0, xi0, u0, leader_plant, t)
        out[0:6] = xi0_dot
        out[6:12] = nominal_rhs(g_nom0, v[6:12], gains, errf)[1]
        for k, (rt, sl) in enumerate(zip(agents, slices)):
            out[sl] = agent_rates(t, g0, xi0, xi0_dot,
                                  pose_mats[2 + 2 * k], pose_mats[3 + 2 * k],
                                  v[sl], rt, gains, errf, cfg.mode, damping_inv)
        return out

    n_steps = int(round(cfg.duration / cfg.dt))
    logs: dict[str, list] = {"leader": []}
    for rt in agents:
        logs[rt.name] = []

    def record(t: float, v: np.ndarray, pose_mats: Sequence[np.ndarray]) -> None:
        g0 = GroupElement(pose_mats[0], SE3, check=False)
        g_nom0 = GroupElement(pose_mats[1], SE3, check=False)
        xi0 = v[0:6]
        des_pose, des_vel, des_acc = leader_desired(curve, t)
        g_err = config_error(des_pose, g0)
        xi_err = vel_error(g_err, xi0, des_vel)
        u0 = ideal_control(g_err, xi_err, des_pose, des_vel, des_acc,
                           np.eye(N_DIM), zero_mu, gains, errf, t)
        xi0_dot = plant_rhs(g0, xi0, u0, leader_plant, t)
        logs["leader"].append(np.concatenate([
            [t], flat12(g0.mat), xi0, flat12(g_err.mat), xi_err, v[6:12],
            [errf.value(g_err), errf.value(g_nom0)], u0,
            [0.0, 0.0, rotation_angle(g0.rotation)], np.zeros(6),
        ]))
        for k, (rt, sl) in enumerate(zip(agents, slices)):
            logs[rt.name].append(_agent_observables(
                t, g0, xi0, xi0_dot, pose_mats[2 + 2 * k], pose_mats[3 + 2 * k],
                v[sl], rt, gains, errf, cfg.mode))

    record(0.0, vec, poses)
    for k in range(n_steps):
        t = k * cfg.dt
        poses, vec = step(t, cfg.dt, poses, vec, pose_vel, vec_rhs, step_index=k)
        if (k + 1) % cfg.log_every == 0 or k + 1 == n_steps:
            record((k + 1) * cfg.dt, vec, poses)

    bodies = {name: np.asarray(rows) for name, rows in logs.items()}
    return RunLog(columns=list(RUNLOG_COLUMNS), bodies=bodies)


def run_nominal(cfg: ScenarioConfig) -> RunLog:
    """Integrate only the nominal error systems from the configured initial errors."""
    gains, errf = scenario_gains(cfg)
    curve = cfg.leader.curve
    g_leader, xi_leader = leader_initials(cfg)
    des0_pose, des0_vel, _ = leader_desired(curve, 0.0)

    initials = {}
    g_err0 = config_error(des0_pose, g_leader)
    initials["leader"] = (g_err0, vel_error(g_err0, xi_leader, des0_vel))
    for i, agent in enumerate(cfg.agents):
        rt = materialize_agent(cfg, agent, i + 1)
        g_des, xi_des, _ = agent_desired(g_leader, xi_leader, np.zeros(6), rt.offset)
        g_err = config_error(g_des, rt.g0)
        initials[rt.name] = (g_err, vel_error(g_err, rt.xi0, xi_des))

    n_steps = int(round(cfg.duration / cfg.dt))
    bodies = {}
    for name, (g_err, xi_err) in initials.items():
        rows = []
        pose = g_err.mat
        vec = np.asarray(xi_err, dtype=float)

        def rhs(t: float, v: np.ndarray, pose_mats: Sequence[np.ndarray]) -> np.ndarray:
            g = GroupElement(pose_mats[0], SE3, check=False)
            return nominal_rhs(g, v, gains, errf)[1]

        def row(t: float, pose_mat: np.ndarray, v: np.ndarray) -> np.ndarray:
            val = errf.value(GroupElement(pose_mat, SE3, check=False))
            return np.concatenate([[t], flat12(pose_mat), v, v, [val, val]])

        rows.append(row(0.0, pose, vec))
        pose_list = [pose]
        for k in range(n_steps):
            pose_list, vec = step(k * cfg.dt, cfg.dt, pose_list, vec,
                                  pose_vel=lambda v: [v], vec_rhs=rhs, step_index=k)
            if (k + 1) % cfg.log_every == 0 or k + 1 == n_steps:
                rows.append(row((k + 1) * cfg.dt, pose_list[0], vec))
        bodies[name] = np.asarray(rows)
    return RunLog(columns=list(NOMINAL_COLUMNS), bodies=bodies)
