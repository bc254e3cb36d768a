"""Euler-Poincare dynamics, tracking error dynamics, and the geometric integrator.

Plant (left-trivialized, fully actuated):

    g_dot  = g xi^
    xi_dot = I(t)^{-1} ad_xi^T I(t) xi + I(t)^{-1} E(t) u + mu(g, xi, t) + d(t)

where I is the (possibly time-varying) inertia metric, E the diagonal
actuator-efficiency matrix, mu lumped acceleration-level unknown forces and
d a bounded disturbance.

The integrator advances each configuration by the multiplicative Lie-Euler
update g <- g exp(dt xi^) and every vector state (velocities, weights,
sensitivities) by explicit RK4, with configuration inputs held at the
step's Lie-Euler interpolants.  Rotation blocks are re-projected (polar)
only when orthogonality drift exceeds tolerance, so integrator bugs stay
visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errfun import ConfigErrorFunction
from .groups import (SE3, Ad, GroupElement, GroupSpec, ad, exp_group, hat,
                     project_rotation)

ORTHO_TOL = 1e-9


class NumericalAbort(RuntimeError):
    """Raised when integration produces NaN/Inf or an invalid plant."""

    def __init__(self, message: str, step_index: int | None = None, t: float | None = None):
        where = "" if step_index is None else f" at step {step_index} (t={t:.6g}s)"
        super().__init__(message + where)
        self.step_index = step_index
        self.t = t


@dataclass(frozen=True)
class PlantParams:
    """Callable bundle defining one plant; all callables are pure.

    inertia(t) -> (n, n) SPD, fault(t) -> (n,) diagonal efficiencies in (0, 1],
    mu(g, xi, t) -> (n,) acceleration-level forces, dist(t) -> (n,).
    """

    inertia: Callable[[float], np.ndarray]
    fault: Callable[[float], np.ndarray]
    mu: Callable[[GroupElement, np.ndarray, float], np.ndarray]
    dist: Callable[[float], np.ndarray]
    group: GroupSpec = SE3

    @classmethod
    def unforced(cls, inertia_mat: np.ndarray, group: GroupSpec = SE3) -> "PlantParams":
        n = group.dim
        I0 = np.asarray(inertia_mat, dtype=float)
        return cls(inertia=lambda t: I0,
                   fault=lambda t: np.ones(n),
                   mu=lambda g, xi, t: np.zeros(n),
                   dist=lambda t: np.zeros(n),
                   group=group)


@dataclass(frozen=True)
class Gains:
    """PD gains: symmetric positive-definite damping matrix and kp >= 1."""

    damping: np.ndarray
    kp: float = 1.0

    def __post_init__(self) -> None:
        A = np.asarray(self.damping, dtype=float)
        object.__setattr__(self, "damping", A)
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("damping matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(A)) <= 0.0:
            raise ValueError("damping matrix must be positive-definite")
        if self.kp < 1.0:
            raise ValueError("kp must be >= 1")


def _inertia_at(plant: PlantParams, t: float) -> tuple[np.ndarray, np.ndarray]:
    inertia = np.asarray(plant.inertia(t), dtype=float)
    diag = np.diagonal(inertia)
    if np.count_nonzero(inertia) == np.count_nonzero(diag):  # diagonal fast path
        if np.min(diag) <= 0.0:
            raise NumericalAbort(f"inertia not positive-definite at t={t:.6g} "
                                 f"(min eigenvalue {np.min(diag):.3e})")
        return inertia, np.diag(1.0 / diag)
    w = np.linalg.eigvalsh(inertia)
    if w[0] <= 0.0:
        raise NumericalAbort(f"inertia not positive-definite at t={t:.6g} "
                             f"(min eigenvalue {w[0]:.3e})")
    return inertia, np.linalg.inv(inertia)


def plant_rhs(g: GroupElement, xi: np.ndarray, u: np.ndarray,
              plant: PlantParams, t: float) -> np.ndarray:
    """Velocity derivative of the uncertain plant."""
    xi = np.asarray(xi, dtype=float)
    inertia, inertia_inv = _inertia_at(plant, t)
    adx = ad(xi, plant.group)
    xi_dot = inertia_inv @ (adx.T @ (inertia @ xi))
    xi_dot += inertia_inv @ (plant.fault(t) * np.asarray(u, dtype=float))
    xi_dot += plant.mu(g, xi, t)
    xi_dot += plant.dist(t)
    return xi_dot


def coupling_term(g_err: GroupElement, xi_err: np.ndarray, g_des: GroupElement,
                  xi_des: np.ndarray, dxi_des: np.ndarray,
                  inertia: np.ndarray,
                  mu: Callable[[GroupElement, np.ndarray, float], np.ndarray],
                  t: float) -> np.ndarray:
    """The nonlinear drift the ideal controller cancels.

    Assembles inertial coupling, unknown forces, and the desired-trajectory
    feedforward, all expressed in the error coordinates:

        I^{-1} ad_xi^T I xi + mu(g, xi, t) + ad_xierr Ad_{gerr^{-1}} xi_des
        - Ad_{gerr^{-1}} dxi_des,    with xi = xi_err + Ad_{gerr^{-1}} xi_des.
    """
    group = g_err.group
    adj = Ad(g_err.inverse())
    xi_des_body = adj @ np.asarray(xi_des, dtype=float)
    xi = np.asarray(xi_err, dtype=float) + xi_des_body
    g = GroupElement(g_des.mat @ g_err.mat, group, check=False)
    inertia_inv = np.linalg.inv(inertia)
    out = inertia_inv @ (ad(xi, group).T @ (inertia @ xi))
    out += mu(g, xi, t)
    out += ad(xi_err, group) @ xi_des_body
    out -= adj @ np.asarray(dxi_des, dtype=float)
    return out


def ideal_control(g_err: GroupElement, xi_err: np.ndarray, g_des: GroupElement,
                  xi_des: np.ndarray, dxi_des: np.ndarray, inertia: np.ndarray,
                  mu: Callable[[GroupElement, np.ndarray, float], np.ndarray],
                  gains: Gains, errfun: ConfigErrorFunction,
                  t: float = 0.0) -> np.ndarray:
    """Feedback-linearizing PD law u* = I (-tau - A xi_err - kp grad^T).

    Requires full model knowledge; used for the leader and nominal baselines.
    """
    inertia = np.asarray(inertia, dtype=float)
    tau = coupling_term(g_err, xi_err, g_des, xi_des, dxi_des, inertia, mu, t)
    feedback = -np.asarray(gains.damping) @ np.asarray(xi_err, dtype=float)
    feedback -= gains.kp * errfun.grad(g_err)
    return inertia @ (-tau + feedback)


def nominal_rhs(g_err: GroupElement, xi_err: np.ndarray, gains: Gains,
                errfun: ConfigErrorFunction) -> tuple[np.ndarray, np.ndarray]:
    """Nominal (known, undisturbed) closed-loop error dynamics.

    Returns (g_err_dot matrix, xi_err_dot).
    """
    xi_err = np.asarray(xi_err, dtype=float)
    g_dot = g_err.mat @ hat(xi_err, g_err.group)
    xi_dot = -np.asarray(gains.damping) @ xi_err - gains.kp * errfun.grad(g_err)
    return g_dot, xi_dot


def error_rhs(g_err: GroupElement, xi_err: np.ndarray, u: np.ndarray,
              plant: PlantParams, g_des: GroupElement, xi_des: np.ndarray,
              dxi_des: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Tracking error dynamics: g_err_dot = g_err xi_err^, xi_err_dot = tau + B u + d."""
    inertia, inertia_inv = _inertia_at(plant, t)
    tau = coupling_term(g_err, xi_err, g_des, xi_des, dxi_des, inertia, plant.mu, t)
    B = inertia_inv * plant.fault(t)[np.newaxis, :]  # I^{-1} E for diagonal E
    xi_dot = tau + B @ np.asarray(u, dtype=float) + plant.dist(t)
    g_dot = g_err.mat @ hat(np.asarray(xi_err, dtype=float), g_err.group)
    return g_dot, xi_dot


def _repair(mat: np.ndarray, group: GroupSpec) -> np.ndarray:
    R = mat[:3, :3]
    if np.linalg.norm(R.T @ R - np.eye(3)) > ORTHO_TOL:
        mat = mat.copy()
        mat[:3, :3] = project_rotation(R)
    return mat


def step(t: float, dt: float, poses: Sequence[np.ndarray], vec: np.ndarray,
         pose_vel: Callable[[np.ndarray], Sequence[np.ndarray]],
         vec_rhs: Callable[[float, np.ndarray, Sequence[np.ndarray]], np.ndarray],
         group: GroupSpec = SE3,
         step_index: int | None = None) -> tuple[list[np.ndarray], np.ndarray]:
    """One fixed step of the coupled pose/vector system.

    poses: list of N x N group matrices.
    vec:   flat vector state (velocities, weights, sensitivities, ...).
    pose_vel(vec) -> list of algebra velocities, one per pose, frozen at the
                     step start for the multiplicative update.
    vec_rhs(t, vec, poses) -> d(vec)/dt with poses at Lie-Euler interpolants.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    vec = np.asarray(vec, dtype=float)
    xis = [np.asarray(x, dtype=float) for x in pose_vel(vec)]
    if len(xis) != len(poses):
        raise ValueError("pose_vel must return one velocity per pose")

    def poses_at(s: float) -> list[np.ndarray]:
        if s == 0.0:
            return list(poses)
        return [p @ exp_group(s * xi, group).mat for p, xi in zip(poses, xis)]

    mid = poses_at(0.5 * dt)
    end = poses_at(dt)
    k1 = vec_rhs(t, vec, list(poses))
    k2 = vec_rhs(t + 0.5 * dt, vec + 0.5 * dt * k1, mid)
    k3 = vec_rhs(t + 0.5 * dt, vec + 0.5 * dt * k2, mid)
    k4 = vec_rhs(t + dt, vec + dt * k3, end)
    vec_new = vec + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(vec_new)):
        raise NumericalAbort("non-finite vector state", step_index, t + dt)
    poses_new = [_repair(p, group) for p in end]
    for p in poses_new:
        if not np.all(np.isfinite(p)):
            raise NumericalAbort("non-finite pose", step_index, t + dt)
    return poses_new, vec_new


def simulate_plant(g0: GroupElement, xi0: np.ndarray, plant: PlantParams,
                   control: Callable[[float, GroupElement, np.ndarray], np.ndarray],
                   dt: float, n_steps: int) -> tuple[list[GroupElement], np.ndarray, np.ndarray]:
    """Convenience driver for a single plant under a state-feedback law.

    Returns (poses, velocities, times) sampled at every step boundary.
    """
    group = g0.group
    vels = np.zeros((n_steps + 1, group.dim))
    vels[0] = np.asarray(xi0, dtype=float)
    times = dt * np.arange(n_steps + 1)
    mats = [g0.mat]
    vec = vels[0].copy()
    for k in range(n_steps):
        def rhs(t: float, v: np.ndarray, ps: Sequence[np.ndarray]) -> np.ndarray:
            g = GroupElement(ps[0], group, check=False)
            return plant_rhs(g, v, control(t, g, v), plant, t)

        mats_new, vec = step(times[k], dt, [mats[-1]], vec,
                             pose_vel=lambda v: [v], vec_rhs=rhs,
                             group=group, step_index=k)
        mats.append(mats_new[0])
        vels[k + 1] = vec
    poses = [GroupElement(m, group, check=False) for m in mats]
    return poses, vels, times
