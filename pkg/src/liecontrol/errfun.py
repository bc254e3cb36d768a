"""Configuration error functions on SE(3).

The pose error g_err is scored by

    value(g_err) = tr(X (I - R)) / 2 + p^T K p / 2,
    X = tr(W) I / 2 - W,

with W ("rot_weight") and K ("pos_weight") symmetric positive-definite 3x3
weights.  The left-trivialized gradient and Hessian have closed forms,
implemented here; the generic base class falls back to the numerical
operators so any group with only a value() can still be controlled.

quad_bound_fit estimates the local quadratic sandwich constants
b1 ||grad||^2 <= value <= b2 ||grad||^2 on a sublevel set; these feed run
diagnostics only, never the control law.
"""

from __future__ import annotations

import numpy as np

from . import calculus
from .groups import SE3, GroupElement, exp_so3, sk, so3_hat, so3_vee


def _check_spd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got {M.shape}")
    if not np.allclose(M, M.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(M)) <= 0.0:
        raise ValueError(f"{name} must be positive-definite")
    return M


class ConfigErrorFunction:
    """Base class: subclasses must provide value(); derivatives default to
    the numerical left-trivialized operators."""

    group = SE3

    def value(self, g_err: GroupElement) -> float:
        raise NotImplementedError

    def grad(self, g_err: GroupElement) -> np.ndarray:
        return calculus.left_diff(self.value, g_err)

    def hess(self, g_err: GroupElement) -> np.ndarray:
        return calculus.left_hessian(self.value, g_err)


class Se3ErrorFunction(ConfigErrorFunction):
    def __init__(self, rot_weight: np.ndarray, pos_weight: np.ndarray) -> None:
        self.rot_weight = _check_spd(rot_weight, "rot_weight")
        self.pos_weight = _check_spd(pos_weight, "pos_weight")
        # trace complement of the rotation weight; symmetric by construction
        self.rot_comp = 0.5 * np.trace(self.rot_weight) * np.eye(3) - self.rot_weight

    @classmethod
    def isotropic(cls, rot: float = 10.0, pos: float = 5.0) -> "Se3ErrorFunction":
        return cls(rot * np.eye(3), pos * np.eye(3))

    @property
    def critical_level(self) -> float:
        """Monitoring threshold lambda_min(rot_weight) + tr(rot_weight).

        Boundedness monitors compare against 0.9x this level.  Note it
        overstates the sublevel set on which the function is actually
        quadratic; see :attr:`quadratic_level`.
        """
        w = np.linalg.eigvalsh(self.rot_weight)
        return float(w[0] + np.sum(w))

    @property
    def quadratic_level(self) -> float:
        """Smallest positive critical value of this error function.

        The non-identity critical poses are half-turns about eigenvectors of
        the rotation weight, where the value equals the matching eigenvalue;
        the quadratic sandwich b1 ||grad||^2 <= value <= b2 ||grad||^2 holds
        on sublevel sets strictly below lambda_min(rot_weight).
        """
        return float(np.min(np.linalg.eigvalsh(self.rot_weight)))

    def value(self, g_err: GroupElement) -> float:
        R = g_err.rotation
        p = g_err.translation
        rot_part = 0.5 * np.trace(self.rot_comp @ (np.eye(3) - R))
        pos_part = 0.5 * p @ self.pos_weight @ p
        return float(rot_part + pos_part)

    def grad(self, g_err: GroupElement) -> np.ndarray:
        """Closed-form left-trivialized gradient [sk(X R)^v ; R^T K p]^T (1 x 6)."""
        R = g_err.rotation
        p = g_err.translation
        return np.concatenate([so3_vee(sk(self.rot_comp @ R)),
                               (p @ self.pos_weight) @ R])

    def hess(self, g_err: GroupElement) -> np.ndarray:
        """Closed-form left-trivialized Hessian (block form, not symmetric).

        The rotation block is the exact Jacobian of the gradient's rotation
        rows, (tr(X R) I - (X R)^T) / 2, from sk(M w^)^v = (tr(M) I - M^T) w / 2.
        """
        R = g_err.rotation
        p = g_err.translation
        XR = self.rot_comp @ R
        out = np.zeros((6, 6))
        out[:3, :3] = 0.5 * (np.trace(XR) * np.eye(3) - XR.T)
        out[3:, :3] = R.T @ so3_hat(self.pos_weight @ p) @ R
        out[3:, 3:] = R.T @ self.pos_weight @ R
        return out

    def quad_bound_fit(self, rng: np.random.Generator, n_samples: int = 400,
                       level: float | None = None) -> tuple[float, float]:
        """Empirical (b1, b2) for the quadratic sandwich on value <= level.

        level defaults to 0.9 * quadratic_level (the sandwich cannot hold up
        to critical_level, whose sublevel set contains non-identity critical
        poses).  Rejection-samples poses until n_samples fall inside.
        """
        if level is None:
            level = 0.9 * self.quadratic_level
        ratios = []
        while len(ratios) < n_samples:
            g = _random_se3(rng, max_angle=np.pi - 1e-3, max_trans=5.0)
            v = self.value(g)
            if v <= 0.0 or v > level:
                continue
            d = self.grad(g)
            ratios.append(v / float(d @ d))
        ratios = np.asarray(ratios)
        return float(ratios.min()), float(ratios.max())


def _random_se3(rng: np.random.Generator, max_angle: float, max_trans: float) -> GroupElement:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    R = exp_so3(rng.uniform(0.0, max_angle) * axis)
    p = rng.normal(size=3)
    p *= rng.uniform(0.0, max_trans) / np.linalg.norm(p)
    return GroupElement.from_rotation_translation(R, p, check=False)
