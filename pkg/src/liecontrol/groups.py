"""Matrix Lie group kernels for SE(3) and SO(3).

Everything here works on plain numpy arrays plus a thin :class:`GroupElement`
wrapper that pins a matrix to a group and checks membership.  Conventions:

* algebra vectors are ``[omega; v]`` (angular first) for SE(3),
* ``hat``/``vee`` use the canonical basis of R^n (``omega^ r = omega x r``),
* ``breve``/``unbreve`` flatten matrices in column-major order.

All functions are pure; nothing re-orthonormalizes silently (the integrator
owns drift repair).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class GroupSpec:
    """Descriptor of a concrete matrix Lie group (dimension bookkeeping only)."""

    name: str
    dim: int        # algebra dimension n
    mat_dim: int    # ambient matrix size N

    def __repr__(self) -> str:
        return self.name


SO3 = GroupSpec("SO3", dim=3, mat_dim=3)
SE3 = GroupSpec("SE3", dim=6, mat_dim=4)


class GroupMembershipError(ValueError):
    pass


def frob_norm(B: np.ndarray) -> float:
    """Frobenius norm sqrt(tr(B^T B))."""
    return float(np.linalg.norm(np.asarray(B, dtype=float)))


def sk(B: np.ndarray) -> np.ndarray:
    """Skew-symmetric part (B - B^T)/2.  Rejects non-square input."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"sk expects a square matrix, got shape {B.shape}")
    return 0.5 * (B - B.T)


def breve(B: np.ndarray) -> np.ndarray:
    """Column-major flattening of an M x K matrix to an MK vector."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError(f"breve expects a matrix, got ndim={B.ndim}")
    return B.flatten(order="F")


def unbreve(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`breve` given the target shape."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != rows * cols:
        raise ValueError(f"unbreve: length {v.size} != {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def so3_hat(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if w.size != 3:
        raise ValueError(f"so3_hat expects a 3-vector, got length {w.size}")
    out = np.zeros((3, 3))
    out[0, 1] = -w[2]
    out[0, 2] = w[1]
    out[1, 0] = w[2]
    out[1, 2] = -w[0]
    out[2, 0] = -w[1]
    out[2, 1] = w[0]
    return out


def so3_vee(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (3, 3):
        raise ValueError(f"so3_vee expects a 3x3 matrix, got shape {W.shape}")
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def hat(xi: np.ndarray, group: GroupSpec = SE3) -> np.ndarray:
    """Algebra isomorphism R^n -> g.  SE(3) layout [[omega^, v], [0, 0]]."""
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size != group.dim:
        raise ValueError(f"hat: expected length {group.dim} for {group}, got {xi.size}")
    if group is SO3:
        return so3_hat(xi)
    X = np.zeros((4, 4))
    X[:3, :3] = so3_hat(xi[:3])
    X[:3, 3] = xi[3:]
    return X


def vee(X: np.ndarray, group: GroupSpec = SE3) -> np.ndarray:
    """Inverse of :func:`hat`; reads the canonical algebra slots."""
    X = np.asarray(X, dtype=float)
    if X.shape != (group.mat_dim, group.mat_dim):
        raise ValueError(f"vee: expected {group.mat_dim}x{group.mat_dim} for {group}")
    if group is SO3:
        return so3_vee(X)
    return np.concatenate([so3_vee(X[:3, :3]), X[:3, 3]])


def _membership_defect(mat: np.ndarray, group: GroupSpec) -> float:
    R = mat[:3, :3]
    defect = frob_norm(R.T @ R - np.eye(3))
    if np.linalg.det(R) <= 0.0:
        return np.inf
    if group is SE3:
        defect = max(defect, float(np.max(np.abs(mat[3] - np.array([0.0, 0.0, 0.0, 1.0])))))
    return defect


@dataclass(frozen=True)
class GroupElement:
    """An N x N matrix constrained to a declared group (SE(3) or SO(3))."""

    mat: np.ndarray
    group: GroupSpec = SE3
    check: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        mat = np.asarray(self.mat, dtype=float)
        object.__setattr__(self, "mat", mat)
        N = self.group.mat_dim
        if mat.shape != (N, N):
            raise GroupMembershipError(
                f"{self.group} element must be {N}x{N}, got {mat.shape}")
        if self.check:
            defect = _membership_defect(mat, self.group)
            if not defect <= MEMBERSHIP_TOL:
                raise GroupMembershipError(
                    f"matrix violates {self.group} membership (defect {defect:.3e})")

    @classmethod
    def identity(cls, group: GroupSpec = SE3) -> "GroupElement":
        return cls(np.eye(group.mat_dim), group, check=False)

    @classmethod
    def from_rotation_translation(cls, R: np.ndarray, p: np.ndarray,
                                  check: bool = True) -> "GroupElement":
        mat = np.eye(4)
        mat[:3, :3] = R
        mat[:3, 3] = np.asarray(p, dtype=float).ravel()
        return cls(mat, SE3, check=check)

    @property
    def rotation(self) -> np.ndarray:
        return self.mat[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        if self.group is not SE3:
            raise ValueError("translation is only defined for SE3 elements")
        return self.mat[:3, 3]

    def inverse(self) -> "GroupElement":
        return GroupElement(inv_mat(self.mat, self.group), self.group, check=False)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)


def inv_mat(mat: np.ndarray, group: GroupSpec = SE3) -> np.ndarray:
    """Analytic inverse: R^T for rotations, [R^T, -R^T p] for SE(3)."""
    R = mat[:3, :3]
    if group is SO3:
        return np.ascontiguousarray(R.T)
    out = np.zeros((4, 4))
    out[3, 3] = 1.0
    out[:3, :3] = R.T
    out[:3, 3] = -(R.T @ mat[:3, 3])
    return out


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    if g1.group is not g2.group:
        raise ValueError(f"cannot compose {g1.group} with {g2.group}")
    return GroupElement(g1.mat @ g2.mat, g1.group, check=False)


def inverse(g: GroupElement) -> GroupElement:
    return g.inverse()


def _so3_exp_coeffs(theta: float) -> tuple[float, float, float]:
    # a = sin(t)/t, b = (1-cos t)/t^2, c = (t - sin t)/t^3; series below t=1e-3
    # keeps every coefficient accurate to ~1e-19 and covers the omega = 0 branch.
    if theta < 1e-3:
        t2 = theta * theta
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    else:
        a = np.sin(theta) / theta
        s = np.sin(0.5 * theta) / theta
        b = 2.0 * s * s
        c = (theta - np.sin(theta)) / theta ** 3
    return a, b, c


def exp_so3(w: np.ndarray) -> np.ndarray:
    """Rodrigues rotation R = I + a w^ + b (w^)^2."""
    w = np.asarray(w, dtype=float).ravel()
    theta = float(np.linalg.norm(w))
    a, b, _ = _so3_exp_coeffs(theta)
    W = so3_hat(w)
    return np.eye(3) + a * W + b * (W @ W)


_EYE3 = np.eye(3)


def exp_group(xi: np.ndarray, group: GroupSpec = SE3) -> GroupElement:
    """Closed-form exponential map; agrees with the matrix-power series.

    SE(3): rotation by Rodrigues, translation p = V v with
    V = I + b w^ + c (w^)^2, which reduces to p = v when omega = 0.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    if group is SO3:
        return GroupElement(exp_so3(xi), SO3, check=False)
    if xi.size != 6:
        raise ValueError(f"exp_group: expected a 6-vector for SE3, got length {xi.size}")
    w, v = xi[:3], xi[3:]
    theta = float(np.sqrt(w @ w))
    a, b, c = _so3_exp_coeffs(theta)
    W = so3_hat(w)
    W2 = W @ W
    out = np.zeros((4, 4))
    out[3, 3] = 1.0
    out[:3, :3] = _EYE3 + a * W + b * W2
    out[:3, 3] = v + b * (W @ v) + c * (W2 @ v)
    return GroupElement(out, SE3, check=False)


def Ad(g: GroupElement) -> np.ndarray:
    """Group adjoint as an n x n matrix.  SE(3): [[R, 0], [p^ R, R]]."""
    if g.group is SO3:
        return g.mat.copy()
    R = g.rotation
    p = g.translation
    out = np.zeros((6, 6))
    out[:3, :3] = R
    out[3:, :3] = so3_hat(p) @ R
    out[3:, 3:] = R
    return out


def ad(xi: np.ndarray, group: GroupSpec = SE3) -> np.ndarray:
    """Algebra adjoint ad_xi eta = [xi^, eta^]^v.  SE(3): [[w^, 0], [v^, w^]]."""
    xi = np.asarray(xi, dtype=float).ravel()
    if group is SO3:
        return so3_hat(xi)
    W = so3_hat(xi[:3])
    out = np.zeros((6, 6))
    out[:3, :3] = W
    out[3:, :3] = so3_hat(xi[3:])
    out[3:, 3:] = W
    return out


def config_error(g_des: GroupElement, g: GroupElement) -> GroupElement:
    """Left configuration error g_des^{-1} g."""
    if g_des.group is not g.group:
        raise ValueError("config_error: group mismatch")
    return GroupElement(inv_mat(g_des.mat, g_des.group) @ g.mat, g.group, check=False)


def vel_error(g_err: GroupElement, xi: np.ndarray, xi_des: np.ndarray) -> np.ndarray:
    """Compatible velocity error xi - Ad(g_err^{-1}) xi_des."""
    return np.asarray(xi, dtype=float) - Ad(g_err.inverse()) @ np.asarray(xi_des, dtype=float)


def project_rotation(R: np.ndarray) -> np.ndarray:
    """Polar projection of a near-rotation onto SO(3) (used only by the integrator)."""
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) < 0.0:
        out = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return out


def rotation_angle(R: np.ndarray) -> float:
    """Angle of a rotation matrix, arccos((tr R - 1)/2) with the argument clamped."""
    return float(np.arccos(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)))


def flat12(mat: np.ndarray) -> np.ndarray:
    """Column-major flattening of the non-fixed SE(3) entries: R (9) then p (3)."""
    mat = np.asarray(mat, dtype=float)
    return mat[:3, :4].flatten(order="F")


def unflat12(v: np.ndarray) -> np.ndarray:
    """Rebuild a homogeneous 4x4 pose from :func:`flat12` output."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != 12:
        raise ValueError(f"unflat12 expects 12 values, got {v.size}")
    out = np.eye(4)
    out[:3, :4] = v.reshape((3, 4), order="F")
    return out
