"""Two-layer neural controller with intrinsic learning rules.

The control signal is u = W sigma(V x) with the bipolar sigmoid
sigma_i(y) = -1 + 2/(1 + exp(-2 y)).  The input x stacks the flattened
configuration error, velocity error, flattened desired pose, desired
velocity and desired acceleration (42 entries on SE(3)).

Training runs online against the nominal closed loop.  With
Xi = xi_err - xi_err_nominal and gg = (g_err_nominal)^{-1} g_err, the cost

    F = alpha1/2 Xi^T A Xi + alpha2 psi(gg)

is differentiated through the state trajectory.  The required state
sensitivity GW = (left gradient of g_err w.r.t. breve(W)) obeys a matrix
ODE; two variants are provided:

* sens_rhs_static: the controller's own propagation.  The velocity
  sensitivity is assumed to equilibrate instantly and the unknown input
  matrix B is replaced by (1/s) I, s = eff_inertia_floor, a known lower
  bound on lambda_min(B^{-1}).
* full_sensitivity_rhs: all four blocks (GW, XW, GV, XV) with the true B,
  used only to validate the equations against perturbed re-simulation.

Column blocks of every sensitivity matrix follow the column-major breve
ordering of the corresponding weight matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errfun import ConfigErrorFunction
from .groups import GroupElement, ad, flat12, unbreve

# -- activation -------------------------------------------------------------


def sigmoid(y: np.ndarray) -> np.ndarray:
    """Bipolar sigmoid -1 + 2/(1 + exp(-2y)), range (-1, 1), slope 1 - sigma^2.

    Evaluated as tanh(y), which is the same function without overflow for
    large negative arguments.
    """
    return np.tanh(np.asarray(y, dtype=float))


def pi_diag(y: np.ndarray) -> np.ndarray:
    """Diagonal of the activation slope matrix: 1 - sigma(y)^2, entries in (0, 1].

    Double precision saturates the sigmoid for |y| above ~19, where the slope
    underflows to exactly 0.
    """
    s = sigmoid(y)
    return 1.0 - s * s


def pi_matrix(y: np.ndarray) -> np.ndarray:
    return np.diag(pi_diag(y))


# -- weights ----------------------------------------------------------------


@dataclass
class NNWeights:
    """Output-layer W (n x m) and hidden-layer V (m x M) weights.

    check=False skips the finiteness scan (integrator hot path, where the
    stepper's own NaN detection reports the failing step instead).
    """

    W: np.ndarray
    V: np.ndarray
    check: bool = True

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        if self.W.ndim != 2 or self.V.ndim != 2 or self.W.shape[1] != self.V.shape[0]:
            raise ValueError(f"inconsistent weight shapes {self.W.shape}, {self.V.shape}")
        if self.check and not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.V))):
            raise ValueError("weights must be finite")

    @property
    def sizes(self) -> tuple[int, int, int]:
        n, m = self.W.shape
        return n, m, self.V.shape[1]

    @classmethod
    def init_random(cls, n: int, m: int, n_inputs: int, scale: float,
                    rng: np.random.Generator) -> "NNWeights":
        # i.i.d. uniform on [-scale, scale]; small scale keeps ||W(0)|| far
        # below the ultimate weight bound
        return cls(W=rng.uniform(-scale, scale, size=(n, m)),
                   V=rng.uniform(-scale, scale, size=(m, n_inputs)))

    def save(self, path: str | Path) -> None:
        """Flat CSV dump: header row with shapes, then row-major values."""
        n, m, M = self.sizes
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{n},{m},{M}\n")
            fh.write(",".join(repr(float(x)) for x in self.W.ravel()) + "\n")
            fh.write(",".join(repr(float(x)) for x in self.V.ravel()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NNWeights":
        with open(path, "r", encoding="ascii") as fh:
            n, m, M = (int(s) for s in fh.readline().split(","))
            W = np.array([float(s) for s in fh.readline().split(",")]).reshape(n, m)
            V = np.array([float(s) for s in fh.readline().split(",")]).reshape(m, M)
        return cls(W=W, V=V)


@dataclass(frozen=True)
class LearnParams:
    """Learning rates (rho), damping factors (gamma), cost weights (alpha) and
    the effective-inertia floor s with 0 < s <= lambda_min(B^{-1})."""

    rho1: float
    rho2: float
    gamma1: float
    gamma2: float
    alpha1: float
    alpha2: float
    eff_inertia_floor: float

    def __post_init__(self) -> None:
        for name in ("rho1", "rho2", "gamma1", "gamma2", "alpha1", "alpha2",
                     "eff_inertia_floor"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def degenerate(self, m: int) -> bool:
        """True when the three decay-ratio terms coincide, which would defeat
        the weight-error contraction argument; avoid such parameter choices."""
        a = self.alpha1 * np.sqrt(m) / self.eff_inertia_floor
        return np.isclose(a, self.alpha1) and np.isclose(self.alpha1, self.alpha2)


def ultimate_weight_bound(params: LearnParams, m: int) -> float:
    """Scale of the guaranteed ultimate bound on ||W||:
    max(rho1 a1 sqrt(m)/(s g1), rho1 a1/g1, rho1 a2/g1)."""
    return float(max(
        params.rho1 * params.alpha1 * np.sqrt(m) / (params.eff_inertia_floor * params.gamma1),
        params.rho1 * params.alpha1 / params.gamma1,
        params.rho1 * params.alpha2 / params.gamma1,
    ))


# -- forward path -----------------------------------------------------------


def build_input(g_err: GroupElement, xi_err: np.ndarray, g_des: GroupElement,
                xi_des: np.ndarray, dxi_des: np.ndarray) -> np.ndarray:
    """NN input: [flat12(g_err); xi_err; flat12(g_des); xi_des; dxi_des] (42,)."""
    xi_err = np.asarray(xi_err, dtype=float).ravel()
    xi_des = np.asarray(xi_des, dtype=float).ravel()
    dxi_des = np.asarray(dxi_des, dtype=float).ravel()
    if not xi_err.size == xi_des.size == dxi_des.size == 6:
        raise ValueError("velocity inputs must be 6-vectors")
    return np.concatenate([flat12(g_err.mat), xi_err, flat12(g_des.mat),
                           xi_des, dxi_des])


N_INPUTS = 42


def control(weights: NNWeights, x: np.ndarray) -> np.ndarray:
    """u = W sigma(V x)."""
    return weights.W @ sigmoid(weights.V @ np.asarray(x, dtype=float))


# -- sensitivity propagation -------------------------------------------------


def sens_rhs_static(GW: np.ndarray, xi_err: np.ndarray, sigma: np.ndarray,
                    hess: np.ndarray, damping_inv: np.ndarray, kp: float,
                    eff_inertia_floor: float) -> np.ndarray:
    """Static-approximation ODE for GW (n x nm):

        GW_dot = -ad_xierr GW - A^{-1} (kp H GW - [s1/s I ... sm/s I]).

    damping_inv is A^{-1}, precomputed by the caller (A is constant along a run).
    """
    n = GW.shape[0]
    adx = ad(np.asarray(xi_err, dtype=float))
    # A^{-1} [s1/s I ... sm/s I] = [s1/s A^{-1} ... sm/s A^{-1}], built by
    # broadcasting instead of a kron
    scaled = damping_inv / eff_inertia_floor
    drive = (np.asarray(sigma, dtype=float)[np.newaxis, :, np.newaxis]
             * scaled[:, np.newaxis, :]).reshape(n, -1)
    return -adx @ GW - kp * (damping_inv @ (hess @ GW)) + drive


@dataclass
class FullSensitivity:
    """All four gradient blocks, validation variant (n x nm and n x mM)."""

    GW: np.ndarray
    XW: np.ndarray
    GV: np.ndarray
    XV: np.ndarray

    @classmethod
    def zeros(cls, n: int, m: int, n_inputs: int) -> "FullSensitivity":
        return cls(GW=np.zeros((n, n * m)), XW=np.zeros((n, n * m)),
                   GV=np.zeros((n, m * n_inputs)), XV=np.zeros((n, m * n_inputs)))

    def pack(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in (self.GW, self.XW, self.GV, self.XV)])

    @classmethod
    def unpack(cls, vec: np.ndarray, n: int, m: int, n_inputs: int) -> "FullSensitivity":
        nm, mM = n * m, m * n_inputs
        parts = np.split(np.asarray(vec, dtype=float),
                         np.cumsum([n * nm, n * nm, n * mM])[:3])
        return cls(GW=parts[0].reshape(n, nm), XW=parts[1].reshape(n, nm),
                   GV=parts[2].reshape(n, mM), XV=parts[3].reshape(n, mM))


def full_sensitivity_rhs(sens: FullSensitivity, weights: NNWeights,
                         x: np.ndarray, xi_err: np.ndarray, hess: np.ndarray,
                         gains_damping: np.ndarray, kp: float,
                         B: np.ndarray) -> FullSensitivity:
    """Coupled evolution of the state gradients w.r.t. both weight matrices.

        G*_dot = -ad_xierr G* + X*
        XW_dot = -A XW - kp H GW + [s1 B ... sm B]
        XV_dot = -A XV - kp H GV + B W [x1 P ... xM P]

    with P the activation slope at y = V x.  B is the true input matrix here
    (validation); the controller never propagates XW/GV/XV.
    """
    x = np.asarray(x, dtype=float)
    y = weights.V @ x
    s = sigmoid(y)
    pi = pi_diag(y)
    adx = ad(np.asarray(xi_err, dtype=float))
    A = gains_damping
    n = sens.GW.shape[0]
    m = s.size
    dGW = -adx @ sens.GW + sens.XW
    w_drive = (s[np.newaxis, :, np.newaxis] * B[:, np.newaxis, :]).reshape(n, -1)
    dXW = -A @ sens.XW - kp * (hess @ sens.GW) + w_drive
    dGV = -adx @ sens.GV + sens.XV
    # B W [x1 P ... xM P] with diagonal P: scale columns of B W by pi, then
    # broadcast the x entries over the column blocks
    BWp = (B @ weights.W) * pi[np.newaxis, :]
    v_drive = (x[np.newaxis, :, np.newaxis] * BWp[:, np.newaxis, :]).reshape(n, -1)
    dXV = -A @ sens.XV - kp * (hess @ sens.GV) + v_drive
    return FullSensitivity(GW=dGW, XW=dXW, GV=dGV, XV=dXV)


# -- learning rules ----------------------------------------------------------


def cost_gradient_W(xi_dev: np.ndarray, g_dev: GroupElement, GW: np.ndarray,
                    sigma: np.ndarray, hess: np.ndarray, kp: float,
                    errfun: ConfigErrorFunction, params: LearnParams) -> np.ndarray:
    """Gradient of the tracking cost w.r.t. W under the static approximation.

    xi_dev = xi_err - xi_err_nominal, g_dev = (g_err_nominal)^{-1} g_err.
    Returns an n x m matrix:

        a1 [Xi sigma^T / s - kp unbreve((H GW)^T Xi)] + a2 unbreve((dpsi(gg) GW)^T)
    """
    n, m = GW.shape[0], sigma.size
    xi_dev = np.asarray(xi_dev, dtype=float)
    vel_term = np.outer(xi_dev, sigma) / params.eff_inertia_floor
    vel_term -= kp * unbreve((hess @ GW).T @ xi_dev, n, m)
    cfg_term = unbreve((errfun.grad(g_dev) @ GW).T, n, m)
    return params.alpha1 * vel_term + params.alpha2 * cfg_term


def weight_rate_W(W: np.ndarray, grad_F: np.ndarray, xi_dev_norm: float,
                  g_dev_grad_norm: float, hess_norm: float, GW_norm: float,
                  kp: float, params: LearnParams) -> np.ndarray:
    """Learning rule for W: gradient descent plus norm-scaled damping.

        W_dot = -rho1 grad_F
                - gamma1 (||Xi|| (1 + kp ||H|| ||GW||) + ||dpsi(gg)|| ||GW||) W

    All norms are Frobenius.
    """
    decay = xi_dev_norm * (1.0 + kp * hess_norm * GW_norm) + g_dev_grad_norm * GW_norm
    return -params.rho1 * np.asarray(grad_F, dtype=float) \
        - params.gamma1 * decay * np.asarray(W, dtype=float)


def effort_gradient_V(weights: NNWeights, x: np.ndarray) -> np.ndarray:
    """Gradient of the control effort, grad_V (u^T u / 2) = P W^T W sigma(Vx) x^T."""
    x = np.asarray(x, dtype=float)
    y = weights.V @ x
    return np.outer(pi_diag(y) * (weights.W.T @ (weights.W @ sigmoid(y))), x)


def weight_rate_V(weights: NNWeights, x: np.ndarray, xi_err: np.ndarray,
                  params: LearnParams) -> np.ndarray:
    """Learning rule for V: effort descent plus velocity-error damping.

        V_dot = -rho2 P W^T W sigma(Vx) x^T - gamma2 ||xi_err|| V
    """
    return -params.rho2 * effort_gradient_V(weights, x) \
        - params.gamma2 * float(np.linalg.norm(xi_err)) * weights.V
