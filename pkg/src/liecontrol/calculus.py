"""Coordinate-free numerical differentiation on matrix Lie groups.

The probes never leave the manifold: a function f on the group is
differentiated through curves epsilon -> f(g exp(eps eta_i^)) along the
canonical algebra directions eta_i, which realizes the left-trivialized
differential without building any ambient-space extension of f.  Central
differences are used throughout.

These operators serve two roles: generic fallback derivatives for error
functions without closed forms, and independent oracles for the closed
forms that do exist.

Step-size defaults balance truncation against round-off at double
precision; they are exposed as arguments because no canonical value
exists.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .groups import GroupElement, GroupSpec, exp_group, inv_mat, vee

DEFAULT_STEP = 1e-5
DEFAULT_OUTER_STEP = 1e-4

GroupFunction = Callable[[GroupElement], np.ndarray]
GroupValuedMap = Callable[[np.ndarray], GroupElement]


def _probe(g: GroupElement, direction: np.ndarray, eps: float) -> GroupElement:
    step = exp_group(eps * direction, g.group)
    return GroupElement(g.mat @ step.mat, g.group, check=False)


def left_diff(f: GroupFunction, g: GroupElement, step: float = DEFAULT_STEP) -> np.ndarray:
    """Left-trivialized differential of a scalar function, as a 1 x n row.

    Component i is the central difference of eps -> f(g exp(eps eta_i^))
    at eps = 0, for the canonical basis direction eta_i.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    n = g.group.dim
    out = np.zeros(n)
    eta = np.zeros(n)
    for i in range(n):
        eta[i] = 1.0
        f_plus = float(f(_probe(g, eta, step)))
        f_minus = float(f(_probe(g, eta, -step)))
        out[i] = (f_plus - f_minus) / (2.0 * step)
        eta[i] = 0.0
    return out


def left_jacobian(f: GroupFunction, g: GroupElement, step: float = DEFAULT_STEP) -> np.ndarray:
    """Stacked left-trivialized differentials of an R^k-valued function (k x n)."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    n = g.group.dim
    cols = []
    eta = np.zeros(n)
    for i in range(n):
        eta[i] = 1.0
        f_plus = np.atleast_1d(np.asarray(f(_probe(g, eta, step)), dtype=float))
        f_minus = np.atleast_1d(np.asarray(f(_probe(g, eta, -step)), dtype=float))
        cols.append((f_plus - f_minus) / (2.0 * step))
        eta[i] = 0.0
    return np.stack(cols, axis=1)


def left_hessian(f: GroupFunction, g: GroupElement,
                 outer_step: float = DEFAULT_OUTER_STEP,
                 inner_step: float = DEFAULT_STEP) -> np.ndarray:
    """Left-trivialized Hessian: the Jacobian of h(g) = left_diff(f, g)^T.

    Deliberately NOT symmetrized; the second derivative is taken after left
    translation, which is not a symmetric operation in general.
    """
    def grad_fn(h: GroupElement) -> np.ndarray:
        return left_diff(f, h, step=inner_step)

    return left_jacobian(grad_fn, g, step=outer_step)


def left_grad_map(Phi: GroupValuedMap, phi: np.ndarray,
                  step: float = DEFAULT_STEP) -> np.ndarray:
    """Left-translated gradient of a map R^k -> G, as an n x k matrix.

    Column j is vee(Phi(phi)^{-1} dPhi/dphi_j), the central difference taken
    in the ambient matrix space.  Raises if Phi produces non-group output.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    phi = np.asarray(phi, dtype=float).ravel()
    base = Phi(phi)
    if not isinstance(base, GroupElement):
        raise TypeError("Phi must return GroupElement instances")
    group: GroupSpec = base.group
    base_inv = inv_mat(base.mat, group)
    cols = []
    for j in range(phi.size):
        bump = np.zeros_like(phi)
        bump[j] = step
        m_plus = Phi(phi + bump).mat
        m_minus = Phi(phi - bump).mat
        quotient = (m_plus - m_minus) / (2.0 * step)
        cols.append(vee(base_inv @ quotient, group))
    return np.stack(cols, axis=1)


def directional_diff(f: GroupFunction, g: GroupElement, xi: np.ndarray,
                     step: float = DEFAULT_STEP) -> np.ndarray:
    """Derivative of t -> f(g exp(t xi^)) at t = 0 (chain-rule oracle helper)."""
    xi = np.asarray(xi, dtype=float).ravel()
    f_plus = np.asarray(f(_probe(g, xi, step)), dtype=float)
    f_minus = np.asarray(f(_probe(g, xi, -step)), dtype=float)
    return (f_plus - f_minus) / (2.0 * step)
