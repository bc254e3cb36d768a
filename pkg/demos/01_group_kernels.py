#!/usr/bin/env python3
"""Tour of the SE(3) kernels: hat/vee, the closed-form exponential, and the
adjoint representations, each checked against a first-principles oracle."""

import numpy as np

from liecontrol import Ad, ad, compose, exp_group, frob_norm, hat, inverse, vee
from liecontrol.validate import random_twist, taylor_matrix_exp

rng = np.random.default_rng(0)

print("A twist is [omega; v]; hat() embeds it as a 4x4 algebra element:")
xi = np.array([0.0, 0.0, np.pi / 2, 1.0, 0.0, 0.0])
print(hat(xi), "\n")

print("vee() inverts hat():", vee(hat(xi)), "\n")

g = exp_group(xi)
print("exp of a quarter-turn about z while translating along x:")
print(np.round(g.mat, 6), "\n")

series = taylor_matrix_exp(hat(xi))
print(f"closed form vs 30-term matrix-power series: "
      f"|diff| = {frob_norm(g.mat - series):.2e}\n")

print("group inverse composes to the identity:")
print(np.round(compose(g, inverse(g)).mat, 12), "\n")

eta = random_twist(rng)
conj = vee(g.mat @ hat(eta) @ inverse(g).mat)
print(f"Ad(g) eta equals the conjugation (g eta^ g^-1)^v: "
      f"|diff| = {np.max(np.abs(Ad(g) @ eta - conj)):.2e}")

zeta = random_twist(rng)
bracket = vee(hat(eta) @ hat(zeta) - hat(zeta) @ hat(eta))
print(f"ad(eta) zeta equals the matrix commutator: "
      f"|diff| = {np.max(np.abs(ad(eta) @ zeta - bracket)):.2e}")
