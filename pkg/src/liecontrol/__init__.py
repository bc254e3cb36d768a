"""Geometric neural-network tracking control on matrix Lie groups.

A numpy library implementing Euler-Poincare dynamics on SE(3)/SO(3),
coordinate-free differentiation, a configuration error function with
closed-form derivatives, an online-trained two-layer neural controller
with intrinsic learning rules, and a multi-agent formation scenario with
actuator faults and disturbances.
"""

from .calculus import left_diff, left_grad_map, left_hessian, left_jacobian
from .config import ConfigError, ScenarioConfig, config_from_dict, config_to_dict, default_config
from .dynamics import (Gains, NumericalAbort, PlantParams, error_rhs,
                       ideal_control, nominal_rhs, plant_rhs, simulate_plant, step)
from .errfun import ConfigErrorFunction, Se3ErrorFunction
from .groups import (SE3, SO3, Ad, GroupElement, GroupMembershipError, GroupSpec,
                     ad, breve, compose, config_error, exp_group, exp_so3,
                     flat12, frob_norm, hat, inv_mat, inverse, project_rotation,
                     rotation_angle, sk, so3_hat, so3_vee, unbreve, unflat12,
                     vee, vel_error)
from .nn import (FullSensitivity, LearnParams, NNWeights, build_input, control,
                 cost_gradient_W, effort_gradient_V, full_sensitivity_rhs,
                 pi_diag, pi_matrix, sens_rhs_static, sigmoid,
                 ultimate_weight_bound, weight_rate_V, weight_rate_W)
from .scenario import (RunLog, agent_desired, fault_efficiencies, leader_desired,
                       run_nominal, run_scenario)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
