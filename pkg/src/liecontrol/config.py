"""Scenario configuration: dataclasses, defaults, and JSON-tree validation.

The default configuration reproduces the three-vehicle formation case
study: a virtual leader on an analytic curve, per-agent random inertias,
actuator faults switching on at t = 4 s, gravity/center-of-mass/viscous
forces, and seeded sum-of-sinusoid disturbances.

``config_from_dict`` merges a (possibly partial) JSON-compatible tree over
the defaults and reports violations with full field paths, e.g.
``agents[1].fault.kind``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .nn import LearnParams

MODES = ("nn", "ideal", "pd")
FAULT_KINDS = ("none", "const", "sin2")
DISTURBANCE_KINDS = ("none", "sinusoids", "explicit")


class ConfigError(ValueError):
    """Configuration schema violation; message carries the field path."""


@dataclass
class LeaderCurveConfig:
    pre_twist: list = field(default_factory=lambda: [0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    direction: list = field(default_factory=lambda: [1.0, 1.0, 1.0, 2.0, 2.0, 2.0])
    amplitude: float = 0.2
    timescale: float = 10.0


@dataclass
class LeaderConfig:
    initial_rotvec: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    initial_position: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    initial_velocity: list = field(default_factory=lambda: [0.0] * 6)
    curve: LeaderCurveConfig = field(default_factory=LeaderCurveConfig)


@dataclass
class InertiaConfig:
    randomize: bool = True
    rot_diag: list = field(default_factory=lambda: [1.2, 1.3, 1.1])  # used if not randomize
    mass: float = 1.3
    wobble_amplitude: float = 0.5
    wobble_period: float = 30.0


@dataclass
class FaultConfig:
    kind: str = "none"
    channels: list = field(default_factory=lambda: [0, 4])
    start: float = 4.0
    level: float = 0.5       # const kind
    floor: float = 0.1       # sin2 kind
    swing: float = 0.4
    period: float = 30.0


@dataclass
class ForcesConfig:
    gravity: list = field(default_factory=lambda: [0.0, 0.0, -10.0])
    com_offset: list = field(default_factory=lambda: [0.05, 0.0, 0.0])
    drag: float = 0.7


@dataclass
class DisturbanceConfig:
    kind: str = "sinusoids"
    terms: int = 2
    amplitude_range: list = field(default_factory=lambda: [0.1, 0.5])
    period_range: list = field(default_factory=lambda: [5.0, 30.0])
    # explicit kind: per-axis lists of [amplitude, period, phase] triples
    table: list = field(default_factory=list)


@dataclass
class LearnConfig:
    rho1: float = 800.0
    rho2: float = 2.0
    gamma1: float = 2.0
    gamma2: float = 0.7
    alpha1: float = 0.5
    alpha2: float = 0.5

    def to_params(self, eff_inertia_floor: float) -> LearnParams:
        return LearnParams(rho1=self.rho1, rho2=self.rho2, gamma1=self.gamma1,
                           gamma2=self.gamma2, alpha1=self.alpha1, alpha2=self.alpha2,
                           eff_inertia_floor=eff_inertia_floor)


@dataclass
class AgentConfig:
    name: str = "agent"
    offset_position: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    offset_rotvec: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    initial_rotvec: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    initial_position: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    initial_velocity: list = field(default_factory=lambda: [0.0] * 6)
    inertia: InertiaConfig = field(default_factory=InertiaConfig)
    fault: FaultConfig = field(default_factory=FaultConfig)
    forces: ForcesConfig = field(default_factory=ForcesConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    learn: LearnConfig = field(default_factory=LearnConfig)
    eff_inertia_floor: float = 0.1
    hidden: int = 50
    weight_scale: float = 0.01


@dataclass
class GainConfig:
    kp: float = 1.0
    damping: float = 4.0       # A = damping * I6
    rot_weight: float = 10.0   # error-function rotation weight (isotropic)
    pos_weight: float = 5.0

@dataclass
class ScenarioConfig:
    seed: int = 2024
    dt: float = 1e-3
    duration: float = 30.0
    mode: str = "nn"
    log_every: int = 1
    gains: GainConfig = field(default_factory=GainConfig)
    leader: LeaderConfig = field(default_factory=LeaderConfig)
    agents: list = field(default_factory=list)


def default_config(seed: int = 2024) -> ScenarioConfig:
    """Three-agent formation preset with the published gains and fault schedule."""
    agents = [
        AgentConfig(name="agent1",
                    offset_position=[0.0, 0.0, 10.0],
                    initial_position=[0.0, 1.0, 4.0],
                    initial_velocity=[0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
                    fault=FaultConfig(kind="sin2")),
        AgentConfig(name="agent2",
                    offset_position=[-10.0, 0.0, 0.0],
                    initial_rotvec=[0.2, -0.2, 0.2],
                    initial_position=[-5.0, -1.0, 0.0],
                    fault=FaultConfig(kind="const")),
        AgentConfig(name="agent3",
                    offset_position=[0.0, -10.0, 0.0],
                    initial_rotvec=[0.4, -0.4, 0.4],
                    initial_position=[-1.0, -5.0, 0.0],
                    initial_velocity=[0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
                    fault=FaultConfig(kind="const")),
    ]
    return ScenarioConfig(seed=seed, agents=agents)


# -- dict round-trip ----------------------------------------------------------


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _num(value: Any, path: str, minimum: float | None = None,
         strict: bool = False) -> float:
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
            path, f"expected a number, got {value!r}")
    v = float(value)
    _expect(np.isfinite(v), path, "must be finite")
    if minimum is not None:
        if strict:
            _expect(v > minimum, path, f"must be > {minimum}")
        else:
            _expect(v >= minimum, path, f"must be >= {minimum}")
    return v


def _vector(value: Any, path: str, length: int) -> list:
    _expect(isinstance(value, (list, tuple)), path, "expected a list")
    _expect(len(value) == length, path, f"expected length {length}, got {len(value)}")
    return [_num(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _merge(obj: Any, tree: Any, path: str) -> None:
    """Recursively apply a partial dict tree onto a config dataclass."""
    _expect(isinstance(tree, dict), path or "config", "expected an object")
    for key, value in tree.items():
        sub_path = f"{path}.{key}" if path else key
        _expect(hasattr(obj, key), sub_path, "unknown field")
        current = getattr(obj, key)
        if hasattr(current, "__dataclass_fields__"):
            _merge(current, value, sub_path)
        else:
            setattr(obj, key, copy.deepcopy(value))


def _validate(cfg: ScenarioConfig) -> ScenarioConfig:
    cfg.seed = int(_num(cfg.seed, "seed", minimum=0))
    cfg.dt = _num(cfg.dt, "dt", minimum=0.0, strict=True)
    cfg.duration = _num(cfg.duration, "duration", minimum=0.0, strict=True)
    _expect(cfg.mode in MODES, "mode", f"must be one of {MODES}")
    cfg.log_every = int(_num(cfg.log_every, "log_every", minimum=1))

    g = cfg.gains
    g.kp = _num(g.kp, "gains.kp", minimum=1.0)
    g.damping = _num(g.damping, "gains.damping", minimum=0.0, strict=True)
    g.rot_weight = _num(g.rot_weight, "gains.rot_weight", minimum=0.0, strict=True)
    g.pos_weight = _num(g.pos_weight, "gains.pos_weight", minimum=0.0, strict=True)

    ld = cfg.leader
    ld.initial_rotvec = _vector(ld.initial_rotvec, "leader.initial_rotvec", 3)
    ld.initial_position = _vector(ld.initial_position, "leader.initial_position", 3)
    ld.initial_velocity = _vector(ld.initial_velocity, "leader.initial_velocity", 6)
    curve = ld.curve
    curve.pre_twist = _vector(curve.pre_twist, "leader.curve.pre_twist", 6)
    curve.direction = _vector(curve.direction, "leader.curve.direction", 6)
    curve.amplitude = _num(curve.amplitude, "leader.curve.amplitude")
    curve.timescale = _num(curve.timescale, "leader.curve.timescale", minimum=0.0, strict=True)

    _expect(isinstance(cfg.agents, list) and len(cfg.agents) >= 1,
            "agents", "expected a non-empty list")
    names = set()
    for i, ag in enumerate(cfg.agents):
        p = f"agents[{i}]"
        _expect(isinstance(ag.name, str) and ag.name, f"{p}.name", "must be a non-empty string")
        _expect(ag.name not in names, f"{p}.name", "duplicate agent name")
        names.add(ag.name)
        ag.offset_position = _vector(ag.offset_position, f"{p}.offset_position", 3)
        ag.offset_rotvec = _vector(ag.offset_rotvec, f"{p}.offset_rotvec", 3)
        ag.initial_rotvec = _vector(ag.initial_rotvec, f"{p}.initial_rotvec", 3)
        ag.initial_position = _vector(ag.initial_position, f"{p}.initial_position", 3)
        ag.initial_velocity = _vector(ag.initial_velocity, f"{p}.initial_velocity", 6)

        ine = ag.inertia
        _expect(isinstance(ine.randomize, bool), f"{p}.inertia.randomize", "expected a bool")
        ine.rot_diag = _vector(ine.rot_diag, f"{p}.inertia.rot_diag", 3)
        ine.mass = _num(ine.mass, f"{p}.inertia.mass", minimum=0.0, strict=True)
        ine.wobble_amplitude = _num(ine.wobble_amplitude, f"{p}.inertia.wobble_amplitude",
                                    minimum=0.0)
        ine.wobble_period = _num(ine.wobble_period, f"{p}.inertia.wobble_period",
                                 minimum=0.0, strict=True)

        fl = ag.fault
        _expect(fl.kind in FAULT_KINDS, f"{p}.fault.kind", f"must be one of {FAULT_KINDS}")
        _expect(isinstance(fl.channels, list), f"{p}.fault.channels", "expected a list")
        fl.channels = [int(_num(c, f"{p}.fault.channels[{j}]", minimum=0))
                       for j, c in enumerate(fl.channels)]
        _expect(all(c < 6 for c in fl.channels), f"{p}.fault.channels", "entries must be < 6")
        fl.start = _num(fl.start, f"{p}.fault.start", minimum=0.0)
        fl.level = _num(fl.level, f"{p}.fault.level", minimum=0.0, strict=True)
        _expect(fl.level <= 1.0, f"{p}.fault.level", "must be in (0, 1]")
        fl.floor = _num(fl.floor, f"{p}.fault.floor", minimum=0.0, strict=True)
        fl.swing = _num(fl.swing, f"{p}.fault.swing", minimum=0.0)
        _expect(fl.floor + fl.swing <= 1.0, f"{p}.fault",
                "floor + swing must stay within (0, 1]")
        fl.period = _num(fl.period, f"{p}.fault.period", minimum=0.0, strict=True)

        fr = ag.forces
        fr.gravity = _vector(fr.gravity, f"{p}.forces.gravity", 3)
        fr.com_offset = _vector(fr.com_offset, f"{p}.forces.com_offset", 3)
        fr.drag = _num(fr.drag, f"{p}.forces.drag", minimum=0.0)

        ds = ag.disturbance
        _expect(ds.kind in DISTURBANCE_KINDS, f"{p}.disturbance.kind",
                f"must be one of {DISTURBANCE_KINDS}")
        ds.terms = int(_num(ds.terms, f"{p}.disturbance.terms", minimum=1))
        ds.amplitude_range = _vector(ds.amplitude_range, f"{p}.disturbance.amplitude_range", 2)
        ds.period_range = _vector(ds.period_range, f"{p}.disturbance.period_range", 2)
        _expect(0.0 < ds.period_range[0] <= ds.period_range[1],
                f"{p}.disturbance.period_range", "must be increasing and positive")
        if ds.kind == "explicit":
            _expect(isinstance(ds.table, list) and len(ds.table) == 6,
                    f"{p}.disturbance.table", "expected 6 per-axis lists")
            for axis, row in enumerate(ds.table):
                _expect(isinstance(row, list), f"{p}.disturbance.table[{axis}]",
                        "expected a list of [amplitude, period, phase] triples")
                for j, triple in enumerate(row):
                    _vector(triple, f"{p}.disturbance.table[{axis}][{j}]", 3)

        ln = ag.learn
        for nm in ("rho1", "rho2", "gamma1", "gamma2", "alpha1", "alpha2"):
            setattr(ln, nm, _num(getattr(ln, nm), f"{p}.learn.{nm}", minimum=0.0, strict=True))
        ag.eff_inertia_floor = _num(ag.eff_inertia_floor, f"{p}.eff_inertia_floor",
                                    minimum=0.0, strict=True)
        ag.hidden = int(_num(ag.hidden, f"{p}.hidden", minimum=1))
        ag.weight_scale = _num(ag.weight_scale, f"{p}.weight_scale", minimum=0.0)
    return cfg


def config_from_dict(tree: dict) -> ScenarioConfig:
    """Build a validated config from a partial JSON tree merged over defaults."""
    cfg = default_config()
    tree = dict(tree or {})
    agents_tree = tree.pop("agents", None)
    _merge(cfg, tree, "")
    if agents_tree is not None:
        _expect(isinstance(agents_tree, list), "agents", "expected a list")
        agents = []
        for i, ag_tree in enumerate(agents_tree):
            ag = AgentConfig(name=f"agent{i + 1}")
            _merge(ag, ag_tree, f"agents[{i}]")
            agents.append(ag)
        cfg.agents = agents
    return _validate(cfg)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Full JSON-compatible tree (inverse of config_from_dict on defaults)."""
    def as_tree(obj: Any) -> Any:
        if hasattr(obj, "__dataclass_fields__"):
            return {k: as_tree(getattr(obj, k)) for k in obj.__dataclass_fields__}
        if isinstance(obj, (list, tuple)):
            return [as_tree(v) for v in obj]
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        return obj

    return as_tree(cfg)
