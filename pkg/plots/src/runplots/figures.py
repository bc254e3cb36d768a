"""Figure generation from simulation run directories.

Consumes the documented CSV interface of a completed run (one file per
body plus ``manifest.txt``) and renders the standard figure set:

* ``angles``      rotation angle of every body over time
* ``pos3d``       3D position trajectories, rotated into the leader frame
* ``velerr``      velocity error components vs their nominal reference
* ``control``     control wrench components
* ``disturbance`` disturbance samples per agent

Everything is validated before any file is written, so a failed render
never leaves partial images behind.  Rendering is deterministic: identical
CSV inputs give byte-identical image files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

FIGURE_IDS = ("angles", "pos3d", "velerr", "control", "disturbance")

# documented RunLog column set (the file-format contract)
POSE_COLUMNS = ["r11", "r21", "r31", "r12", "r22", "r32", "r13", "r23", "r33",
                "px", "py", "pz"]
RUNLOG_COLUMNS = (
    ["t"] + POSE_COLUMNS
    + [f"xi{i}" for i in range(1, 7)]
    + ["e" + c for c in POSE_COLUMNS]
    + [f"exi{i}" for i in range(1, 7)]
    + [f"nexi{i}" for i in range(1, 7)]
    + ["psi", "psi_nom"]
    + [f"u{i}" for i in range(1, 7)]
    + ["w_norm", "v_norm", "theta"]
    + [f"d{i}" for i in range(1, 7)]
)

_REQUIRED = {
    "angles": ["t"] + POSE_COLUMNS[:9],
    "pos3d": ["t", "px", "py", "pz"],
    "velerr": ["t"] + [f"exi{i}" for i in range(1, 7)]
    + [f"nexi{i}" for i in range(1, 7)],
    "control": ["t"] + [f"u{i}" for i in range(1, 7)],
    "disturbance": ["t"] + [f"d{i}" for i in range(1, 7)],
}

_BODY_COLORS = ("black", "tab:blue", "tab:green", "tab:red", "tab:purple")


class RunDataError(ValueError):
    """Missing/unreadable run inputs; raised before any output is written."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    csv_paths: dict  # body name -> csv path, leader first
    output_path: Path
    body: str | None = None  # velerr/control focus body (default: first agent)

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise RunDataError(f"unknown figure id {self.figure_id!r}; "
                               f"choose from {FIGURE_IDS}")
        if not self.csv_paths:
            raise RunDataError("no input CSVs given")


def load_body(path: str | Path, required: list) -> np.ndarray:
    """Load one body CSV as a structured array, checking the needed columns."""
    path = Path(path)
    if not path.is_file():
        raise RunDataError(f"missing CSV {path}")
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except ValueError as exc:
        raise RunDataError(f"unreadable CSV {path}: {exc}") from exc
    if data.ndim == 0:
        data = data.reshape(1)
    names = data.dtype.names or ()
    for column in required:
        if column not in names:
            raise RunDataError(f"{path} lacks required column {column!r}")
    if any(not np.all(np.isfinite(data[c])) for c in required):
        raise RunDataError(f"{path} contains non-finite values")
    return data


def rotation_angles(data: np.ndarray) -> np.ndarray:
    """Rotation angle arccos((tr R - 1)/2) from the logged rotation columns,
    with the argument clamped to [-1, 1] against round-off drift."""
    trace = data["r11"] + data["r22"] + data["r33"]
    return np.arccos(np.clip((trace - 1.0) / 2.0, -1.0, 1.0))


def _rotations(data: np.ndarray) -> np.ndarray:
    cols = [data[c] for c in POSE_COLUMNS[:9]]
    return np.stack(cols, axis=1).reshape(-1, 3, 3).transpose(0, 2, 1)


def _positions(data: np.ndarray) -> np.ndarray:
    return np.stack([data["px"], data["py"], data["pz"]], axis=1)


def plot(spec: FigureSpec) -> Path:
    """Render one figure.  Inputs are fully validated before the file is
    created; returns the output path."""
    required = _REQUIRED[spec.figure_id]
    if spec.figure_id in ("angles", "pos3d"):
        bodies = {name: load_body(p, required) for name, p in spec.csv_paths.items()}
        if spec.figure_id == "pos3d":
            leader_name = next(iter(spec.csv_paths))
            leader = load_body(spec.csv_paths[leader_name],
                               ["t"] + POSE_COLUMNS)
            bodies[leader_name] = leader
    else:
        focus = spec.body or list(spec.csv_paths)[min(1, len(spec.csv_paths) - 1)]
        if focus not in spec.csv_paths:
            raise RunDataError(f"body {focus!r} not among {list(spec.csv_paths)}")
        if spec.figure_id == "disturbance":
            bodies = {name: load_body(p, required)
                      for name, p in spec.csv_paths.items() if name != "leader"}
            if not bodies:
                bodies = {focus: load_body(spec.csv_paths[focus], required)}
        else:
            bodies = {focus: load_body(spec.csv_paths[focus], required)}

    spec.output_path.parent.mkdir(parents=True, exist_ok=True)
    renderer = {
        "angles": _render_angles,
        "pos3d": _render_pos3d,
        "velerr": _render_velerr,
        "control": _render_control,
        "disturbance": _render_disturbance,
    }[spec.figure_id]
    fig = renderer(bodies, spec)
    try:
        fig.savefig(spec.output_path)
    finally:
        plt.close(fig)
    return spec.output_path


def _render_angles(bodies: dict, spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(7.0, 4.0), dpi=120)
    for (name, data), color in zip(bodies.items(), _BODY_COLORS):
        ax.plot(data["t"], rotation_angles(data), label=name, color=color)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("rotation angle [rad]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def _render_pos3d(bodies: dict, spec: FigureSpec):
    leader_name = next(iter(bodies))
    R_leader = _rotations(bodies[leader_name])
    fig = plt.figure(figsize=(6.5, 5.5), dpi=120)
    ax = fig.add_subplot(projection="3d")
    for (name, data), color in zip(bodies.items(), _BODY_COLORS):
        p = _positions(data)
        n = min(len(p), len(R_leader))
        # express positions in the (rotating) leader frame
        q = np.einsum("nij,ni->nj", R_leader[:n], p[:n])
        ax.plot(q[:, 0], q[:, 1], q[:, 2], label=name, color=color)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.legend()
    fig.tight_layout()
    return fig


def _component_grid(data: np.ndarray, columns: list, label: str,
                    reference: list | None = None, ref_label: str = ""):
    fig, axes = plt.subplots(3, 2, figsize=(8.0, 6.0), dpi=120, sharex=True)
    for k, ax in enumerate(axes.flat):
        ax.plot(data["t"], data[columns[k]], color="tab:blue", label=label)
        if reference is not None:
            ax.plot(data["t"], data[reference[k]], color="black",
                    linestyle="--", linewidth=1.0, label=ref_label)
        ax.set_ylabel(columns[k])
        ax.grid(True, alpha=0.3)
        if k == 0:
            ax.legend(fontsize=8)
    for ax in axes[-1]:
        ax.set_xlabel("t [s]")
    fig.tight_layout()
    return fig


def _render_velerr(bodies: dict, spec: FigureSpec):
    (name, data), = bodies.items()
    fig = _component_grid(data, [f"exi{i}" for i in range(1, 7)],
                          f"{name} velocity error",
                          [f"nexi{i}" for i in range(1, 7)], "nominal")
    return fig


def _render_control(bodies: dict, spec: FigureSpec):
    (name, data), = bodies.items()
    return _component_grid(data, [f"u{i}" for i in range(1, 7)],
                           f"{name} control input")


def _render_disturbance(bodies: dict, spec: FigureSpec):
    fig, axes = plt.subplots(len(bodies), 1, figsize=(7.0, 2.2 * len(bodies)),
                             dpi=120, sharex=True, squeeze=False)
    for ax, (name, data) in zip(axes[:, 0], bodies.items()):
        for i in range(1, 7):
            ax.plot(data["t"], data[f"d{i}"], linewidth=0.9)
        ax.set_ylabel(name)
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("t [s]")
    fig.tight_layout()
    return fig


def discover_run(run_dir: str | Path) -> dict:
    """Map body name -> CSV path for a completed run, leader first.

    Requires the manifest (its presence marks a run that finished); partial
    or still-running output directories are rejected.
    """
    run_dir = Path(run_dir)
    if not (run_dir / "manifest.txt").is_file():
        raise RunDataError(f"{run_dir} has no manifest.txt (incomplete run?)")
    csvs = sorted(run_dir.glob("*.csv"))
    if not csvs:
        raise RunDataError(f"{run_dir} contains no CSV files")
    paths = {p.stem: p for p in csvs}
    ordered = {}
    if "leader" in paths:
        ordered["leader"] = paths.pop("leader")
    ordered.update(paths)
    return ordered


def plot_all(run_dir: str | Path, out_dir: str | Path | None = None) -> list:
    """Render the whole figure set for a completed run; idempotent.

    All inputs are loaded and validated up front, so an invalid run emits
    no images at all.
    """
    run_dir = Path(run_dir)
    csv_paths = discover_run(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir / "figures"
    specs = [FigureSpec(fid, csv_paths, out_dir / f"{fid}.png")
             for fid in FIGURE_IDS]
    # validate everything before writing anything
    for spec in specs:
        required = _REQUIRED[spec.figure_id]
        for path in spec.csv_paths.values():
            load_body(path, [c for c in required])
    return [plot(spec) for spec in specs]
