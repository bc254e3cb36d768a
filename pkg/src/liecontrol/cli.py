"""Command-line entry points.

    liecontrol simulate --config cfg.json --out runs/demo [--dt ... --seed ...]
    liecontrol nominal  --config cfg.json --out runs/nominal
    liecontrol validate --suite all

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 validation failure.

``simulate`` writes one CSV per body, the resolved configuration, and a
flat key=value manifest (written atomically at run end).  A manifest can be
passed back as ``--config`` to reproduce its run byte-for-byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime
from pathlib import Path

from . import __version__
from .config import ConfigError, ScenarioConfig, config_from_dict, config_to_dict
from .dynamics import NumericalAbort
from .scenario import run_nominal, run_scenario
from .validate import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4


def _load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        tree = json.loads(text)
    except json.JSONDecodeError:
        tree = _config_from_manifest(text, path)
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: expected a JSON object at the top level")
    return config_from_dict(tree)


def _config_from_manifest(text: str, path: str) -> dict:
    for line in text.splitlines():
        if line.startswith("config_json="):
            try:
                return json.loads(line[len("config_json="):])
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: malformed config_json line") from exc
    raise ConfigError(f"{path}: neither valid JSON nor a manifest with config_json")


def _apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    tree = config_to_dict(cfg)
    for name in ("dt", "duration", "seed", "mode"):
        value = getattr(args, name, None)
        if value is not None:
            tree[name] = value
    return config_from_dict(tree)


def _write_manifest(out_dir: Path, cfg: ScenarioConfig, config_path: str | None,
                    files: list, elapsed: float) -> Path:
    manifest = out_dir / "manifest.txt"
    lines = [
        f"config_path={config_path or 'builtin-default'}",
        f"code_version={__version__}",
        f"seed={cfg.seed}",
        f"mode={cfg.mode}",
        f"dt={cfg.dt!r}",
        f"duration={cfg.duration!r}",
        f"wall_clock_seconds={elapsed:.3f}",
        "output_files=" + ",".join(p.name for p in files),
        "config_json=" + json.dumps(config_to_dict(cfg), separators=(",", ":")),
    ]
    tmp = manifest.with_suffix(".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, manifest)
    return manifest


def _resolve_out(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path("out") / datetime.now().strftime("%Y%m%d-%H%M%S")


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    out_dir = _resolve_out(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    log = run_scenario(cfg)
    files = log.write_csv(out_dir)
    resolved = out_dir / "config.resolved.json"
    resolved.write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n",
                        encoding="utf-8")
    manifest = _write_manifest(out_dir, cfg, args.config, files,
                               time.perf_counter() - start)
    print(f"wrote {len(files)} body logs + manifest to {out_dir}")
    print(f"manifest: {manifest}")
    return EXIT_OK


def _cmd_nominal(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    out_dir = _resolve_out(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    log = run_nominal(cfg)
    files = log.write_csv(out_dir)
    _write_manifest(out_dir, cfg, args.config, files, time.perf_counter() - start)
    print(f"wrote {len(files)} nominal logs to {out_dir}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    results = run_suite(args.suite, seed=args.seed)
    failures = 0
    for res in results:
        print(res.line())
        failures += 0 if res.passed else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liecontrol",
        description="Geometric neural-network tracking control on matrix Lie groups")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a formation scenario")
    sim.add_argument("--config", help="JSON config (or a manifest from a previous run)")
    sim.add_argument("--out", help="output directory (default: out/<timestamp>)")
    sim.add_argument("--dt", type=float, help="integrator step [s]")
    sim.add_argument("--duration", type=float, help="simulated time [s]")
    sim.add_argument("--seed", type=int, help="root RNG seed")
    sim.add_argument("--mode", choices=("nn", "ideal", "pd"), help="controller mode")
    sim.set_defaults(fn=_cmd_simulate)

    nom = sub.add_parser("nominal", help="integrate only the nominal error systems")
    nom.add_argument("--config", help="JSON config (or a manifest)")
    nom.add_argument("--out", help="output directory (default: out/<timestamp>)")
    nom.add_argument("--dt", type=float)
    nom.add_argument("--duration", type=float)
    nom.add_argument("--seed", type=int)
    nom.set_defaults(fn=_cmd_nominal)

    val = sub.add_parser("validate", help="run the oracle validation suites")
    val.add_argument("--suite", default="all",
                     choices=("group", "calculus", "errfun", "sensitivity", "all"))
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(fn=_cmd_validate)
    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
