"""YAML scenario configs, validation reports, and run manifests.

A config file is a plain key-value document in SI units; the manifest
written next to every run embeds the fully resolved config plus seed and
version, and is sufficient to reproduce the run exactly.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import yaml

from . import __version__
from .coordination import LayerConfig, TargetScheme
from .engine import Scenario
from .model import PriorityMatrix, TrafficParams
from .plant import EnvParams


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


_REQUIRED = ("n_agents", "arena")

#: config key -> (algorithm symbol, SI unit); used by the validate report
SYMBOL_TABLE = [
    ("traffic.r0_repulsion", "R_0", "m"),
    ("traffic.p_rep", "p^rep", "1/s"),
    ("traffic.anisotropy", "A", "-"),
    ("traffic.v_friction", "v^friction", "m/s"),
    ("traffic.r_friction", "R^friction", "m"),
    ("traffic.p_friction", "p^friction", "1/s"),
    ("traffic.a_friction", "a^friction", "m/s^2"),
    ("traffic.frict_coupling", "C^frict", "-"),
    ("traffic.r_avoid", "R^avoid", "m"),
    ("traffic.r_danger", "R^danger", "m"),
    ("traffic.p_avoid", "p^avoid", "1/s"),
    ("traffic.a_avoid", "a^avoid", "m/s^2"),
    ("traffic.max_selfdrive_iters", "s_max", "-"),
    ("traffic.delta_queue", "delta^queue", "m"),
    ("traffic.arrival_radius", "r^arrive", "m"),
    ("traffic.r_coll", "r^coll", "m"),
    ("layers.count", "n^layer", "-"),
    ("layers.height", "h^layer", "m"),
    ("layers.overlap", "alpha^layer-overlap", "-"),
    ("layers.vertical_speed", "v^vert", "m/s"),
    ("env.t_delay", "t_delay", "s"),
    ("env.a_max", "a_max", "m/s^2"),
    ("env.pos_noise_sigma", "sigma_x", "m"),
    ("env.vel_noise_sigma", "sigma_v", "m/s"),
    ("env.comm_range", "r_comm", "m"),
    ("env.packet_loss_base", "P_loss", "-"),
    ("env.broadcast_hz", "f_comm", "Hz"),
    ("env.control_hz", "f_ctrl", "Hz"),
    ("env.physics_dt", "dt", "s"),
    ("desired_speed", "v^SPP", "m/s"),
]


def _sub_params(cls, data: dict, section: str, problems: list[str]):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            problems.append(f"unknown key {section}.{key}")
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"bad {section} section: {exc}")
        return cls()


def scenario_from_dict(data: dict, base_dir: Path | None = None) -> Scenario:
    """Build a Scenario from a config mapping; raises ConfigError naming
    every missing or unknown key."""
    problems = []
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a mapping"])
    for key in _REQUIRED:
        if key not in data:
            problems.append(f"missing required key: {key}")
    if problems:
        raise ConfigError(problems)

    arena = data["arena"]
    if not isinstance(arena, dict) or "shape" not in arena:
        problems.append("missing required key: arena.shape")
        raise ConfigError(problems)
    shape = arena.get("shape")
    if shape == "square":
        if "size" not in arena:
            problems.append("missing required key: arena.size")
            raise ConfigError(problems)
        scheme = TargetScheme.square(float(arena["size"]))
        if "min_path_fraction" in arena:
            scheme = dataclasses.replace(scheme, min_path_fraction=float(arena["min_path_fraction"]))
    elif shape == "circle":
        if "radius" not in arena:
            problems.append("missing required key: arena.radius")
            raise ConfigError(problems)
        scheme = TargetScheme.circle(float(arena["radius"]))
    else:
        raise ConfigError([f"arena.shape must be 'square' or 'circle', got {shape!r}"])

    traffic = _sub_params(TrafficParams, data.get("traffic", {}), "traffic", problems)
    env = _sub_params(EnvParams, data.get("env", {}), "env", problems)

    layers_in = dict(data.get("layers", {}))
    rename = {"count": "n_layers", "height": "layer_height", "vertical_speed": "v_vertical"}
    layers_in = {rename.get(k, k): v for k, v in layers_in.items()}
    layers = _sub_params(LayerConfig, layers_in, "layers", problems)

    priority = data.get("priority", "egalitarian")
    if isinstance(priority, dict):
        if "inline" in priority:
            priority = PriorityMatrix.from_text(priority["inline"])
        elif "file" in priority:
            path = Path(priority["file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            priority = PriorityMatrix.from_text(path.read_text())
        else:
            problems.append("priority mapping needs an 'inline' or 'file' key")
            priority = "egalitarian"

    known_top = {"n_agents", "arena", "traffic", "env", "layers", "priority",
                 "desired_speed", "duration_s", "seed", "no_interactions",
                 "neighbor_index", "sample_dt"}
    for key in data:
        if key not in known_top:
            problems.append(f"unknown key {key}")
    if problems:
        raise ConfigError(problems)

    desired = data.get("desired_speed", 8.0)
    if isinstance(desired, list):
        desired = tuple(float(v) for v in desired) if len(desired) == 2 else [float(v) for v in desired]

    return Scenario(
        n_agents=int(data["n_agents"]),
        scheme=scheme,
        params=traffic,
        env=env,
        layers=layers,
        priority=priority,
        desired_speed=desired,
        duration_s=float(data.get("duration_s", 600.0)),
        seed=int(data.get("seed", 0)),
        no_interactions=bool(data.get("no_interactions", False)),
        neighbor_index=str(data.get("neighbor_index", "auto")),
        sample_dt=float(data.get("sample_dt", 1.0)),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    """Fully resolved config mapping (every default expanded)."""
    if sc.scheme.kind == "square":
        arena = {"shape": "square", "size": sc.scheme.dimension,
                 "min_path_fraction": sc.scheme.min_path_fraction}
    else:
        arena = {"shape": "circle", "radius": sc.scheme.dimension}
    layers = dataclasses.asdict(sc.layers)
    layers = {
        "count": layers.pop("n_layers"),
        "height": layers.pop("layer_height"),
        "vertical_speed": layers.pop("v_vertical"),
        **layers,
    }
    if isinstance(sc.priority, PriorityMatrix):
        priority = {"inline": sc.priority.to_text()}
    else:
        priority = sc.priority
    desired = sc.desired_speed
    if isinstance(desired, tuple):
        desired = list(desired)
    elif hasattr(desired, "tolist"):
        desired = desired.tolist()
    return {
        "n_agents": sc.n_agents,
        "arena": arena,
        "traffic": dataclasses.asdict(sc.params),
        "env": dataclasses.asdict(sc.env),
        "layers": layers,
        "priority": priority,
        "desired_speed": desired,
        "duration_s": sc.duration_s,
        "seed": sc.seed,
        "no_interactions": sc.no_interactions,
        "neighbor_index": sc.neighbor_index,
        "sample_dt": sc.sample_dt,
    }


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except yaml.YAMLError as exc:
        raise ConfigError([f"config is not valid YAML: {exc}"])
    return scenario_from_dict(data, base_dir=path.parent)


def write_manifest(path, sc: Scenario) -> None:
    manifest = {
        "tool": "skytraffic",
        "version": __version__,
        "seed": sc.seed,
        "scenario": scenario_to_dict(sc),
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def scenario_from_manifest(path) -> Scenario:
    manifest = json.loads(Path(path).read_text())
    return scenario_from_dict(manifest["scenario"])


def _lookup(resolved: dict, dotted: str):
    node = resolved
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def validation_report(sc: Scenario) -> tuple[list[str], str]:
    """(violations, resolved-parameter table) for the validate command;
    layer-count oddness is enforced here."""
    violations = sc.validate(require_odd_layers=True)
    resolved = scenario_to_dict(sc)
    lines = [f"{'parameter':34s} {'symbol':22s} {'value':>14s}  unit"]
    for dotted, symbol, unit in SYMBOL_TABLE:
        value = _lookup(resolved, dotted)
        if value is None:
            continue
        if isinstance(value, float):
            text = f"{value:.6g}"
        else:
            text = str(value)
        lines.append(f"{dotted:34s} {symbol:22s} {text:>14s}  {unit}")
    return violations, "\n".join(lines)
