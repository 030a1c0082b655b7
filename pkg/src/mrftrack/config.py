"""Structured run configuration: JSON files plus dotted-path overrides.

Every leaf of a config file can be overridden on the command line either by
an auto-generated flag of the same dotted name or by --set path=value;
values are parsed as JSON with a fallback to plain strings. Validation
collects every problem before failing so a bad file reports all of its
mistakes at once.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass

from .appearance import TemplateModel
from .geometry import PatchDims
from .interaction import InteractionParams
from .motion import MotionParams
from .simulate import ScenarioConfig


class ConfigError(ValueError):
    """Carries the full list of validation messages."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


TRACKER_KINDS = ("mcmc-mrf", "independent")

RUN_DEFAULTS = {
    "tracker": "mcmc-mrf",
    "rng_seed": 0,
    "n_samples": 200,
    "burn_in": 0,
    "m_particles": 10,
    "failure_threshold_px": 50.0,
    "reference_frames": None,
    "dims": {"length": 32, "width": 10},
    "motion": {"sigma_x": 5.0, "sigma_y": 3.0, "sigma_theta": 0.4},
    "interaction": {
        "strength": 5000.0,
        "overlap_mode": "raw-count",
        "neighbor_radius": 64.0,
    },
    "template": None,
    "template_dir": None,
    "frames_dir": None,
    "groundtruth": None,
    "scenario": None,
    "output_dir": "run_out",
    "annotate": False,
}

SCENARIO_DEFAULTS = {
    "n_agents": 20,
    "width": 720,
    "height": 480,
    "dims": {"length": 32, "width": 10},
    "speed_mean": 3.0,
    "speed_std": 0.5,
    "heading_jitter_std": 0.15,
    "encounter_radius": 24.0,
    "reverse_prob": 0.8,
    "agent_intensity": 0.15,
    "background_intensity": 0.85,
    "noise_std": 0.05,
    "n_frames": 100,
    "rng_seed": 0,
    "initial_poses": None,
}

SIMULATE_DEFAULTS = dict(SCENARIO_DEFAULTS, output_dir="sim_out")

COMPARE_DEFAULTS = {
    "scenario": dict(SCENARIO_DEFAULTS),
    "seeds": {"count": 20, "start": 0},
    "cells": [
        {"tracker": "mcmc-mrf", "n_samples": 200},
        {"tracker": "independent", "m_particles": 10},
    ],
    "burn_in": 0,
    "failure_threshold_px": 50.0,
    "reference_frames": None,
    "motion": {"sigma_x": 5.0, "sigma_y": 3.0, "sigma_theta": 0.4},
    "interaction": {
        "strength": 5000.0,
        "overlap_mode": "raw-count",
        "neighbor_radius": 64.0,
    },
    "output_dir": "compare_out",
}

EVAL_DEFAULTS = {
    "estimates": None,
    "groundtruth": None,
    "failure_threshold_px": 50.0,
    "reference_frames": None,
    "output_dir": None,
}


@dataclass(frozen=True)
class RunConfig:
    tracker: str
    rng_seed: int
    n_samples: int
    burn_in: int
    m_particles: int
    failure_threshold_px: float
    reference_frames: int | None
    dims: PatchDims
    motion: MotionParams
    interaction: InteractionParams
    template: TemplateModel | None
    template_dir: str | None
    frames_dir: str | None
    groundtruth: str | None
    scenario: ScenarioConfig | None
    output_dir: str
    annotate: bool


def load_json(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError([f"cannot read config {path}: {e}"]) from e
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path} is not valid JSON: {e}"]) from e
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a JSON object"])
    return data


def parse_override(text: str) -> tuple[str, object]:
    """'a.b.c=value' -> ('a.b.c', parsed value); value tries JSON first."""
    if "=" not in text:
        raise ConfigError([f"override {text!r} must look like key.path=value"])
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError([f"override {text!r} has an empty key"])
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def apply_override(tree: dict, dotted: str, value) -> None:
    """Set a leaf by dotted path, creating intermediate objects as needed."""
    parts = dotted.split(".")
    node = tree
    for p in parts[:-1]:
        nxt = node.get(p)
        if not isinstance(nxt, dict):
            nxt = {}
            node[p] = nxt
        node = nxt
    node[parts[-1]] = value


def merge_defaults(defaults: dict, given: dict, problems: list[str], where: str = "") -> dict:
    """Deep-fill defaults, flagging keys that the schema does not know."""
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        label = f"{where}{key}"
        if key not in defaults:
            problems.append(f"unknown config field {label!r}")
            continue
        base = defaults[key]
        if isinstance(base, dict) and isinstance(value, dict):
            out[key] = merge_defaults(base, value, problems, f"{label}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _num(tree, key, problems, where, kind=float, minimum=None, allow_none=False):
    v = tree.get(key)
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        problems.append(f"{where}{key} must be a number, got {v!r}")
        return None
    v = kind(v)
    if kind is int and v != tree.get(key):
        problems.append(f"{where}{key} must be an integer, got {tree.get(key)!r}")
        return None
    if minimum is not None and v < minimum:
        problems.append(f"{where}{key} must be >= {minimum}, got {v}")
        return None
    return v


def build_scenario(tree: dict, problems: list[str], where: str = "scenario.") -> ScenarioConfig | None:
    merged = merge_defaults(SCENARIO_DEFAULTS, tree, problems, where)
    dims_t = merged["dims"]
    kwargs = dict(merged)
    kwargs["dims"] = PatchDims(int(dims_t.get("length", 32)), int(dims_t.get("width", 10)))
    if kwargs["initial_poses"] is not None:
        kwargs["initial_poses"] = tuple(tuple(float(v) for v in row) for row in kwargs["initial_poses"])
    try:
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as e:
        problems.append(f"{where.rstrip('.')}: {e}")
        return None


def _build_motion(tree, problems, where="motion.") -> MotionParams | None:
    try:
        return MotionParams(
            float(tree["sigma_x"]), float(tree["sigma_y"]), float(tree["sigma_theta"])
        )
    except (TypeError, KeyError, ValueError) as e:
        problems.append(f"{where.rstrip('.')}: {e}")
        return None


def _build_interaction(tree, dims, problems, where="interaction.") -> InteractionParams | None:
    try:
        return InteractionParams(
            strength=float(tree["strength"]),
            overlap_mode=str(tree["overlap_mode"]),
            neighbor_radius=float(tree["neighbor_radius"]),
            dims=dims,
        )
    except (TypeError, KeyError, ValueError) as e:
        problems.append(f"{where.rstrip('.')}: {e}")
        return None


def _build_template(tree, dims, problems) -> TemplateModel | None:
    try:
        return TemplateModel(
            mu_f=float(tree["mu_f"]),
            sigma_f=float(tree["sigma_f"]),
            mu_b=float(tree["mu_b"]),
            sigma_b=float(tree["sigma_b"]),
            dims=dims,
        )
    except (TypeError, KeyError, ValueError) as e:
        problems.append(f"template: {e}")
        return None


def build_run_config(tree: dict) -> RunConfig:
    problems: list[str] = []
    merged = merge_defaults(RUN_DEFAULTS, tree, problems)

    tracker = merged["tracker"]
    if tracker not in TRACKER_KINDS:
        problems.append(f"tracker must be one of {TRACKER_KINDS}, got {tracker!r}")

    rng_seed = _num(merged, "rng_seed", problems, "", kind=int)
    n_samples = _num(merged, "n_samples", problems, "", kind=int, minimum=1)
    burn_in = _num(merged, "burn_in", problems, "", kind=int, minimum=0)
    m_particles = _num(merged, "m_particles", problems, "", kind=int, minimum=1)
    threshold = _num(merged, "failure_threshold_px", problems, "", minimum=1e-9)
    reference = _num(merged, "reference_frames", problems, "", kind=int, minimum=1, allow_none=True)

    scenario = None
    if merged["scenario"] is not None:
        if not isinstance(merged["scenario"], dict):
            problems.append("scenario must be an object")
        else:
            scenario = build_scenario(merged["scenario"], problems)
            if scenario is not None and scenario.n_agents < 1:
                problems.append("scenario needs at least one agent to track")

    frames_dir = merged["frames_dir"]
    groundtruth = merged["groundtruth"]
    if (frames_dir is None) == (scenario is None and merged["scenario"] is None):
        problems.append("exactly one of frames_dir and scenario must be set")
    if frames_dir is not None and groundtruth is None:
        problems.append("frames_dir input needs a groundtruth path")

    if scenario is not None and "dims" in tree:
        spec_d = merged["dims"]
        if (int(spec_d["length"]), int(spec_d["width"])) != tuple(scenario.dims):
            problems.append(
                f"dims {spec_d} conflicts with scenario.dims {tuple(scenario.dims)}"
            )
    if scenario is not None:
        dims = scenario.dims
    else:
        try:
            dims = PatchDims(int(merged["dims"]["length"]), int(merged["dims"]["width"]))
            dims.validate()
        except (TypeError, KeyError, ValueError) as e:
            problems.append(f"dims: {e}")
            dims = PatchDims()

    motion = _build_motion(merged["motion"], problems)
    interaction = _build_interaction(merged["interaction"], dims, problems)

    template = None
    if merged["template"] is not None:
        if not isinstance(merged["template"], dict):
            problems.append("template must be an object with mu_f, sigma_f, mu_b, sigma_b")
        else:
            template = _build_template(merged["template"], dims, problems)
    if template is not None and merged["template_dir"] is not None:
        problems.append("template and template_dir are mutually exclusive")

    output_dir = merged["output_dir"]
    if not isinstance(output_dir, str) or not output_dir:
        problems.append(f"output_dir must be a non-empty string, got {output_dir!r}")
    if not isinstance(merged["annotate"], bool):
        problems.append(f"annotate must be true or false, got {merged['annotate']!r}")

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        tracker=tracker,
        rng_seed=rng_seed,
        n_samples=n_samples,
        burn_in=burn_in,
        m_particles=m_particles,
        failure_threshold_px=threshold,
        reference_frames=reference,
        dims=dims,
        motion=motion,
        interaction=interaction,
        template=template,
        template_dir=merged["template_dir"],
        frames_dir=frames_dir,
        groundtruth=groundtruth,
        scenario=scenario,
        output_dir=output_dir,
        annotate=merged["annotate"],
    )


def build_simulate_config(tree: dict) -> tuple[ScenarioConfig, str]:
    problems: list[str] = []
    merged = merge_defaults(SIMULATE_DEFAULTS, tree, problems)
    output_dir = merged.pop("output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        problems.append(f"output_dir must be a non-empty string, got {output_dir!r}")
    scenario = build_scenario(merged, problems, where="")
    if problems:
        raise ConfigError(problems)
    return scenario, output_dir


def build_compare_config(tree: dict) -> dict:
    """Validated compare plan: scenario, seed list, per-cell run settings."""
    problems: list[str] = []
    merged = merge_defaults(COMPARE_DEFAULTS, tree, problems)
    if "cells" in tree:
        merged["cells"] = copy.deepcopy(tree["cells"])
    if "seeds" in tree:
        merged["seeds"] = copy.deepcopy(tree["seeds"])

    scenario = build_scenario(merged["scenario"], problems)
    if scenario is not None and scenario.n_agents < 1:
        problems.append("scenario needs at least one agent to track")

    seeds_spec = merged["seeds"]
    if isinstance(seeds_spec, list):
        seeds = []
        for s in seeds_spec:
            if isinstance(s, bool) or not isinstance(s, int):
                problems.append(f"seeds entries must be integers, got {s!r}")
            else:
                seeds.append(s)
        if not seeds:
            problems.append("seeds list must not be empty")
    elif isinstance(seeds_spec, dict):
        count = seeds_spec.get("count")
        start = seeds_spec.get("start", 0)
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            problems.append(f"seeds.count must be a positive integer, got {count!r}")
            seeds = []
        else:
            seeds = list(range(int(start), int(start) + count))
    else:
        problems.append("seeds must be a list of integers or {count, start}")
        seeds = []

    cells = merged["cells"]
    parsed_cells = []
    if not isinstance(cells, list) or not cells:
        problems.append("cells must be a non-empty list of tracker settings")
        cells = []
    for idx, cell in enumerate(cells):
        where = f"cells[{idx}]"
        if not isinstance(cell, dict):
            problems.append(f"{where} must be an object")
            continue
        kind = cell.get("tracker")
        if kind not in TRACKER_KINDS:
            problems.append(f"{where}.tracker must be one of {TRACKER_KINDS}, got {kind!r}")
            continue
        known = {"tracker", "n_samples", "m_particles", "burn_in", "label"}
        for k in cell:
            if k not in known:
                problems.append(f"unknown config field {where}.{k!r}")
        if kind == "mcmc-mrf":
            count = cell.get("n_samples")
            key = "n_samples"
        else:
            count = cell.get("m_particles")
            key = "m_particles"
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            problems.append(f"{where}.{key} must be a positive integer, got {count!r}")
            continue
        burn = cell.get("burn_in", merged["burn_in"])
        if not isinstance(burn, int) or isinstance(burn, bool) or burn < 0:
            problems.append(f"{where}.burn_in must be a non-negative integer, got {burn!r}")
            continue
        label = cell.get("label") or (
            f"mcmc-mrf-{count}" if kind == "mcmc-mrf" else f"independent-{count}"
        )
        parsed_cells.append({"tracker": kind, "count": count, "burn_in": burn, "label": label})
    labels = [c["label"] for c in parsed_cells]
    if len(set(labels)) != len(labels):
        problems.append(f"cell labels must be unique, got {labels}")

    threshold = _num(merged, "failure_threshold_px", problems, "", minimum=1e-9)
    reference = _num(merged, "reference_frames", problems, "", kind=int, minimum=1, allow_none=True)
    dims = scenario.dims if scenario is not None else PatchDims()
    motion = _build_motion(merged["motion"], problems)
    interaction = _build_interaction(merged["interaction"], dims, problems)
    output_dir = merged["output_dir"]
    if not isinstance(output_dir, str) or not output_dir:
        problems.append(f"output_dir must be a non-empty string, got {output_dir!r}")

    if problems:
        raise ConfigError(problems)
    return {
        "scenario": scenario,
        "seeds": seeds,
        "cells": parsed_cells,
        "failure_threshold_px": threshold,
        "reference_frames": reference,
        "motion": motion,
        "interaction": interaction,
        "output_dir": output_dir,
    }


def build_eval_config(tree: dict) -> dict:
    problems: list[str] = []
    merged = merge_defaults(EVAL_DEFAULTS, tree, problems)
    for key in ("estimates", "groundtruth"):
        if not isinstance(merged[key], str) or not merged[key]:
            problems.append(f"{key} must be a path string")
    threshold = _num(merged, "failure_threshold_px", problems, "", minimum=1e-9)
    reference = _num(merged, "reference_frames", problems, "", kind=int, minimum=1, allow_none=True)
    out = merged["output_dir"]
    if out is not None and (not isinstance(out, str) or not out):
        problems.append(f"output_dir must be a non-empty string or null, got {out!r}")
    if problems:
        raise ConfigError(problems)
    return {
        "estimates": merged["estimates"],
        "groundtruth": merged["groundtruth"],
        "failure_threshold_px": threshold,
        "reference_frames": reference,
        "output_dir": out,
    }


def flag_paths(defaults: dict, prefix: str = "") -> list[str]:
    """Dotted leaf paths of a defaults tree, for auto-generated CLI flags."""
    out = []
    for key, value in defaults.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict) and value and all(not isinstance(v, (list,)) for v in value.values()):
            out.extend(flag_paths(value, f"{dotted}."))
        else:
            out.append(dotted)
    return out
