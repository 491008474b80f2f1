"""Run configuration: one YAML file describing a whole experiment.

The file has nested sections mirroring the module configs (``world``,
``episode``, ``rewards``, ``learner``, ``descent``, ``run``); anything
omitted falls back to the module defaults. Loading is strict: unknown
keys and invalid values raise errors naming the offending field, and a
loaded config serializes back to an equivalent file, which is how every
run persists its snapshot next to its artifacts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any

import numpy as np
import yaml

from .agent import SACConfig
from .demos import AGENT_DEMO_KINDS
from .descent import DescentConfig
from .env import EpisodeConfig, PerchEnv
from .rewards import RewardConstants
from .world import BranchGeometry, SimConfig, TetherSpec, World

__all__ = [
    "OUTPUT_ROOT_ENV",
    "ConfigError",
    "RunConfig",
    "load_run_config",
    "resolve_output_dir",
    "run_config_hash",
    "save_run_config",
]

OUTPUT_ROOT_ENV = "TETHERPERCH_OUTPUT_ROOT"

AGENT_LABELS = tuple(AGENT_DEMO_KINDS)


class ConfigError(ValueError):
    """Invalid or unknown configuration content; message names the field."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs: module configs plus run bookkeeping."""

    world: World = field(default_factory=World)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    rewards: RewardConstants | None = None
    learner: SACConfig = field(default_factory=SACConfig)
    descent: DescentConfig = field(default_factory=DescentConfig)
    agent: str = "sac"
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs"
    train_steps: int = 25_000

    def __post_init__(self):
        if self.agent not in AGENT_LABELS:
            raise ConfigError(
                f"run.agent: unknown agent {self.agent!r}; choose from {sorted(AGENT_LABELS)}"
            )
        if not self.seeds:
            raise ConfigError("run.seeds: need at least one seed")
        if self.train_steps < 0:
            raise ConfigError("run.train_steps: must be nonnegative")

    def build_env(self) -> PerchEnv:
        return PerchEnv(self.world, self.episode, self.rewards)


# ---------------------------------------------------------------------------
# section <-> dataclass plumbing


def _coerce(value: Any, target: Any) -> Any:
    if isinstance(target, tuple) and isinstance(value, list):
        return tuple(value)
    return value


def _build_section(cls, data: dict, section: str, defaults=None):
    """Instantiate a config dataclass from one YAML mapping, strictly."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{section}.{sorted(unknown)[0]}: unknown field")
    base = defaults if defaults is not None else cls()
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], getattr(base, f.name))
    try:
        return dataclasses.replace(base, **kwargs) if kwargs else base
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _world_from_mapping(data: dict | None) -> World:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"world: expected a mapping, got {type(data).__name__}")
    unknown = set(data) - {"branch", "tether", "sim"}
    if unknown:
        raise ConfigError(f"world.{sorted(unknown)[0]}: unknown field")
    branch_data = dict(data.get("branch") or {})
    unknown = set(branch_data) - {"center", "axis", "radius"}
    if unknown:
        raise ConfigError(f"world.branch.{sorted(unknown)[0]}: unknown field")
    default = World()
    try:
        branch = BranchGeometry(
            center=np.asarray(branch_data.get("center", default.branch.center), dtype=float),
            axis=np.asarray(branch_data.get("axis", default.branch.axis), dtype=float),
            radius=float(branch_data.get("radius", default.branch.radius)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"world.branch: {exc}") from exc
    tether = _build_section(TetherSpec, data.get("tether"), "world.tether")
    sim = _build_section(SimConfig, data.get("sim"), "world.sim")
    return World(branch=branch, tether=tether, config=sim)


_TOP_SECTIONS = ("world", "episode", "rewards", "learner", "descent", "run")
_RUN_FIELDS = ("agent", "seeds", "output_dir", "train_steps")


def load_run_config(src: str | Path | IO[str] | dict | None = None) -> RunConfig:
    """Build a RunConfig from a YAML file, stream, or parsed mapping."""
    if src is None:
        data = {}
    elif isinstance(src, dict):
        data = src
    elif isinstance(src, (str, Path)):
        with open(src) as fh:
            data = yaml.safe_load(fh) or {}
    else:
        data = yaml.safe_load(src) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root: expected a mapping, got {type(data).__name__}")
    unknown = set(data) - set(_TOP_SECTIONS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")

    world = _world_from_mapping(data.get("world"))
    episode = _build_section(EpisodeConfig, data.get("episode"), "episode")
    rewards = None
    if data.get("rewards") is not None:
        rewards = _build_section(RewardConstants, data.get("rewards"), "rewards")
    learner = _build_section(SACConfig, data.get("learner"), "learner")
    descent = _build_section(DescentConfig, data.get("descent"), "descent")

    run = dict(data.get("run") or {})
    unknown = set(run) - set(_RUN_FIELDS)
    if unknown:
        raise ConfigError(f"run.{sorted(unknown)[0]}: unknown field")
    seeds = run.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = [seeds]
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("run.seeds: expected a list of integers")
    return RunConfig(
        world=world,
        episode=episode,
        rewards=rewards,
        learner=learner,
        descent=descent,
        agent=str(run.get("agent", "sac")),
        seeds=tuple(seeds),
        output_dir=str(run.get("output_dir", "runs")),
        train_steps=int(run.get("train_steps", 25_000)),
    )


def _plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [float(v) for v in value.ravel()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def run_config_mapping(cfg: RunConfig) -> dict:
    """Nested plain-python mapping equivalent to the YAML file format."""
    return {
        "world": {
            "branch": {
                "center": _plain(cfg.world.branch.center),
                "axis": _plain(cfg.world.branch.axis),
                "radius": cfg.world.branch.radius,
            },
            "tether": _plain(dataclasses.asdict(cfg.world.tether)),
            "sim": _plain(dataclasses.asdict(cfg.world.config)),
        },
        "episode": _plain(dataclasses.asdict(cfg.episode)),
        "rewards": None if cfg.rewards is None else _plain(dataclasses.asdict(cfg.rewards)),
        "learner": _plain(dataclasses.asdict(cfg.learner)),
        "descent": _plain(dataclasses.asdict(cfg.descent)),
        "run": {
            "agent": cfg.agent,
            "seeds": list(cfg.seeds),
            "output_dir": cfg.output_dir,
            "train_steps": cfg.train_steps,
        },
    }


def save_run_config(cfg: RunConfig, out: str | Path | IO[str]) -> None:
    data = run_config_mapping(cfg)
    if data["rewards"] is None:
        del data["rewards"]
    if isinstance(out, (str, Path)):
        with open(out, "w") as fh:
            yaml.safe_dump(data, fh, sort_keys=True)
    else:
        yaml.safe_dump(data, out, sort_keys=True)


def run_config_hash(cfg: RunConfig) -> str:
    """16-hex digest over the canonical mapping, for artifact provenance."""
    blob = json.dumps(run_config_mapping(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def resolve_output_dir(output_dir: str | Path) -> Path:
    """Resolve where artifacts land.

    Relative directories are placed under $TETHERPERCH_OUTPUT_ROOT when
    that variable is set; absolute paths are honored as given.
    """
    path = Path(output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path
