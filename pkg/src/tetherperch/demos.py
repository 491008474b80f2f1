"""Scripted demonstration sets and their JSON-lines storage format.

Human-piloted recordings are not available here, so three fixed waypoint
scripts stand in for them: an optimal wrap ("A"), a suboptimal pass that
touches the branch without completing the wrap ("A-"), and an erratic
trajectory that never makes contact ("F"). Each generated trajectory is
rechecked against its class invariant before it is accepted.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import IO, Callable, Sequence

import numpy as np

from .env import PerchEnv, Transition, transition_from_dict, transition_to_dict
from .replay import ReplayBuffer

log = logging.getLogger(__name__)

DEMO_FORMAT_VERSION = 1

KIND_OPTIMAL = "A"
KIND_SUBOPTIMAL = "A-"
KIND_FAILED = "F"
DEMO_KINDS = (KIND_OPTIMAL, KIND_SUBOPTIMAL, KIND_FAILED)

# trajectories per kind when composing the published agent configurations
SET_SIZES = {KIND_OPTIMAL: 2, KIND_SUBOPTIMAL: 3, KIND_FAILED: 1}

AGENT_DEMO_KINDS = {
    "sac": (),
    "sacfd-a": (KIND_OPTIMAL,),
    "sacfd-aa": (KIND_OPTIMAL, KIND_SUBOPTIMAL),
    "sacfd-aaf": (KIND_OPTIMAL, KIND_SUBOPTIMAL, KIND_FAILED),
}

MAX_GENERATION_ATTEMPTS = 20

PROVENANCE = "scripted waypoint generator (no human piloting)"


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: _jsonable(getattr(value, f.name))
            for f in dataclasses.fields(value)
        }
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def sim_config_hash(env: PerchEnv) -> str:
    """Digest of everything that determines rewards and dynamics.

    Stored in demo headers so sets generated under a different world,
    episode, or reward configuration are refused instead of silently
    replayed with the wrong rewards.
    """
    signature = {
        "branch": _jsonable(env.world.branch),
        "tether": _jsonable(env.world.tether),
        "sim": _jsonable(env.world.config),
        "episode": _jsonable(env.episode),
        "rewards": _jsonable(env.constants),
    }
    blob = json.dumps(signature, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Waypoint scripts

Script = Callable[[int, np.random.Generator], np.ndarray]


def _legs(branch_center, scale, rel_legs, rel_final) -> Script:
    b = np.asarray(branch_center, dtype=float)
    legs = [(until, b + scale * np.asarray(rel, dtype=float)) for until, rel in rel_legs]
    final = b + scale * np.asarray(rel_final, dtype=float)

    def waypoint(step: int, rng: np.random.Generator) -> np.ndarray:
        for until, point in legs:
            if step < until:
                return point
        return final

    return waypoint


def optimal_script(branch_center, scale: float = 1.0) -> Script:
    """Settle below and beside the branch, sweep past it, pull up, hang."""
    return _legs(
        branch_center,
        scale,
        [
            (8, (1.0, 0.0, -0.3)),
            (10, (-0.8, 0.0, 0.2)),
            (13, (-0.8, 0.0, 1.3)),
        ],
        (-0.35, 0.0, -0.55),
    )


def suboptimal_script(branch_center, scale: float = 1.0) -> Script:
    """Creep past the branch slowly: the tether touches, the wrap stalls."""
    return _legs(
        branch_center,
        scale,
        [
            (8, (1.0, 0.0, -0.3)),
            (12, (0.45, 0.0, 0.1)),
            (16, (0.0, 0.0, 0.12)),
        ],
        (-0.15, 0.0, 0.05),
    )


def failed_script(branch_center, scale: float = 1.0) -> Script:
    """Bounded random jitter well away from the branch; never contacts."""
    center = np.asarray(branch_center, dtype=float) + scale * np.array([2.2, 0.0, 0.8])
    radius = 0.5 * scale

    def waypoint(step: int, rng: np.random.Generator) -> np.ndarray:
        return center + rng.uniform(-radius, radius, size=3)

    return waypoint


_SCRIPTS = {
    KIND_OPTIMAL: optimal_script,
    KIND_SUBOPTIMAL: suboptimal_script,
    KIND_FAILED: failed_script,
}


def satisfies_invariant(
    kind: str, transitions: Sequence[Transition], contact_streaks: Sequence[int]
) -> bool:
    """Class membership check for one generated trajectory."""
    if not transitions:
        return False
    final = transitions[-1]
    final_wrap = final.next_observation.wrap_count
    if kind == KIND_OPTIMAL:
        return final_wrap >= 1.0 and final.phase == "IV" and final.done
    if kind == KIND_SUBOPTIMAL:
        return max(contact_streaks) >= 1 and final_wrap < 1.0
    if kind == KIND_FAILED:
        return max(contact_streaks) == 0
    raise ValueError(f"unknown demo kind: {kind!r}")


def _roll_script(
    env: PerchEnv, script: Script, seed: int
) -> tuple[list[Transition], list[int]]:
    env.reset(seed)
    rng = np.random.default_rng(seed)
    transitions: list[Transition] = []
    streaks: list[int] = []
    for step in range(env.episode.max_steps):
        t = env.step(script(step, rng))
        transitions.append(t)
        streaks.append(env.contact_streak)
        if t.done:
            break
    return transitions, streaks


def _generate_checked(
    kind: str, env: PerchEnv, seed: int
) -> tuple[list[Transition], list[int], int]:
    if kind not in _SCRIPTS:
        raise ValueError(f"unknown demo kind: {kind!r}")
    scale = env.world.tether.total_length
    script = _SCRIPTS[kind](env.world.branch.center, scale)
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        transitions, streaks = _roll_script(env, script, seed + attempt)
        if satisfies_invariant(kind, transitions, streaks):
            return transitions, streaks, seed + attempt
        log.warning(
            "demo kind %s seed %d violated its invariant; retrying", kind, seed + attempt
        )
    raise RuntimeError(
        f"could not generate a valid {kind!r} demo in {MAX_GENERATION_ATTEMPTS} attempts"
    )


def generate_demo(kind: str, env: PerchEnv, seed: int) -> list[Transition]:
    """One trajectory of the requested class, regenerated until it checks out."""
    transitions, _, _ = _generate_checked(kind, env, seed)
    return transitions


@dataclass
class DemoSet:
    """A labeled batch of same-class demonstration trajectories."""

    label: str
    trajectories: list[list[Transition]]
    provenance: str = PROVENANCE
    contact_streaks: list[list[int]] = field(default_factory=list)
    config_hash: str = ""
    seeds: list[int] = field(default_factory=list)

    @property
    def transition_count(self) -> int:
        return sum(len(t) for t in self.trajectories)


def make_demo_set(
    kind: str, env: PerchEnv, seed: int = 0, count: int | None = None
) -> DemoSet:
    """Generate the standard-sized set for a kind (override with ``count``)."""
    n = count if count is not None else SET_SIZES[kind]
    trajectories = []
    streaks = []
    seeds = []
    for i in range(n):
        t, s, used = _generate_checked(kind, env, seed + 1000 * i)
        trajectories.append(t)
        streaks.append(s)
        seeds.append(used)
    return DemoSet(
        label=kind,
        trajectories=trajectories,
        contact_streaks=streaks,
        config_hash=sim_config_hash(env),
        seeds=seeds,
    )


# ---------------------------------------------------------------------------
# JSON-lines storage


def save_demo_set(demo_set: DemoSet, out: str | IO[str]) -> int:
    """Write header plus one line per transition; returns lines written."""
    if isinstance(out, str):
        with open(out, "w") as fh:
            return save_demo_set(demo_set, fh)
    header = {
        "version": DEMO_FORMAT_VERSION,
        "label": demo_set.label,
        "config_hash": demo_set.config_hash,
        "provenance": demo_set.provenance,
        "seeds": list(demo_set.seeds),
    }
    out.write(json.dumps(header) + "\n")
    lines = 1
    for i, trajectory in enumerate(demo_set.trajectories):
        streaks = (
            demo_set.contact_streaks[i]
            if i < len(demo_set.contact_streaks)
            else [0] * len(trajectory)
        )
        for t, streak in zip(trajectory, streaks):
            row = {"episode": i, "contact_streak": int(streak)}
            row.update(transition_to_dict(t))
            out.write(json.dumps(row) + "\n")
            lines += 1
    return lines


def _parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line 1: malformed demo header ({exc})") from None
    if not isinstance(header, dict) or "version" not in header:
        raise ValueError("line 1: demo header missing 'version'")
    if header["version"] != DEMO_FORMAT_VERSION:
        raise ValueError(
            f"unsupported demo format version {header['version']!r}; "
            f"this build reads version {DEMO_FORMAT_VERSION}"
        )
    return header


def load_demo_set(src: str | IO[str]) -> DemoSet:
    """Parse a demo file back into trajectories grouped by episode."""
    if isinstance(src, str):
        with open(src) as fh:
            return load_demo_set(fh)
    first = src.readline()
    if not first.strip():
        log.warning("demo file is empty")
        return DemoSet(label="", trajectories=[], config_hash="", seeds=[])
    header = _parse_header(first)
    by_episode: dict[int, list[Transition]] = {}
    streaks: dict[int, list[int]] = {}
    for lineno, raw in enumerate(src, start=2):
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
            episode = int(row["episode"])
            streak = int(row["contact_streak"])
            transition = transition_from_dict(row)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"line {lineno}: malformed demo record ({exc})") from None
        by_episode.setdefault(episode, []).append(transition)
        streaks.setdefault(episode, []).append(streak)
    order = sorted(by_episode)
    return DemoSet(
        label=header.get("label", ""),
        trajectories=[by_episode[i] for i in order],
        provenance=header.get("provenance", ""),
        contact_streaks=[streaks[i] for i in order],
        config_hash=header.get("config_hash", ""),
        seeds=[int(v) for v in header.get("seeds", [])],
    )


def load_transitions(
    src, expected_config_hash: str | None = None
) -> ReplayBuffer:
    """Load one demo file (or a sequence of them) into a frozen buffer."""
    sources = src if isinstance(src, (list, tuple)) else [src]
    buffer = ReplayBuffer()
    total = 0
    for one in sources:
        demo_set = load_demo_set(one)
        if (
            expected_config_hash is not None
            and demo_set.config_hash
            and demo_set.config_hash != expected_config_hash
        ):
            raise ValueError(
                "demo file was generated under a different configuration "
                f"(hash {demo_set.config_hash} != {expected_config_hash}); "
                "refusing to load"
            )
        for trajectory in demo_set.trajectories:
            total += buffer.extend(trajectory)
    if total == 0:
        log.warning("loaded an empty demonstration buffer")
    return buffer.freeze()


def replay_rewards(env: PerchEnv, transitions: Sequence[Transition], seed: int) -> list[float]:
    """Re-run stored actions from the same seed; rewards must reproduce."""
    env.reset(seed)
    return [env.step(t.action).reward for t in transitions]
