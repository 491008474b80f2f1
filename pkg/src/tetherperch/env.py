"""Episode layer over the physics world.

Actions are absolute 3-D waypoints (or position offsets behind a config
switch), clamped to the workspace box around the branch.  Observations are
(quad position, wrap estimate, episode progress).  The wrap estimate
accumulates the weight's angle around the branch axis substep by substep so
seam crossings never alias.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import IO, Iterable, Iterator

import numpy as np

from . import geometry
from .rewards import RewardConstants, RewardInputs, hang_reward, phase_of, total_reward
from .world import BranchGeometry, World, last_third_branch_distance, step_physics

__all__ = [
    "EpisodeConfig",
    "Observation",
    "PerchEnv",
    "Transition",
    "WrapTracker",
    "read_transitions",
    "start_tracker",
    "transition_from_dict",
    "transition_to_dict",
    "update_wrap",
    "write_transitions",
]

PHASE_ABORTED = "aborted"


@dataclass(frozen=True)
class Observation:
    quad_position: np.ndarray
    wrap_count: float
    progress: float

    def as_vector(self) -> np.ndarray:
        """Flat [x, y, z, w, eta] array for function approximators."""
        return np.concatenate([self.quad_position, [self.wrap_count, self.progress]])


@dataclass(frozen=True)
class WrapTracker:
    """Accumulated weight angle around the branch axis.

    ``previous_angle`` is kept in (-pi, pi]; every update adds the seam-safe
    increment to ``accumulated_angle``.  ``degenerate_count`` counts updates
    skipped because the weight sat on the branch axis, where the angle is
    undefined.
    """

    accumulated_angle: float = 0.0
    previous_angle: float = 0.0
    degenerate_count: int = 0

    @property
    def wrap_count(self) -> float:
        return abs(self.accumulated_angle) / geometry.TWO_PI


def start_tracker(weight_position, branch: BranchGeometry) -> WrapTracker:
    """Tracker seeded with the weight's current angle and zero accumulation."""
    angle = geometry.angle_about_axis(
        np.asarray(weight_position, dtype=float), branch.center, branch.axis
    )
    return WrapTracker(accumulated_angle=0.0, previous_angle=angle)


def update_wrap(
    tracker: WrapTracker, weight_position, branch: BranchGeometry
) -> tuple[WrapTracker, float]:
    """Advance the tracker by one sample of the weight position.

    Returns the new tracker and the wrap count |accumulated| / 2pi.  The
    per-sample increment is normalized into [-pi, pi], so samples must come
    often enough that the weight never moves half a revolution between them.
    """
    p = np.asarray(weight_position, dtype=float)
    if geometry.radial_distance(p, branch.center, branch.axis) < 1e-9:
        tracker = replace(tracker, degenerate_count=tracker.degenerate_count + 1)
        return tracker, tracker.wrap_count
    angle = geometry.angle_about_axis(p, branch.center, branch.axis)
    delta = geometry.wrap_to_pi(angle - tracker.previous_angle)
    tracker = WrapTracker(
        accumulated_angle=tracker.accumulated_angle + delta,
        previous_angle=angle,
        degenerate_count=tracker.degenerate_count,
    )
    return tracker, tracker.wrap_count


@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int = 300
    substeps_per_action: int = 60
    workspace_half_extent: float = 5.0
    start_position: tuple[float, float, float] = (2.0, 0.0, 2.5)
    hang_speed_threshold: float = 0.2
    early_stop_penalty: float = -10.0
    offset_actions: bool = False
    start_jitter: float = 0.0

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.substeps_per_action < 1:
            raise ValueError("substeps_per_action must be at least 1")


@dataclass(frozen=True)
class Transition:
    observation: Observation
    action: np.ndarray
    reward: float
    next_observation: Observation
    done: bool
    phase: str


def _obs_to_dict(obs: Observation) -> dict:
    return {
        "pos": [float(v) for v in obs.quad_position],
        "w": float(obs.wrap_count),
        "eta": float(obs.progress),
    }


def _obs_from_dict(d: dict) -> Observation:
    return Observation(
        quad_position=np.array(d["pos"], dtype=float),
        wrap_count=float(d["w"]),
        progress=float(d["eta"]),
    )


def transition_to_dict(t: Transition) -> dict:
    return {
        "obs": _obs_to_dict(t.observation),
        "act": [float(v) for v in t.action],
        "rew": float(t.reward),
        "next_obs": _obs_to_dict(t.next_observation),
        "done": bool(t.done),
        "phase": t.phase,
    }


def transition_from_dict(d: dict) -> Transition:
    return Transition(
        observation=_obs_from_dict(d["obs"]),
        action=np.array(d["act"], dtype=float),
        reward=float(d["rew"]),
        next_observation=_obs_from_dict(d["next_obs"]),
        done=bool(d["done"]),
        phase=str(d["phase"]),
    )


def write_transitions(out: str | IO[str], transitions: Iterable[Transition]) -> int:
    """Serialize transitions as JSON lines; returns the number written."""
    close = False
    if isinstance(out, str):
        handle = open(out, "w")
        close = True
    else:
        handle = out
    count = 0
    try:
        for t in transitions:
            handle.write(json.dumps(transition_to_dict(t)) + "\n")
            count += 1
    finally:
        if close:
            handle.close()
    return count


def read_transitions(src: str | IO[str]) -> Iterator[Transition]:
    close = False
    if isinstance(src, str):
        handle = open(src)
        close = True
    else:
        handle = src
    try:
        for line in handle:
            line = line.strip()
            if line:
                yield transition_from_dict(json.loads(line))
    finally:
        if close:
            handle.close()


class PerchEnv:
    """Perching episode: waypoint actions in, shaped rewards and phases out.

    Not safe for concurrent stepping; run one instance per worker.
    """

    def __init__(
        self,
        world: World | None = None,
        episode: EpisodeConfig | None = None,
        constants: RewardConstants | None = None,
    ):
        self.world = world if world is not None else World()
        self.episode = episode if episode is not None else EpisodeConfig()
        if constants is None:
            constants = RewardConstants().with_end_waypoint(
                self.world.branch.center + np.array([0.35, 0.0, 0.35])
            )
        self.constants = constants
        self._params = self.world.packed_params()
        self._inv_mass = self.world.tether.inverse_masses()
        self.state = None
        self.tracker = None
        self.step_index = 0
        self.contact_streak = 0
        self.done = True
        self.degenerate_wrap_steps = 0

    def reset(self, seed: int | None = None) -> Observation:
        start = np.array(self.episode.start_position, dtype=float)
        if self.episode.start_jitter > 0.0:
            rng = np.random.default_rng(seed)
            start = start + rng.uniform(
                -self.episode.start_jitter, self.episode.start_jitter, size=3
            )
        self.state = self.world.initial_state(start)
        self.tracker = start_tracker(self.state.weight_position, self.world.branch)
        self.step_index = 0
        self.contact_streak = 0
        self.done = False
        self.degenerate_wrap_steps = 0
        return self._observation()

    def _observation(self) -> Observation:
        return Observation(
            quad_position=self.state.quad_position.copy(),
            wrap_count=self.tracker.wrap_count,
            progress=self.step_index / self.episode.max_steps,
        )

    def clamp_action(self, action) -> np.ndarray:
        """Resolve an action to an absolute waypoint inside the workspace box."""
        a = np.asarray(action, dtype=float).reshape(3)
        if self.episode.offset_actions:
            a = self.state.quad_position + a
        center = self.world.branch.center
        half = self.episode.workspace_half_extent
        return np.clip(a, center - half, center + half)

    def step(self, action) -> Transition:
        if self.done:
            raise RuntimeError("episode is finished; call reset() first")
        obs = self._observation()
        waypoint = self.clamp_action(action)

        contact = False
        diverged = False
        for _ in range(self.episode.substeps_per_action):
            info = step_physics(
                self.state, waypoint, self.world, params=self._params, inv_mass=self._inv_mass
            )
            before = self.tracker.degenerate_count
            self.tracker, _ = update_wrap(
                self.tracker, self.state.weight_position, self.world.branch
            )
            self.degenerate_wrap_steps += self.tracker.degenerate_count - before
            contact = contact or info.contact
            if info.diverged:
                diverged = True
                break

        self.step_index += 1
        self.contact_streak = self.contact_streak + 1 if contact else 0
        next_obs = self._observation()

        if diverged:
            self.done = True
            return Transition(
                observation=obs,
                action=waypoint,
                reward=self.episode.early_stop_penalty,
                next_observation=next_obs,
                done=True,
                phase=PHASE_ABORTED,
            )

        wrap = next_obs.wrap_count
        phase = phase_of(wrap)
        reward = total_reward(self._reward_inputs(contact, wrap), self.constants)
        done = False

        offset = self.state.quad_position - self.world.branch.center
        if float(np.max(np.abs(offset))) > self.episode.workspace_half_extent:
            reward = self.episode.early_stop_penalty
            done = True
        elif wrap >= 1.0 and self._hang_success():
            done = True
        if self.step_index >= self.episode.max_steps:
            done = True

        self.done = done
        return Transition(
            observation=obs,
            action=waypoint,
            reward=reward,
            next_observation=next_obs,
            done=done,
            phase=phase,
        )

    def _reward_inputs(self, contact: bool, wrap: float) -> RewardInputs:
        branch = self.world.branch
        quad = self.state.quad_position
        return RewardInputs(
            quad_position=quad.copy(),
            target_center=branch.center.copy(),
            target_distance=float(
                np.linalg.norm(quad - np.asarray(self.constants.end_waypoint))
            ),
            branch_distance=float(np.linalg.norm(quad - branch.center)),
            tail_branch_distance=last_third_branch_distance(self.state.link_positions, branch),
            contact=contact,
            contact_streak=self.contact_streak,
            wrap=wrap,
            quad_speed=float(np.linalg.norm(self.state.quad_velocity)),
            tether_length=self.world.tether.total_length,
            branch_radius=branch.radius,
            branch_axis=tuple(float(v) for v in branch.axis),
        )

    def _hang_success(self) -> bool:
        speed = float(np.linalg.norm(self.state.quad_velocity))
        if speed >= self.episode.hang_speed_threshold:
            return False
        in_zone = hang_reward(
            self.state.quad_position, 0.0, self.world.branch, self.world.tether.total_length
        )
        return in_zone == 1.0
