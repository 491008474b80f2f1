"""One-dimensional target-reaching environment for learner diagnostics.

The state is a point on a line, the action is the next position inside
[-2, 2], and the reward is the negative distance from the origin after
the move. Optimal behavior is obvious (always pick 0), episodes are ten
steps, and a full training run takes seconds, which makes this the right
place to check that the learner actually learns before paying for tether
physics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Transition

__all__ = ["ToyEnv", "ToyObservation", "optimal_toy_transitions"]


@dataclass(frozen=True)
class ToyObservation:
    position: float

    def as_vector(self) -> np.ndarray:
        return np.array([self.position])


@dataclass(frozen=True)
class _ToyEpisode:
    max_steps: int = 10


class ToyEnv:
    """Line world: action is the next position, reward its distance cost."""

    obs_dim = 1
    action_dim = 1
    box_center = np.zeros(1)
    box_half = np.full(1, 2.0)

    def __init__(self, max_steps: int = 10):
        self.episode = _ToyEpisode(max_steps=max_steps)
        self.position = 0.0
        self.step_index = 0
        self.done = True

    def reset(self, seed: int | None = None) -> ToyObservation:
        rng = np.random.default_rng(seed)
        self.position = float(rng.uniform(-2.0, 2.0))
        self.step_index = 0
        self.done = False
        return ToyObservation(self.position)

    def step(self, action) -> Transition:
        if self.done:
            raise RuntimeError("episode is finished; call reset() first")
        obs = ToyObservation(self.position)
        a = float(np.clip(np.asarray(action, dtype=float).reshape(1)[0], -2.0, 2.0))
        self.position = a
        self.step_index += 1
        self.done = self.step_index >= self.episode.max_steps
        return Transition(
            observation=obs,
            action=np.array([a]),
            reward=-abs(self.position),
            next_observation=ToyObservation(self.position),
            done=self.done,
            phase="toy",
        )


def optimal_toy_transitions(episodes: int = 2, seed: int = 0) -> list[Transition]:
    """Scripted demonstrations that always jump straight to the origin."""
    env = ToyEnv()
    out: list[Transition] = []
    for k in range(episodes):
        env.reset(seed + k)
        done = False
        while not done:
            t = env.step(np.zeros(1))
            out.append(t)
            done = t.done
    return out
