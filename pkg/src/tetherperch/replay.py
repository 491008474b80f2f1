"""Uniform replay storage and the dual online/offline batch rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .env import Transition

ONLINE_DRAW_CAP = 10**6

OBS_DIM = 5
ACTION_DIM = 3


@dataclass(frozen=True)
class Batch:
    """Column-major slice of transitions ready for learner updates."""

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_observations: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.observations.shape[0]

    @staticmethod
    def concat(first: "Batch", second: "Batch") -> "Batch":
        return Batch(
            observations=np.concatenate([first.observations, second.observations]),
            actions=np.concatenate([first.actions, second.actions]),
            rewards=np.concatenate([first.rewards, second.rewards]),
            next_observations=np.concatenate(
                [first.next_observations, second.next_observations]
            ),
            dones=np.concatenate([first.dones, second.dones]),
        )


class ReplayBuffer:
    """Ring buffer of transitions with uniform seeded sampling.

    Stores flat float64 columns; oldest entries are overwritten once the
    buffer is full. Buffers can be frozen for offline demonstration data.
    """

    def __init__(
        self,
        capacity: int = 10**6,
        obs_dim: int = OBS_DIM,
        action_dim: int = ACTION_DIM,
    ):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.read_only = False
        self._size = 0
        self._cursor = 0
        alloc = min(self.capacity, 256)
        self._obs = np.empty((alloc, obs_dim))
        self._act = np.empty((alloc, action_dim))
        self._rew = np.empty(alloc)
        self._next = np.empty((alloc, obs_dim))
        self._done = np.empty(alloc)

    def __len__(self) -> int:
        return self._size

    def freeze(self) -> "ReplayBuffer":
        self.read_only = True
        return self

    def _grow_to(self, needed: int) -> None:
        current = self._obs.shape[0]
        if needed <= current:
            return
        new = min(self.capacity, max(needed, current * 2))
        for name in ("_obs", "_act", "_rew", "_next", "_done"):
            old = getattr(self, name)
            shape = (new,) + old.shape[1:]
            fresh = np.empty(shape)
            fresh[: self._size] = old[: self._size]
            setattr(self, name, fresh)

    def add(self, obs, action, reward, next_obs, done) -> None:
        if self.read_only:
            raise RuntimeError("buffer is read-only")
        self._grow_to(min(self.capacity, self._size + 1))
        i = self._cursor
        self._obs[i] = obs
        self._act[i] = action
        self._rew[i] = reward
        self._next[i] = next_obs
        self._done[i] = float(done)
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def add_transition(self, t: Transition) -> None:
        self.add(
            t.observation.as_vector(),
            np.asarray(t.action, dtype=float),
            t.reward,
            t.next_observation.as_vector(),
            t.done,
        )

    def extend(self, transitions: Iterable[Transition]) -> int:
        count = 0
        for t in transitions:
            self.add_transition(t)
            count += 1
        return count

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if n < 0:
            raise ValueError("sample size must be >= 0")
        if n > 0 and self._size == 0:
            raise RuntimeError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=n) if n else np.empty(0, dtype=int)
        return Batch(
            observations=self._obs[idx].copy(),
            actions=self._act[idx].copy(),
            rewards=self._rew[idx].copy(),
            next_observations=self._next[idx].copy(),
            dones=self._done[idx].copy(),
        )

    def as_batch(self) -> Batch:
        """Copy of the entire current contents, in storage order."""
        n = self._size
        return Batch(
            observations=self._obs[:n].copy(),
            actions=self._act[:n].copy(),
            rewards=self._rew[:n].copy(),
            next_observations=self._next[:n].copy(),
            dones=self._done[:n].copy(),
        )

    def extend_batch(self, batch: Batch) -> int:
        """Append every row of a batch; returns the number added."""
        for i in range(len(batch)):
            self.add(
                batch.observations[i],
                batch.actions[i],
                batch.rewards[i],
                batch.next_observations[i],
                batch.dones[i],
            )
        return len(batch)


def online_draw_count(batch_size: int, demo_weight: float) -> int:
    """Samples to pull from the online buffer for one mixed batch.

    The remainder of the batch comes from the offline demonstration buffer;
    the draw is floor(batch / weight) with a hard one-million cap.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if demo_weight < 1.0:
        raise ValueError("demo_weight must be >= 1")
    return min(int(math.floor(batch_size / demo_weight)), ONLINE_DRAW_CAP)


def sample_dual_batch(
    online: ReplayBuffer,
    offline: ReplayBuffer,
    batch_size: int,
    demo_weight: float,
    rng: np.random.Generator,
) -> Batch:
    """Mixed batch: capped floor share from online, the rest from demos.

    Falls back to a single source while the other buffer is still empty.
    """
    have_online = len(online) > 0
    have_offline = len(offline) > 0
    if not have_online and not have_offline:
        raise RuntimeError("no data: both replay buffers are empty")
    if not have_offline:
        return online.sample(batch_size, rng)
    if not have_online:
        return offline.sample(batch_size, rng)
    n_online = online_draw_count(batch_size, demo_weight)
    return Batch.concat(
        online.sample(n_online, rng), offline.sample(batch_size - n_online, rng)
    )
