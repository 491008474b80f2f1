"""Soft actor-critic learner with optional demonstration replay.

The agent keeps two replay buffers: ``online`` filled by its own rollouts
and ``offline`` holding demonstration transitions. Every update draws a
dual batch whose online share is ``batch_size // demo_weight`` (capped),
so demonstrations keep a fixed presence in the gradient signal instead of
being washed out as online data accumulates. With an empty offline buffer
this reduces to plain soft actor-critic.

All gradients are computed by hand through :mod:`tetherperch.nets`; the
finite-difference tests in the suite pin them down.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import IO, Callable

import numpy as np

from .env import Observation, PerchEnv
from .nets import MLP, Adam, policy_backward, policy_forward, polyak_update
from .replay import Batch, ReplayBuffer, sample_dual_batch

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

__all__ = [
    "CHECKPOINT_VERSION",
    "SACAgent",
    "SACConfig",
    "TrainResult",
    "TrainingDivergence",
    "agent_config_hash",
    "load_agent",
]


class TrainingDivergence(RuntimeError):
    """Raised when an update produces a non-finite loss.

    ``checkpoint`` carries the agent state from just before the bad
    update so the caller can dump it for post-mortem inspection.
    """

    def __init__(self, message: str, checkpoint: dict):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class SACConfig:
    discount: float = 0.99
    polyak: float = 0.005
    learning_rate: float = 3e-4
    batch_size: int = 256
    demo_weight: int = 4
    target_entropy: float | None = None
    buffer_capacity: int = 10**6
    hidden_sizes: tuple[int, ...] = (64, 64)
    start_steps: int = 500
    update_after: int = 500
    update_every: int = 1
    validation_interval: int = 2500
    validation_episodes: int = 3
    pretrain_steps: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if not 0.0 < self.polyak <= 1.0:
            raise ValueError("polyak must lie in (0, 1]")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.demo_weight < 1:
            raise ValueError("demo_weight must be at least 1")
        if self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be at least 1")
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden_sizes must be positive")
        if self.validation_interval < 1:
            raise ValueError("validation_interval must be at least 1")
        if self.validation_episodes < 1:
            raise ValueError("validation_episodes must be at least 1")


def agent_config_hash(
    config: SACConfig,
    obs_dim: int,
    action_dim: int,
    box_center: np.ndarray,
    box_half: np.ndarray,
) -> str:
    """Stable 16-hex digest identifying the learner setup."""
    import hashlib

    payload = {
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(config).items()},
        "obs_dim": int(obs_dim),
        "action_dim": int(action_dim),
        "box_center": [float(v) for v in np.asarray(box_center).ravel()],
        "box_half": [float(v) for v in np.asarray(box_half).ravel()],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class TrainResult:
    """Learning curve data collected by :meth:`SACAgent.train`."""

    episode_steps: list[int] = field(default_factory=list)
    episode_rewards: list[float] = field(default_factory=list)
    validation_steps: list[int] = field(default_factory=list)
    validation_returns: list[float] = field(default_factory=list)
    total_env_steps: int = 0
    updates: int = 0


class SACAgent:
    """Twin-critic soft actor-critic over a box action space."""

    def __init__(
        self,
        obs_dim: int,
        action_dim: int,
        box_center,
        box_half,
        config: SACConfig | None = None,
        seed: int = 0,
    ):
        self.config = config if config is not None else SACConfig()
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        self.box_center = np.asarray(box_center, dtype=float).reshape(action_dim)
        self.box_half = np.asarray(box_half, dtype=float).reshape(action_dim)
        if np.any(self.box_half <= 0.0):
            raise ValueError("box_half must be positive on every axis")
        self.rng = np.random.default_rng(seed)

        cfg = self.config
        hidden = list(cfg.hidden_sizes)
        self.actor = MLP([obs_dim, *hidden, 2 * action_dim], self.rng)
        self.critic1 = MLP([obs_dim + action_dim, *hidden, 1], self.rng)
        self.critic2 = MLP([obs_dim + action_dim, *hidden, 1], self.rng)
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()

        self.log_alpha = np.zeros(1)
        self.target_entropy = (
            cfg.target_entropy if cfg.target_entropy is not None else -float(action_dim)
        )

        lr = cfg.learning_rate
        self.actor_opt = Adam(self.actor.parameters(), lr=lr)
        self.critic1_opt = Adam(self.critic1.parameters(), lr=lr)
        self.critic2_opt = Adam(self.critic2.parameters(), lr=lr)
        self.alpha_opt = Adam([self.log_alpha], lr=lr)

        self.online = ReplayBuffer(cfg.buffer_capacity, obs_dim, action_dim)
        self.offline = ReplayBuffer(cfg.buffer_capacity, obs_dim, action_dim)
        self.best_validation: float | None = None
        self.update_count = 0

    # -- acting --------------------------------------------------------------

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def act(self, obs_vector, deterministic: bool = False) -> np.ndarray:
        obs = np.asarray(obs_vector, dtype=float).reshape(1, self.obs_dim)
        eps = None if deterministic else self.rng.standard_normal((1, self.action_dim))
        head = policy_forward(
            self.actor, obs, self.box_center, self.box_half, eps=eps, deterministic=deterministic
        )
        return head["actions"][0]

    def policy(self, deterministic: bool = True) -> Callable[[Observation], np.ndarray]:
        """Adapter for episode runners that pass Observation objects."""

        def _policy(obs: Observation) -> np.ndarray:
            return self.act(obs.as_vector(), deterministic=deterministic)

        return _policy

    def random_action(self) -> np.ndarray:
        return self.box_center + self.box_half * self.rng.uniform(-1.0, 1.0, self.action_dim)

    # -- learning ------------------------------------------------------------

    def critic_targets(self, batch: Batch) -> np.ndarray:
        """Bootstrap targets: r + discount * (1 - done) * soft value of next state."""
        eps = self.rng.standard_normal((len(batch), self.action_dim))
        head = policy_forward(
            self.actor, batch.next_observations, self.box_center, self.box_half, eps=eps
        )
        nxt = np.concatenate([batch.next_observations, head["actions"]], axis=1)
        q1 = self.target1(nxt)[:, 0]
        q2 = self.target2(nxt)[:, 0]
        soft_value = np.minimum(q1, q2) - self.alpha * head["log_probs"]
        return batch.rewards + self.config.discount * (1.0 - batch.dones) * soft_value

    def _critic_update(self, net: MLP, opt: Adam, inputs: np.ndarray, targets: np.ndarray) -> float:
        q, cache = net.forward(inputs)
        q = q[:, 0]
        errors = q - targets
        loss = float(np.mean(errors**2))
        grad_q = (2.0 / len(targets)) * errors
        grads, _ = net.backward(cache, grad_q[:, None])
        opt.step(net.parameters(), grads)
        return loss

    def _actor_update(self, observations: np.ndarray) -> tuple[float, np.ndarray]:
        n = observations.shape[0]
        eps = self.rng.standard_normal((n, self.action_dim))
        head = policy_forward(self.actor, observations, self.box_center, self.box_half, eps=eps)
        inputs = np.concatenate([observations, head["actions"]], axis=1)
        q1, cache1 = self.critic1.forward(inputs)
        q2, cache2 = self.critic2.forward(inputs)
        q1 = q1[:, 0]
        q2 = q2[:, 0]
        q_min = np.minimum(q1, q2)
        loss = float(np.mean(self.alpha * head["log_probs"] - q_min))

        # dL/da comes from whichever critic realizes the minimum, per sample
        pick1 = (q1 <= q2).astype(float)
        scale = -1.0 / n
        _, din1 = self.critic1.backward(cache1, (scale * pick1)[:, None])
        _, din2 = self.critic2.backward(cache2, (scale * (1.0 - pick1))[:, None])
        d_actions = din1[:, self.obs_dim :] + din2[:, self.obs_dim :]
        d_log_probs = np.full(n, self.alpha / n)

        grads = policy_backward(self.actor, head, d_actions, d_log_probs)
        self.actor_opt.step(self.actor.parameters(), grads)
        return loss, head["log_probs"]

    def _alpha_update(self, log_probs: np.ndarray) -> float:
        gap = float(np.mean(log_probs) + self.target_entropy)
        loss = -float(self.log_alpha[0]) * gap
        self.alpha_opt.step([self.log_alpha], [np.array([-gap])])
        return loss

    def update_step(self, batch: Batch) -> dict[str, float]:
        """One gradient step on critics, actor, and temperature.

        Raises :class:`TrainingDivergence` (with the pre-update state
        attached) if any loss comes out non-finite.
        """
        snapshot = self._state_snapshot()
        targets = self.critic_targets(batch)
        inputs = np.concatenate([batch.observations, batch.actions], axis=1)
        loss_c1 = self._critic_update(self.critic1, self.critic1_opt, inputs, targets)
        loss_c2 = self._critic_update(self.critic2, self.critic2_opt, inputs, targets)
        loss_actor, log_probs = self._actor_update(batch.observations)
        loss_alpha = self._alpha_update(log_probs)

        losses = {
            "critic1": loss_c1,
            "critic2": loss_c2,
            "actor": loss_actor,
            "alpha": loss_alpha,
        }
        if not all(math.isfinite(v) for v in losses.values()):
            bad = ", ".join(f"{k}={v}" for k, v in losses.items())
            raise TrainingDivergence(
                f"training divergence: non-finite loss ({bad})",
                self.checkpoint_blob(snapshot=snapshot),
            )

        polyak_update(self.target1, self.critic1, self.config.polyak)
        polyak_update(self.target2, self.critic2, self.config.polyak)
        self.update_count += 1
        return losses

    def update_from_buffers(self, rng: np.random.Generator | None = None) -> dict[str, float]:
        batch = sample_dual_batch(
            self.online,
            self.offline,
            self.config.batch_size,
            self.config.demo_weight,
            rng if rng is not None else self.rng,
        )
        return self.update_step(batch)

    def load_demos(self, transitions: ReplayBuffer | Batch) -> int:
        """Copy demonstration data into the offline buffer; returns the count."""
        batch = transitions.as_batch() if isinstance(transitions, ReplayBuffer) else transitions
        return self.offline.extend_batch(batch)

    def pretrain(self, steps: int, seed: int = 0) -> int:
        """Offline-only updates before any environment interaction.

        With an empty offline buffer this warns and does nothing; with
        ``steps=0`` the parameters are left untouched. Returns the number
        of updates performed. Deterministic for a fixed seed.
        """
        if steps < 0:
            raise ValueError("steps must be nonnegative")
        if len(self.offline) == 0:
            if steps > 0:
                warnings.warn("pretrain skipped: offline buffer is empty", stacklevel=2)
            return 0
        rng = np.random.default_rng(seed)
        for _ in range(steps):
            batch = self.offline.sample(self.config.batch_size, rng)
            self.update_step(batch)
        return steps

    # -- checkpointing ---------------------------------------------------------

    def _state_snapshot(self) -> dict:
        """Cheap numpy copy of everything a checkpoint needs."""
        return {
            "params": {
                "actor": self.actor.get_flat(),
                "critic1": self.critic1.get_flat(),
                "critic2": self.critic2.get_flat(),
                "target1": self.target1.get_flat(),
                "target2": self.target2.get_flat(),
            },
            "log_alpha": float(self.log_alpha[0]),
            "best_validation": self.best_validation,
            "update_count": self.update_count,
        }

    def checkpoint_blob(self, snapshot: dict | None = None) -> dict:
        if snapshot is None:
            snapshot = self._state_snapshot()
        cfg = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self.config).items()}
        return {
            "version": CHECKPOINT_VERSION,
            "kind": "sac-agent",
            "config": cfg,
            "config_hash": agent_config_hash(
                self.config, self.obs_dim, self.action_dim, self.box_center, self.box_half
            ),
            "obs_dim": self.obs_dim,
            "action_dim": self.action_dim,
            "box_center": self.box_center.tolist(),
            "box_half": self.box_half.tolist(),
            "layer_sizes": {
                "actor": list(self.actor.sizes),
                "critic": list(self.critic1.sizes),
            },
            "params": {k: v.tolist() for k, v in snapshot["params"].items()},
            "log_alpha": snapshot["log_alpha"],
            "best_validation": snapshot["best_validation"],
            "update_count": snapshot["update_count"],
        }

    def save_checkpoint(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.checkpoint_blob(), fh)

    def restore(self, blob: dict) -> None:
        if blob.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {blob.get('version')!r}")
        expected = agent_config_hash(
            self.config, self.obs_dim, self.action_dim, self.box_center, self.box_half
        )
        if blob["config_hash"] != expected:
            raise ValueError(
                "refusing checkpoint: config hash "
                f"{blob['config_hash']} does not match agent {expected}"
            )
        params = blob["params"]
        self.actor.set_flat(np.array(params["actor"]))
        self.critic1.set_flat(np.array(params["critic1"]))
        self.critic2.set_flat(np.array(params["critic2"]))
        self.target1.set_flat(np.array(params["target1"]))
        self.target2.set_flat(np.array(params["target2"]))
        self.log_alpha[0] = blob["log_alpha"]
        self.best_validation = blob["best_validation"]
        self.update_count = int(blob.get("update_count", 0))

    # -- validation and the training loop ---------------------------------------

    def validate(self, env: PerchEnv, seed: int = 0) -> float:
        """Mean deterministic-policy return over the configured episode count."""
        total = 0.0
        for k in range(self.config.validation_episodes):
            obs = env.reset(seed + k)
            ep = 0.0
            for _ in range(env.episode.max_steps):
                t = env.step(self.act(obs.as_vector(), deterministic=True))
                ep += t.reward
                obs = t.next_observation
                if t.done:
                    break
            total += ep
        return total / self.config.validation_episodes

    def validate_and_checkpoint(self, env: PerchEnv, path, seed: int = 0) -> tuple[float, bool]:
        """Run validation; persist only when the score beats the best so far.

        The first call always persists so a checkpoint exists no matter
        how training goes. Returns (score, whether the file was written).
        """
        score = self.validate(env, seed=seed)
        improved = self.best_validation is None or score > self.best_validation
        if improved:
            self.best_validation = score
            self.save_checkpoint(path)
        return score, improved

    def train(
        self,
        env: PerchEnv,
        total_steps: int,
        *,
        seed: int = 0,
        log_stream: IO[str] | None = None,
        checkpoint_path=None,
        divergence_dump_path=None,
        stop_threshold: float | None = None,
        validation_env: PerchEnv | None = None,
    ) -> TrainResult:
        """Interleave acting, replay, updates, and periodic validation.

        Writes CSV rows (env_step, episode_reward, validation_return) as
        they become available; episode rows leave the validation column
        empty and vice versa. ``total_steps=0`` yields an empty curve but
        still writes the initial checkpoint. When ``stop_threshold`` is
        given, training ends at the first validation scoring at or above
        it. On divergence the state that preceded the bad update is
        dumped next to the checkpoint and the fault propagates after
        flushing logs.
        """
        if total_steps < 0:
            raise ValueError("total_steps must be nonnegative")
        cfg = self.config
        writer = None
        if log_stream is not None:
            writer = csv.writer(log_stream)
            writer.writerow(["env_step", "episode_reward", "validation_return"])
        result = TrainResult()

        # without a dedicated validation env, validation hijacks the training
        # env and the interrupted episode is discarded rather than logged
        val_env = validation_env if validation_env is not None else env

        def _run_validation(step_index: int) -> float:
            if checkpoint_path is not None:
                score, _ = self.validate_and_checkpoint(
                    val_env, checkpoint_path, seed=seed + 77_000
                )
            else:
                score = self.validate(val_env, seed=seed + 77_000)
            result.validation_steps.append(step_index)
            result.validation_returns.append(score)
            if writer is not None:
                writer.writerow([step_index, "", f"{score:.6f}"])
            return score

        if checkpoint_path is not None and self.best_validation is None:
            self.save_checkpoint(checkpoint_path)

        episode_seed_rng = np.random.default_rng(seed)
        obs = env.reset(int(episode_seed_rng.integers(2**31)))
        episode_reward = 0.0
        try:
            for step in range(1, total_steps + 1):
                if step <= cfg.start_steps and len(self.offline) == 0:
                    action = self.random_action()
                else:
                    action = self.act(obs.as_vector())
                transition = env.step(action)
                self.online.add_transition(transition)
                episode_reward += transition.reward
                result.total_env_steps = step
                obs = transition.next_observation

                if transition.done:
                    result.episode_steps.append(step)
                    result.episode_rewards.append(episode_reward)
                    if writer is not None:
                        writer.writerow([step, f"{episode_reward:.6f}", ""])
                    obs = env.reset(int(episode_seed_rng.integers(2**31)))
                    episode_reward = 0.0

                ready = len(self.online) + len(self.offline) >= cfg.batch_size
                if ready and step >= cfg.update_after and step % cfg.update_every == 0:
                    self.update_from_buffers()
                    result.updates += 1

                if step % cfg.validation_interval == 0:
                    score = _run_validation(step)
                    if stop_threshold is not None and score >= stop_threshold:
                        break
                    if validation_env is None:
                        obs = env.reset(int(episode_seed_rng.integers(2**31)))
                        episode_reward = 0.0
        except TrainingDivergence as fault:
            if divergence_dump_path is not None:
                with open(divergence_dump_path, "w") as fh:
                    json.dump(fault.checkpoint, fh)
            if log_stream is not None:
                log_stream.flush()
            raise
        if log_stream is not None:
            log_stream.flush()
        return result


def load_agent(path) -> SACAgent:
    """Rebuild an agent from a checkpoint file written by save_checkpoint."""
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {blob.get('version')!r}")
    cfg_dict = dict(blob["config"])
    cfg_dict["hidden_sizes"] = tuple(cfg_dict["hidden_sizes"])
    config = SACConfig(**cfg_dict)
    agent = SACAgent(
        blob["obs_dim"],
        blob["action_dim"],
        blob["box_center"],
        blob["box_half"],
        config=config,
        seed=0,
    )
    agent.restore(blob)
    return agent
