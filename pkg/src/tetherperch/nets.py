"""Small dense networks with hand-rolled reverse-mode gradients.

The learner only needs two-hidden-layer function approximators, so this
module implements exactly that: tanh hidden layers, linear output, Adam,
and the squashed-Gaussian policy head with its log-density correction.
Gradient correctness is enforced by finite-difference tests rather than
taken on faith from a framework.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)


class MLP:
    """Fully connected net: tanh hidden activations, linear output."""

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            limit = math.sqrt(6.0 / (n_in + n_out))
            self.weights.append(rng.uniform(-limit, limit, size=(n_in, n_out)))
            self.biases.append(np.zeros(n_out))

    # -- forward / backward -------------------------------------------------

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns (output, cache); cache holds each layer's input."""
        h = np.asarray(x, dtype=float)
        if h.ndim == 1:
            h = h[None, :]
        cache = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            cache.append(h)
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, cache: list[np.ndarray], grad_out: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Backpropagate d(scalar loss)/d(output) through the cached pass.

        Returns (parameter gradients interleaved [dW0, db0, dW1, ...],
        gradient with respect to the input batch).
        """
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        delta = np.asarray(grad_out, dtype=float)
        if delta.ndim == 1:
            delta = delta[None, :]
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            inp = cache[i]
            if i != last:
                # cache[i + 1] holds tanh(z) for hidden layers
                delta = delta * (1.0 - cache[i + 1] ** 2)
            grads[2 * i] = inp.T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
        return grads, delta

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        offset = 0
        for p in self.parameters():
            n = p.size
            p[...] = flat[offset : offset + n].reshape(p.shape)
            offset += n
        if offset != flat.size:
            raise ValueError(f"expected {offset} parameters, got {flat.size}")

    def copy(self) -> "MLP":
        clone = MLP.__new__(MLP)
        clone.sizes = self.sizes
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone


def polyak_update(target: MLP, online: MLP, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, in place."""
    for t, o in zip(target.parameters(), online.parameters()):
        t *= 1.0 - tau
        t += tau * o


class Adam:
    """Standard Adam over a list of parameter arrays, updated in place."""

    def __init__(
        self,
        params: Sequence[np.ndarray],
        lr: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.step_count += 1
        b1c = 1.0 - self.beta1**self.step_count
        b2c = 1.0 - self.beta2**self.step_count
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


# ---------------------------------------------------------------------------
# Squashed-Gaussian policy head


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def policy_forward(
    actor: MLP,
    obs: np.ndarray,
    box_center: np.ndarray,
    box_half: np.ndarray,
    eps: np.ndarray | None = None,
    deterministic: bool = False,
) -> dict:
    """Sample box-squashed actions and their log densities.

    ``eps`` is the standard-normal draw (reparameterization); pass it
    explicitly for deterministic gradient checks. Returns a dict with
    actions, log_probs, and the intermediates needed by policy_backward.
    """
    out, cache = actor.forward(obs)
    dim = out.shape[1] // 2
    mean = out[:, :dim]
    log_std_raw = out[:, dim:]
    log_std = np.clip(log_std_raw, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    if deterministic:
        eps = np.zeros_like(mean)
    elif eps is None:
        raise ValueError("stochastic sampling needs an explicit eps draw")
    u = mean + std * eps
    t = np.tanh(u)
    actions = box_center + box_half * t
    # log pi = sum_j [ N(u; mean, std) in log space - log d(action)/d(u) ]
    # with log(1 - tanh^2(u)) evaluated stably via softplus
    log_det = np.log(box_half) + 2.0 * (_LOG_2 - u - softplus(-2.0 * u))
    log_prob = np.sum(
        -0.5 * eps**2 - log_std - 0.5 * _LOG_2PI - log_det, axis=1
    )
    return {
        "actions": actions,
        "log_probs": log_prob,
        "mean": mean,
        "log_std": log_std,
        "log_std_raw": log_std_raw,
        "std": std,
        "eps": eps,
        "u": u,
        "tanh_u": t,
        "cache": cache,
        "dim": dim,
        "box_half": np.asarray(box_half, dtype=float),
    }


def policy_backward(
    actor: MLP,
    head: dict,
    d_actions: np.ndarray,
    d_log_probs: np.ndarray,
) -> list[np.ndarray]:
    """Gradients of a scalar loss through the policy head into the actor.

    ``d_actions`` is dL/da (batch, dim); ``d_log_probs`` is dL/dlogpi
    (batch,). The clamp on log-std zeroes gradients outside its range.
    """
    t = head["tanh_u"]
    std = head["std"]
    eps = head["eps"]
    dlp = np.asarray(d_log_probs, dtype=float)[:, None]
    # chain into u: actions via box_half*(1 - t^2), log pi via 2*tanh(u)
    d_u = d_actions * head["box_half"] * (1.0 - t**2) + dlp * (2.0 * t)
    d_mean = d_u
    d_log_std = d_u * (std * eps) + dlp * (-1.0)
    mask = (head["log_std_raw"] > LOG_STD_MIN) & (head["log_std_raw"] < LOG_STD_MAX)
    d_log_std = d_log_std * mask
    grad_out = np.concatenate([d_mean, d_log_std], axis=1)
    grads, _ = actor.backward(head["cache"], grad_out)
    return grads
