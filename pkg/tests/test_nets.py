"""Finite-difference verification of the hand-rolled network gradients."""

import math
import time

import numpy as np
import pytest

from tetherperch.nets import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    MLP,
    Adam,
    policy_backward,
    policy_forward,
    polyak_update,
)

REL_TOL = 1e-4


def fd_gradient(f, x0, h=1e-6):
    """Central-difference gradient of scalar f over a flat vector."""
    g = np.zeros_like(x0)
    for i in range(x0.size):
        up = x0.copy()
        up[i] += h
        dn = x0.copy()
        dn[i] -= h
        g[i] = (f(up) - f(dn)) / (2.0 * h)
    return g


def relative_error(analytic, numeric):
    denom = max(np.linalg.norm(numeric), 1e-8)
    return np.linalg.norm(analytic - numeric) / denom


def random_sizes(rng):
    hidden = [int(rng.integers(2, 7)) for _ in range(int(rng.integers(1, 3)))]
    return [int(rng.integers(1, 5)), *hidden, int(rng.integers(1, 4))]


def test_mlp_parameter_gradients_match_fd():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    for trial in range(20):
        net = MLP(random_sizes(rng), rng)
        x = rng.standard_normal((int(rng.integers(1, 5)), net.sizes[0]))
        c = rng.standard_normal((x.shape[0], net.sizes[-1]))

        out, cache = net.forward(x)
        grads, _ = net.backward(cache, c)
        analytic = np.concatenate([g.ravel() for g in grads])

        theta0 = net.get_flat()

        def loss(theta):
            net.set_flat(theta)
            return float(np.sum(c * net(x)))

        numeric = fd_gradient(loss, theta0)
        net.set_flat(theta0)
        assert relative_error(analytic, numeric) < REL_TOL, f"trial {trial}"
    assert time.monotonic() - start < 30.0


def test_mlp_input_gradient_matches_fd():
    rng = np.random.default_rng(11)
    for trial in range(10):
        net = MLP(random_sizes(rng), rng)
        x = rng.standard_normal((3, net.sizes[0]))
        c = rng.standard_normal((3, net.sizes[-1]))

        _, cache = net.forward(x)
        _, dx = net.backward(cache, c)

        def loss(flat):
            return float(np.sum(c * net(flat.reshape(x.shape))))

        numeric = fd_gradient(loss, x.ravel().copy()).reshape(x.shape)
        assert relative_error(dx, numeric) < REL_TOL, f"trial {trial}"


def test_policy_head_gradients_match_fd():
    rng = np.random.default_rng(23)
    center = np.array([0.5, -1.0])
    half = np.array([2.0, 0.7])
    for trial in range(10):
        dim = 2
        net = MLP([3, 6, 2 * dim], rng)
        obs = rng.standard_normal((4, 3))
        eps = rng.standard_normal((4, dim))
        wa = rng.standard_normal((4, dim))
        wl = rng.standard_normal(4)

        head = policy_forward(net, obs, center, half, eps=eps)
        grads = policy_backward(net, head, wa, wl)
        analytic = np.concatenate([g.ravel() for g in grads])

        theta0 = net.get_flat()

        def loss(theta):
            net.set_flat(theta)
            h = policy_forward(net, obs, center, half, eps=eps)
            return float(np.sum(wa * h["actions"]) + np.sum(wl * h["log_probs"]))

        numeric = fd_gradient(loss, theta0)
        net.set_flat(theta0)
        assert relative_error(analytic, numeric) < REL_TOL, f"trial {trial}"


def test_log_std_clamp_masks_gradient():
    rng = np.random.default_rng(3)
    dim = 1
    net = MLP([2, 4, 2 * dim], rng)
    # push the raw log-std output far above the clamp
    net.biases[-1][dim:] = LOG_STD_MAX + 5.0
    obs = rng.standard_normal((3, 2))
    eps = rng.standard_normal((3, dim))

    head = policy_forward(net, obs, center := np.zeros(dim), half := np.ones(dim), eps=eps)
    assert np.all(head["log_std"] == LOG_STD_MAX)
    assert np.all(head["log_std_raw"] > LOG_STD_MAX)

    grads = policy_backward(net, head, np.ones((3, dim)), np.ones(3))
    # the bias feeding the clamped log-std must receive zero gradient
    db_last = grads[-1]
    assert np.all(db_last[dim:] == 0.0)

    theta0 = net.get_flat()

    def loss(theta):
        net.set_flat(theta)
        h = policy_forward(net, obs, center, half, eps=eps)
        return float(np.sum(h["actions"]) + np.sum(h["log_probs"]))

    numeric = fd_gradient(loss, theta0)
    net.set_flat(theta0)
    analytic = np.concatenate([g.ravel() for g in grads])
    assert relative_error(analytic, numeric) < REL_TOL


def test_log_prob_matches_direct_density():
    # one dimension, hand-computed: gaussian density minus the tanh+scale jacobian
    rng = np.random.default_rng(9)
    net = MLP([1, 3, 2], rng)
    obs = np.array([[0.3]])
    eps = np.array([[0.7]])
    half = np.array([1.5])
    head = policy_forward(net, obs, np.zeros(1), half, eps=eps)

    mean = head["mean"][0, 0]
    log_std = head["log_std"][0, 0]
    u = mean + math.exp(log_std) * 0.7
    gauss = -0.5 * 0.7**2 - log_std - 0.5 * math.log(2 * math.pi)
    jac = math.log(1.5 * (1.0 - math.tanh(u) ** 2))
    assert head["log_probs"][0] == pytest.approx(gauss - jac, abs=1e-12)


def test_critic_action_gradient_matches_fd():
    rng = np.random.default_rng(31)
    obs_dim, act_dim = 3, 2
    net = MLP([obs_dim + act_dim, 8, 1], rng)
    obs = rng.standard_normal((4, obs_dim))
    act = rng.standard_normal((4, act_dim))
    w = rng.standard_normal(4)

    inputs = np.concatenate([obs, act], axis=1)
    _, cache = net.forward(inputs)
    _, din = net.backward(cache, w[:, None])
    analytic = din[:, obs_dim:]

    def loss(flat):
        a = flat.reshape(act.shape)
        return float(np.sum(w * net(np.concatenate([obs, a], axis=1))[:, 0]))

    numeric = fd_gradient(loss, act.ravel().copy()).reshape(act.shape)
    assert relative_error(analytic, numeric) < REL_TOL


def test_adam_minimizes_quadratic():
    rng = np.random.default_rng(5)
    target = rng.standard_normal(6)
    theta = [np.zeros(6)]
    opt = Adam(theta, lr=0.05)
    for _ in range(2000):
        opt.step(theta, [2.0 * (theta[0] - target)])
    assert np.allclose(theta[0], target, atol=1e-4)


def test_polyak_blend_and_full_copy():
    rng = np.random.default_rng(13)
    a = MLP([2, 3, 1], rng)
    b = MLP([2, 3, 1], rng)
    before = [p.copy() for p in a.parameters()]
    polyak_update(a, b, 0.25)
    for prev, now, src in zip(before, a.parameters(), b.parameters()):
        assert np.allclose(now, 0.75 * prev + 0.25 * src)
    polyak_update(a, b, 1.0)
    for now, src in zip(a.parameters(), b.parameters()):
        assert np.array_equal(now, src)


def test_flat_roundtrip_and_copy_independence():
    rng = np.random.default_rng(17)
    net = MLP([3, 5, 2], rng)
    flat = net.get_flat()
    clone = net.copy()
    clone.weights[0][0, 0] += 1.0
    assert net.weights[0][0, 0] != clone.weights[0][0, 0]
    net.set_flat(np.zeros_like(flat))
    assert np.all(net.get_flat() == 0.0)
    net.set_flat(flat)
    assert np.array_equal(net.get_flat(), flat)
    with pytest.raises(ValueError):
        net.set_flat(flat[:-1])


def test_deterministic_head_uses_mean():
    rng = np.random.default_rng(19)
    net = MLP([2, 4, 4], rng)
    obs = rng.standard_normal((2, 2))
    head = policy_forward(net, obs, np.zeros(2), np.ones(2), deterministic=True)
    assert np.allclose(head["actions"], np.tanh(head["mean"]))


def test_stochastic_forward_requires_eps():
    rng = np.random.default_rng(21)
    net = MLP([2, 4, 4], rng)
    with pytest.raises(ValueError, match="eps"):
        policy_forward(net, np.zeros((1, 2)), np.zeros(2), np.ones(2))


def test_log_std_floor_masks_gradient_below():
    rng = np.random.default_rng(37)
    dim = 1
    net = MLP([2, 4, 2 * dim], rng)
    net.biases[-1][dim:] = LOG_STD_MIN - 7.0
    obs = rng.standard_normal((2, 2))
    eps = rng.standard_normal((2, dim))
    head = policy_forward(net, obs, np.zeros(dim), np.ones(dim), eps=eps)
    assert np.all(head["log_std"] == LOG_STD_MIN)
    grads = policy_backward(net, head, np.zeros((2, dim)), np.ones(2))
    assert np.all(grads[-1][dim:] == 0.0)
