"""Agent update rules checked against flat reimplementations and quadrature.

Oracles in this file:
  * central finite differences of the actor objective over all actor
    parameters, for the deterministic ascent chain;
  * straight-line recomputations of every target/loss with a same-seeded
    generator, for the smoothed updates;
  * the quadrature gradient from the smoothing module, for the score-form
    actor integrand (Monte Carlo agreement within 4 standard errors, and a
    node-weighted exact expectation for the small-sigma limit).
"""

import numpy as np
import pytest

from softdpg.agents import (
    ALGO_IDS,
    AgentConfig,
    AgentState,
    actor_noise_gradient,
    ddpg_actor_update,
    ddpg_critic_update,
    init_agent,
    select_action,
    soft_actor_update,
    soft_critic_update,
    train_step,
)
from softdpg.envs import EnvSpec, make_env
from softdpg.nn import AdamState, adam_step, backward, forward
from softdpg.replay import ReplayBuffer
from softdpg.smoothing import SmoothingConfig, gauss_hermite, smooth_grad

SPEC = EnvSpec(3, 1, [-1.0], [1.0], 50)


def small_cfg(**over):
    base = dict(batch=4, hidden=(8, 6), n_smooth=5, warmup_steps=3)
    base.update(over)
    return AgentConfig(**base)


def make_pair(seed, cfg, algo="soft-ddpg"):
    rng = np.random.default_rng(seed)
    return init_agent(cfg, SPEC, rng, algo)


def random_batch(rng, b=4, done=None):
    obs = rng.normal(size=(b, 3))
    act = rng.uniform(-1.0, 1.0, size=(b, 1))
    rew = rng.normal(size=b)
    nxt = rng.normal(size=(b, 3))
    if done is None:
        done = (rng.random(b) < 0.3).astype(float)
    else:
        done = np.full(b, float(done))
    return obs, act, rew, nxt, done


def flat_params(net):
    return np.concatenate([p.ravel() for p in net.params()])


def clone_state(st):
    return AgentState(
        algo=st.algo,
        actor=st.actor.copy(),
        critic=st.critic.copy(),
        target_actor=st.target_actor.copy(),
        target_critic=st.target_critic.copy(),
        actor_adam=AdamState(lr=st.actor_adam.lr),
        critic_adam=AdamState(lr=st.critic_adam.lr),
        act_lo=st.act_lo.copy(),
        act_hi=st.act_hi.copy(),
        step=st.step,
    )


class TestConfig:
    def test_defaults(self):
        cfg = AgentConfig()
        assert cfg.gamma == 0.99
        assert cfg.tau == 0.005
        assert cfg.actor_lr == 1e-4 and cfg.critic_lr == 1e-4
        assert cfg.batch == 256
        assert cfg.sigma_expl == 0.1
        assert cfg.sigma == 0.2
        assert cfg.n_smooth == 50
        assert cfg.warmup_steps == 1000
        assert cfg.hidden == (400, 300)

    @pytest.mark.parametrize(
        "bad",
        [
            dict(gamma=1.0),
            dict(gamma=-0.1),
            dict(tau=0.0),
            dict(tau=1.5),
            dict(actor_lr=0.0),
            dict(critic_lr=-1e-4),
            dict(batch=0),
            dict(sigma_expl=-0.1),
            dict(sigma=0.0),
            dict(n_smooth=0),
            dict(warmup_steps=-1),
            dict(hidden=()),
            dict(hidden=(32, 0)),
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            AgentConfig(**bad)


class TestInit:
    def test_targets_are_independent_copies(self):
        st = make_pair(0, small_cfg())
        for po, pt in zip(st.actor.params(), st.target_actor.params()):
            assert np.array_equal(po, pt)
        for po, pt in zip(st.critic.params(), st.target_critic.params()):
            assert np.array_equal(po, pt)
        st.actor.weights[0][0, 0] += 1.0
        assert st.target_actor.weights[0][0, 0] != st.actor.weights[0][0, 0]

    def test_shapes_and_heads(self):
        st = make_pair(1, small_cfg())
        assert st.critic.layer_sizes == (4, 8, 6, 1)
        assert st.actor.layer_sizes == (3, 8, 6, 1)
        assert st.actor.output_head == "bounded"
        assert st.actor.head_scale == 1.0
        assert st.critic.output_head == "linear"

    def test_unknown_algo(self):
        with pytest.raises(ValueError, match="unknown algo"):
            make_pair(0, small_cfg(), algo="td3")

    def test_asymmetric_bounds_rejected(self):
        spec = EnvSpec(2, 1, [0.0], [1.0], 10)
        with pytest.raises(ValueError, match="symmetric"):
            init_agent(small_cfg(), spec, np.random.default_rng(0))

    def test_algo_ids(self):
        assert ALGO_IDS == ("ddpg", "soft-ddpg")


class TestSelectAction:
    def test_greedy_is_deterministic_and_bounded(self):
        st = make_pair(2, small_cfg())
        obs = np.array([0.3, -1.2, 0.5])
        a1 = select_action(st, obs, small_cfg())
        a2 = select_action(st, obs, small_cfg())
        assert np.array_equal(a1, a2)
        assert np.all(a1 >= -1.0) and np.all(a1 <= 1.0)

    def test_zero_noise_explore_equals_greedy(self):
        st = make_pair(3, small_cfg(sigma_expl=0.0))
        obs = np.array([0.1, 0.2, 0.3])
        greedy = select_action(st, obs, small_cfg(sigma_expl=0.0))
        noisy = select_action(
            st, obs, small_cfg(sigma_expl=0.0), np.random.default_rng(9), explore=True
        )
        assert np.array_equal(greedy, noisy)

    def test_noise_scales_with_action_halfwidth(self):
        cfg = small_cfg(sigma_expl=0.25)
        wide = EnvSpec(3, 1, [-2.0], [2.0], 50)
        st = init_agent(cfg, wide, np.random.default_rng(4))
        obs = np.zeros(3)
        base = forward(st.actor, obs)
        z = np.random.default_rng(11).standard_normal(1)
        got = select_action(st, obs, cfg, np.random.default_rng(11), explore=True)
        want = np.clip(base + 0.25 * 2.0 * z, -2.0, 2.0)
        assert np.allclose(got, want, atol=0.0)

    def test_large_noise_is_clipped(self):
        cfg = small_cfg(sigma_expl=50.0)
        st = make_pair(5, cfg)
        rng = np.random.default_rng(6)
        acts = np.array(
            [select_action(st, np.zeros(3), cfg, rng, explore=True)[0] for _ in range(64)]
        )
        assert np.all(acts >= -1.0) and np.all(acts <= 1.0)
        assert np.any(np.isin(acts, [-1.0, 1.0]))

    def test_explore_without_rng_raises(self):
        st = make_pair(7, small_cfg())
        with pytest.raises(ValueError, match="rng"):
            select_action(st, np.zeros(3), small_cfg(), explore=True)


class TestDdpgCritic:
    def test_loss_matches_flat_recomputation(self):
        cfg = small_cfg(gamma=0.9)
        st = make_pair(10, cfg, algo="ddpg")
        batch = random_batch(np.random.default_rng(20))
        obs, act, rew, nxt, done = batch
        na = forward(st.target_actor, nxt)
        tq = forward(st.target_critic, np.concatenate([nxt, na], axis=-1))[:, 0]
        y = rew + 0.9 * (1.0 - done) * tq
        q = forward(st.critic, np.concatenate([obs, act], axis=-1))[:, 0]
        want = float(np.mean((q - y) ** 2)) / 2.0
        got = ddpg_critic_update(clone_state(st), batch, cfg)
        assert got == pytest.approx(want, rel=0, abs=1e-15)

    def test_terminal_rows_match_gamma_zero(self):
        st = make_pair(11, small_cfg(), algo="ddpg")
        batch = random_batch(np.random.default_rng(21), done=1.0)
        a = clone_state(st)
        b = clone_state(st)
        loss_term = ddpg_critic_update(a, batch, small_cfg(gamma=0.97))
        loss_zero = ddpg_critic_update(b, batch, small_cfg(gamma=0.0))
        assert loss_term == loss_zero
        assert np.array_equal(flat_params(a.critic), flat_params(b.critic))

    def test_gamma_zero_regresses_to_reward(self):
        cfg = small_cfg(gamma=0.0, critic_lr=1e-2)
        st = make_pair(12, cfg, algo="ddpg")
        batch = random_batch(np.random.default_rng(22))
        obs, act, rew = batch[0], batch[1], batch[2]
        x = np.concatenate([obs, act], axis=-1)
        first = float(np.mean((forward(st.critic, x)[:, 0] - rew) ** 2)) / 2.0
        losses = [ddpg_critic_update(st, batch, cfg) for _ in range(400)]
        assert losses[0] == pytest.approx(first, abs=1e-15)
        assert losses[-1] < 1e-3 < losses[0]

    def test_only_critic_moves(self):
        st = make_pair(13, small_cfg(), algo="ddpg")
        before = {
            "actor": flat_params(st.actor),
            "ta": flat_params(st.target_actor),
            "tc": flat_params(st.target_critic),
            "critic": flat_params(st.critic),
        }
        ddpg_critic_update(st, random_batch(np.random.default_rng(23)), small_cfg())
        assert np.array_equal(flat_params(st.actor), before["actor"])
        assert np.array_equal(flat_params(st.target_actor), before["ta"])
        assert np.array_equal(flat_params(st.target_critic), before["tc"])
        assert not np.array_equal(flat_params(st.critic), before["critic"])

    def test_nonfinite_reward_raises(self):
        st = make_pair(14, small_cfg(), algo="ddpg")
        batch = random_batch(np.random.default_rng(24))
        batch = (batch[0], batch[1], batch[2] * np.inf, batch[3], batch[4])
        with pytest.raises(FloatingPointError):
            ddpg_critic_update(st, batch, small_cfg())


class TestDdpgActor:
    def set_actor_params(self, st, flat):
        i = 0
        for p in st.actor.params():
            p[...] = flat[i : i + p.size].reshape(p.shape)
            i += p.size

    def objective(self, st, obs):
        pi = forward(st.actor, obs)
        q = forward(st.critic, np.concatenate([obs, pi], axis=-1))
        return float(np.mean(q))

    def test_gradient_matches_finite_differences(self):
        st = make_pair(30, small_cfg(), algo="ddpg")
        obs = np.random.default_rng(31).normal(size=(4, 3))
        b = obs.shape[0]
        pi = forward(st.actor, obs)
        x = np.concatenate([obs, pi], axis=-1)
        _, input_grad = backward(st.critic, x, np.full((b, 1), 1.0 / b))
        grads, _ = backward(st.actor, obs, input_grad[:, 3:])
        analytic = np.concatenate([g.ravel() for g in grads])

        theta = flat_params(st.actor)
        h = 1e-6
        fd = np.empty_like(theta)
        probe = clone_state(st)
        for i in range(theta.size):
            for sign, slot in ((+1, 0), (-1, 1)):
                t = theta.copy()
                t[i] += sign * h
                self.set_actor_params(probe, t)
                if slot == 0:
                    hi = self.objective(probe, obs)
                else:
                    lo = self.objective(probe, obs)
            fd[i] = (hi - lo) / (2 * h)
        assert np.max(np.abs(analytic - fd)) < 1e-8

    def test_update_is_adam_on_negated_gradient(self):
        st = make_pair(32, small_cfg(), algo="ddpg")
        obs = np.random.default_rng(33).normal(size=(4, 3))
        batch = (obs, None, None, None, None)
        mine = clone_state(st)
        pi = forward(mine.actor, obs)
        x = np.concatenate([obs, pi], axis=-1)
        _, input_grad = backward(mine.critic, x, np.full((4, 1), 0.25))
        grads, _ = backward(mine.actor, obs, input_grad[:, 3:])
        adam_step(mine.actor.params(), [-g for g in grads], mine.actor_adam)

        value = ddpg_actor_update(st, batch, small_cfg())
        assert value == pytest.approx(float(np.mean(forward(mine.critic, x))), abs=1e-15)
        assert np.array_equal(flat_params(st.actor), flat_params(mine.actor))

    def test_single_step_ascends(self):
        cfg = small_cfg(actor_lr=1e-6)
        st = make_pair(34, cfg, algo="ddpg")
        obs = np.random.default_rng(35).normal(size=(8, 3))
        batch = (obs, None, None, None, None)
        before = self.objective(st, obs)
        ddpg_actor_update(st, batch, cfg)
        assert self.objective(st, obs) > before

    def test_critic_and_targets_frozen(self):
        st = make_pair(36, small_cfg(), algo="ddpg")
        keep = (
            flat_params(st.critic),
            flat_params(st.target_critic),
            flat_params(st.target_actor),
        )
        obs = np.random.default_rng(37).normal(size=(4, 3))
        ddpg_actor_update(st, (obs, None, None, None, None), small_cfg())
        assert np.array_equal(flat_params(st.critic), keep[0])
        assert np.array_equal(flat_params(st.target_critic), keep[1])
        assert np.array_equal(flat_params(st.target_actor), keep[2])


class TestSoftCritic:
    def flat_targets(self, st, cfg, batch, rng):
        """Same arithmetic as the update, written out independently."""
        obs, act, rew, nxt, done = batch
        b, n, m = obs.shape[0], cfg.n_smooth, 1
        na = forward(st.target_actor, nxt)
        w = rng.standard_normal((b, n, m))
        noisy = np.clip(na[:, None, :] + cfg.sigma * w, -1.0, 1.0)
        ys = np.empty((b, n))
        for i in range(b):
            for j in range(n):
                xi = np.concatenate([nxt[i], noisy[i, j]])
                ys[i, j] = rew[i] + cfg.gamma * (1.0 - done[i]) * forward(
                    st.target_critic, xi
                )[0]
        return ys

    def test_loss_matches_flat_recomputation(self):
        cfg = small_cfg()
        st = make_pair(40, cfg)
        batch = random_batch(np.random.default_rng(41))
        ys = self.flat_targets(st, cfg, batch, np.random.default_rng(77))
        obs, act = batch[0], batch[1]
        q = forward(st.critic, np.concatenate([obs, act], axis=-1))[:, 0]
        want = float(np.mean((ys - q[:, None]) ** 2)) / 2.0
        got = soft_critic_update(clone_state(st), batch, cfg, np.random.default_rng(77))
        assert got == pytest.approx(want, rel=0, abs=1e-13)

    def test_variance_decomposition(self):
        """N-target loss = mean-target loss + half the mean target variance."""
        cfg = small_cfg(n_smooth=16)
        st = make_pair(42, cfg)
        batch = random_batch(np.random.default_rng(43))
        ys = self.flat_targets(st, cfg, batch, np.random.default_rng(88))
        obs, act = batch[0], batch[1]
        q = forward(st.critic, np.concatenate([obs, act], axis=-1))[:, 0]
        loss_n = float(np.mean((ys - q[:, None]) ** 2)) / 2.0
        loss_mean = float(np.mean((ys.mean(axis=1) - q) ** 2)) / 2.0
        var = float(np.mean(ys.var(axis=1)))
        assert loss_n == pytest.approx(loss_mean + var / 2.0, rel=1e-12)
        got = soft_critic_update(clone_state(st), batch, cfg, np.random.default_rng(88))
        assert got == pytest.approx(loss_mean + var / 2.0, rel=1e-12)

    def test_parameters_follow_mean_target_regression(self):
        """The update direction only sees the per-row mean of the N targets."""
        cfg = small_cfg()
        st = make_pair(44, cfg)
        batch = random_batch(np.random.default_rng(45))
        obs, act = batch[0], batch[1]
        ys = self.flat_targets(st, cfg, batch, np.random.default_rng(99))
        mine = clone_state(st)
        x = np.concatenate([obs, act], axis=-1)
        q = forward(mine.critic, x)
        upstream = (q - ys.mean(axis=1, keepdims=True)) / obs.shape[0]
        grads, _ = backward(mine.critic, x, upstream)
        adam_step(mine.critic.params(), grads, mine.critic_adam)
        soft_critic_update(st, batch, cfg, np.random.default_rng(99))
        assert np.allclose(
            flat_params(st.critic), flat_params(mine.critic), rtol=0, atol=1e-14
        )

    def test_gamma_zero_matches_ddpg(self):
        cfg = small_cfg(gamma=0.0)
        st = make_pair(46, cfg)
        batch = random_batch(np.random.default_rng(47))
        a, b = clone_state(st), clone_state(st)
        la = soft_critic_update(a, batch, cfg, np.random.default_rng(1))
        lb = ddpg_critic_update(b, batch, cfg)
        assert la == pytest.approx(lb, rel=1e-12)
        assert np.allclose(
            flat_params(a.critic), flat_params(b.critic), rtol=0, atol=1e-13
        )

    def test_tiny_sigma_matches_ddpg(self):
        """With sigma = 1e-12 the perturbed targets collapse onto the
        deterministic one, so parameters and loss agree to 1e-9."""
        cfg = small_cfg(sigma=1e-12)
        st = make_pair(48, cfg)
        batch = random_batch(np.random.default_rng(49))
        a, b = clone_state(st), clone_state(st)
        la = soft_critic_update(a, batch, cfg, np.random.default_rng(2))
        lb = ddpg_critic_update(b, batch, cfg)
        assert abs(la - lb) < 1e-9
        assert np.max(np.abs(flat_params(a.critic) - flat_params(b.critic))) < 1e-9

    def test_fresh_noise_each_call(self):
        cfg = small_cfg()
        st = make_pair(50, cfg)
        batch = random_batch(np.random.default_rng(51))
        rng = np.random.default_rng(52)
        l1 = soft_critic_update(st, batch, cfg, rng)
        l2 = soft_critic_update(st, batch, cfg, rng)
        assert l1 != l2


class TestActorIntegrand:
    def test_score_rows_estimate_quadrature_gradient(self):
        """Monte Carlo score rows against the quadrature gradient of
        E[sin(a + sigma w)], within four standard errors."""
        sigma, a0, n = 0.3, 0.7, 100_000
        rng = np.random.default_rng(60)
        w = rng.standard_normal((1, n, 1))
        noisy = a0 + sigma * w
        q = np.sin(noisy[..., 0])
        rows = -(q[..., None] * (noisy - a0)).squeeze(axis=(0, 2)) / sigma**2
        est = rows.mean()
        se = rows.std(ddof=1) / np.sqrt(n)
        want = smooth_grad(
            lambda a: np.sin(a[:, 0]), np.array([a0]), SmoothingConfig(sigma=sigma)
        )[0]
        grad = actor_noise_gradient(
            np.array([[a0]]), noisy, q[..., None].reshape(1, n), sigma
        )
        assert grad[0, 0] == pytest.approx(est, rel=1e-12)
        assert abs((-grad[0, 0]) - want) < 4 * se

    def test_node_weighted_rows_reproduce_quadrature_exactly(self):
        """Feeding quadrature nodes as the noise and folding the weights into
        q makes the score expectation exact, not sampled."""
        sigma, a0 = 0.2, -0.4
        quad = gauss_hermite(41)
        k = quad.nodes.size
        noisy = (a0 + sigma * quad.nodes).reshape(1, k, 1)
        qvals = (np.sin(noisy[..., 0]) * quad.weights * k).reshape(1, k)
        grad = actor_noise_gradient(np.array([[a0]]), noisy, qvals, sigma)
        want = smooth_grad(
            lambda a: np.sin(a[:, 0]),
            np.array([a0]),
            SmoothingConfig(sigma=sigma, nodes=41),
        )[0]
        assert -grad[0, 0] == pytest.approx(want, rel=1e-12)

    def test_small_sigma_expectation_is_critic_input_gradient(self):
        """At sigma = 1e-6 the exact (node-weighted) score expectation lands
        on dQ/da, the deterministic ascent direction."""
        st = make_pair(61, small_cfg())
        obs = np.random.default_rng(62).normal(size=(3, 3))
        pi = forward(st.actor, obs)
        sigma = 1e-6
        quad = gauss_hermite(21)
        k = quad.nodes.size
        noisy = pi[:, None, :] + sigma * quad.nodes.reshape(1, k, 1)
        obs_rep = np.repeat(obs[:, None, :], k, axis=1).reshape(-1, 3)
        q = forward(
            st.critic, np.concatenate([obs_rep, noisy.reshape(-1, 1)], axis=-1)
        ).reshape(3, k)
        rows = -actor_noise_gradient(pi, noisy, q * quad.weights * k, sigma)
        x = np.concatenate([obs, pi], axis=-1)
        _, input_grad = backward(st.critic, x, 1.0)
        assert np.max(np.abs(rows - input_grad[:, 3:])) < 1e-8


class TestSoftActor:
    def test_update_matches_flat_recomputation(self):
        cfg = small_cfg()
        st = make_pair(70, cfg)
        batch = random_batch(np.random.default_rng(71))
        obs = batch[0]
        b, n = obs.shape[0], cfg.n_smooth

        mine = clone_state(st)
        rng = np.random.default_rng(72)
        pi = forward(mine.actor, obs)
        w = rng.standard_normal((b, n, 1))
        noisy = np.clip(pi[:, None, :] + cfg.sigma * w, -1.0, 1.0)
        loss = 0.0
        qvals = np.empty((b, n))
        for i in range(b):
            for j in range(n):
                xi = np.concatenate([obs[i], noisy[i, j]])
                qvals[i, j] = forward(mine.critic, xi)[0]
                diff = noisy[i, j] - pi[i]
                loss += float(diff @ diff) * qvals[i, j]
        loss /= 2.0 * b * n * cfg.sigma**2
        upstream = np.zeros((b, 1))
        for i in range(b):
            acc = 0.0
            for j in range(n):
                acc += qvals[i, j] * (noisy[i, j, 0] - pi[i, 0])
            upstream[i, 0] = -acc / (n * cfg.sigma**2 * b)
        grads, _ = backward(mine.actor, obs, upstream)
        adam_step(mine.actor.params(), grads, mine.actor_adam)

        got = soft_actor_update(st, batch, cfg, np.random.default_rng(72))
        assert got == pytest.approx(loss, rel=1e-12)
        assert np.allclose(
            flat_params(st.actor), flat_params(mine.actor), rtol=0, atol=1e-14
        )

    def test_clipping_keeps_loss_finite_and_reproducible(self):
        cfg = small_cfg(sigma=5.0)
        st = make_pair(73, cfg)
        batch = random_batch(np.random.default_rng(74))
        a, b = clone_state(st), clone_state(st)
        la = soft_actor_update(a, batch, cfg, np.random.default_rng(75))
        lb = soft_actor_update(b, batch, cfg, np.random.default_rng(75))
        assert np.isfinite(la) and la == lb
        assert np.array_equal(flat_params(a.actor), flat_params(b.actor))

    def test_critic_and_targets_frozen(self):
        st = make_pair(76, small_cfg())
        keep = (
            flat_params(st.critic),
            flat_params(st.target_critic),
            flat_params(st.target_actor),
        )
        soft_actor_update(
            st, random_batch(np.random.default_rng(77)), small_cfg(), np.random.default_rng(78)
        )
        assert np.array_equal(flat_params(st.critic), keep[0])
        assert np.array_equal(flat_params(st.target_critic), keep[1])
        assert np.array_equal(flat_params(st.target_actor), keep[2])

    def test_ascends_analytic_landscape_in_expectation(self):
        """Many tiny updates on a fixed batch should raise the smoothed value
        of the critic at the policy action."""
        cfg = small_cfg(actor_lr=1e-3, n_smooth=64, sigma=0.3)
        st = make_pair(79, cfg)
        obs = np.random.default_rng(80).normal(size=(8, 3))
        batch = (obs, None, None, None, None)

        def smoothed_value(state):
            quad = gauss_hermite(41)
            pi = forward(state.actor, obs)
            total = 0.0
            for i in range(obs.shape[0]):
                pts = np.clip(pi[i, 0] + cfg.sigma * quad.nodes, -1.0, 1.0)
                xs = np.concatenate(
                    [np.repeat(obs[i][None, :], pts.size, axis=0), pts[:, None]], axis=-1
                )
                total += float(quad.weights @ forward(st.critic, xs)[:, 0])
            return total / obs.shape[0]

        before = smoothed_value(st)
        rng = np.random.default_rng(81)
        for _ in range(200):
            soft_actor_update(st, batch, cfg, rng)
        assert smoothed_value(st) > before


class TestTrainStep:
    def run_steps(self, seed, steps, algo="soft-ddpg", cfg=None):
        cfg = cfg or small_cfg(warmup_steps=8, batch=4, n_smooth=3)
        rng = np.random.default_rng(seed)
        env = make_env("toy")
        st = init_agent(cfg, env.spec, rng, algo)
        buf = ReplayBuffer(512)
        obs = env.reset(rng)
        trace = []
        for _ in range(steps):
            out, metrics = train_step(st, env, buf, cfg, rng, obs)
            trace.append(metrics)
            obs = env.reset(rng) if (out.terminated or out.truncated) else out.obs
        return st, buf, trace

    def test_warmup_freezes_parameters_and_fills_buffer(self):
        cfg = small_cfg(warmup_steps=8, batch=4, n_smooth=3)
        rng = np.random.default_rng(90)
        env = make_env("toy")
        st = init_agent(cfg, env.spec, rng)
        buf = ReplayBuffer(512)
        frozen = flat_params(st.actor).copy(), flat_params(st.critic).copy()
        obs = env.reset(rng)
        for _ in range(8):
            out, metrics = train_step(st, env, buf, cfg, rng, obs)
            obs = env.reset(rng) if (out.terminated or out.truncated) else out.obs
            assert np.isnan(metrics["critic_loss"])
        assert np.array_equal(flat_params(st.actor), frozen[0])
        assert np.array_equal(flat_params(st.critic), frozen[1])
        assert len(buf) == 8
        out, metrics = train_step(st, env, buf, cfg, rng, obs)
        assert np.isfinite(metrics["critic_loss"])
        assert not np.array_equal(flat_params(st.critic), frozen[1])

    def test_updates_move_targets_once_per_step(self):
        st, _, _ = self.run_steps(91, 12)
        assert st.step == 12
        gap_c = flat_params(st.target_critic) - flat_params(st.critic)
        assert not np.allclose(gap_c, 0.0)

    def test_bitwise_determinism(self):
        for algo in ALGO_IDS:
            s1, _, t1 = self.run_steps(92, 14, algo)
            s2, _, t2 = self.run_steps(92, 14, algo)
            assert np.array_equal(flat_params(s1.actor), flat_params(s2.actor))
            assert np.array_equal(flat_params(s1.critic), flat_params(s2.critic))
            for key in t1[0]:
                assert np.array_equal(
                    [m[key] for m in t1], [m[key] for m in t2], equal_nan=True
                )

    def test_target_drift_rate_is_exact(self):
        """With the online net pinned, k polyak steps shrink the gap by
        exactly (1 - tau)^k."""
        from softdpg.nn import polyak_update

        cfg = small_cfg()
        st = make_pair(93, cfg)
        st.critic.weights[0][...] += 0.5
        gap0 = flat_params(st.target_critic) - flat_params(st.critic)
        for _ in range(10):
            polyak_update(st.target_critic, st.critic, cfg.tau)
        gap = flat_params(st.target_critic) - flat_params(st.critic)
        assert np.allclose(gap, (1.0 - cfg.tau) ** 10 * gap0, rtol=1e-12, atol=1e-15)
