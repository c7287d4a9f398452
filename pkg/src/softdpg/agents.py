"""DDPG and its smoothed variant: action selection and one-step updates.

Both agents share the actor-critic layout: a bounded-head actor mapping
observations into the action box, a linear-head critic over concatenated
(observation, action), and Polyak-averaged target copies of each.

The baseline critic regresses Q(s, a) onto r + gamma * Q_bar(s', pi_bar(s'))
and the baseline actor ascends mean_s Q(s, pi(s)) through the critic's input
gradient. The smoothed agent replaces both sides with N-sample Gaussian
perturbations of scale sigma around the policy action:

  critic target   y_i = r + gamma * Q_bar(s', clip(pi_bar(s') + sigma w_i))
  critic loss     (1 / 2|B|N) sum_i sum_B (y_i - Q(s, a))^2
  actor loss      (1 / 2|B|N sigma^2) sum_i sum_B ||a_i - pi(s)||^2 Q(s, a_i)

with a_i = clip(pi(s) + sigma w_i) drawn once and treated as constants: the
actor gradient is -(1 / |B|N sigma^2) sum Q(s, a_i) (a_i - pi(s))^T dpi/dtheta,
the score form of the smoothed objective's gradient. Differentiating through
a_i as well would cancel the useful term and leave noise.

Truncated episodes bootstrap; only termination cuts the target. Noise is
drawn fresh on every update call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envs import EnvSpec
from .nn import AdamState, Mlp, adam_step, backward, forward, init_mlp, polyak_update

__all__ = [
    "AgentConfig",
    "AgentState",
    "ALGO_IDS",
    "init_agent",
    "select_action",
    "actor_noise_gradient",
    "ddpg_critic_update",
    "ddpg_actor_update",
    "soft_critic_update",
    "soft_actor_update",
    "train_step",
]

ALGO_IDS = ("ddpg", "soft-ddpg")


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    batch: int = 256
    sigma_expl: float = 0.1
    sigma: float = 0.2
    n_smooth: int = 50
    warmup_steps: int = 1000
    hidden: tuple = (400, 300)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch < 1:
            raise ValueError("batch must be positive")
        if self.sigma_expl < 0:
            raise ValueError("sigma_expl must be nonnegative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.n_smooth < 1:
            raise ValueError("n_smooth must be at least 1")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be nonnegative")
        if not self.hidden or any(int(h) < 1 for h in self.hidden):
            raise ValueError("hidden must be a nonempty tuple of positive sizes")


@dataclass
class AgentState:
    algo: str
    actor: Mlp
    critic: Mlp
    target_actor: Mlp
    target_critic: Mlp
    actor_adam: AdamState
    critic_adam: AdamState
    act_lo: np.ndarray
    act_hi: np.ndarray
    step: int = 0

    @property
    def act_half(self) -> np.ndarray:
        return 0.5 * (self.act_hi - self.act_lo)


def init_agent(cfg: AgentConfig, spec: EnvSpec, rng, algo: str = "soft-ddpg") -> AgentState:
    """Fresh agent; critic weights are drawn before actor weights.

    Only symmetric action boxes are supported: the actor's bounded head
    scales tanh output by the half-width, which assumes a zero center.
    """
    if algo not in ALGO_IDS:
        raise ValueError(f"unknown algo {algo!r}; known: {', '.join(ALGO_IDS)}")
    if not np.allclose(spec.act_lo, -spec.act_hi):
        raise ValueError("action bounds must be symmetric around zero")
    half = float(spec.act_hi[0])
    if not np.allclose(spec.act_hi, half):
        raise ValueError("action bounds must share one half-width")
    hidden = [int(h) for h in cfg.hidden]
    critic = init_mlp([spec.obs_dim + spec.act_dim] + hidden + [1], rng)
    actor = init_mlp([spec.obs_dim] + hidden + [spec.act_dim], rng,
                     output_head="bounded", head_scale=half)
    return AgentState(
        algo=algo,
        actor=actor,
        critic=critic,
        target_actor=actor.copy(),
        target_critic=critic.copy(),
        actor_adam=AdamState(lr=cfg.actor_lr),
        critic_adam=AdamState(lr=cfg.critic_lr),
        act_lo=spec.act_lo.copy(),
        act_hi=spec.act_hi.copy(),
    )


def select_action(st: AgentState, obs, cfg: AgentConfig, rng=None, explore: bool = False):
    """pi(obs), plus clipped Gaussian exploration noise when explore is set.

    Exploration scale is cfg.sigma_expl times the action half-width, so the
    configured value reads as a fraction of the action range.
    """
    obs = np.asarray(obs, dtype=float)
    action = forward(st.actor, obs)
    if explore:
        if rng is None:
            raise ValueError("exploration requires an rng")
        action = action + cfg.sigma_expl * st.act_half * rng.standard_normal(action.shape)
    return np.clip(action, st.act_lo, st.act_hi)


def _critic_value(net: Mlp, obs: np.ndarray, act: np.ndarray) -> np.ndarray:
    return forward(net, np.concatenate([obs, act], axis=-1))


def _check_finite(name: str, value: float) -> float:
    if not np.isfinite(value):
        raise FloatingPointError(f"{name} is not finite")
    return float(value)


def ddpg_critic_update(st: AgentState, batch, cfg: AgentConfig) -> float:
    """One Adam step on mean squared TD error / 2; returns the loss."""
    obs, act, rew, nxt, done = batch
    b = obs.shape[0]
    next_act = forward(st.target_actor, nxt)
    target_q = _critic_value(st.target_critic, nxt, next_act)[:, 0]
    y = rew + cfg.gamma * (1.0 - done) * target_q
    x = np.concatenate([obs, act], axis=-1)
    q = forward(st.critic, x)
    loss = _check_finite("critic loss", float(np.mean((q[:, 0] - y) ** 2)) / 2.0)
    upstream = (q - y[:, None]) / b
    grads, _ = backward(st.critic, x, upstream)
    adam_step(st.critic.params(), grads, st.critic_adam)
    return loss


def ddpg_actor_update(st: AgentState, batch, cfg: AgentConfig) -> float:
    """One ascent step on mean_s Q(s, pi(s)); returns that objective value.

    Critic parameters stay frozen; only its input gradient is used.
    """
    obs = batch[0]
    b = obs.shape[0]
    pi = forward(st.actor, obs)
    x = np.concatenate([obs, pi], axis=-1)
    q = forward(st.critic, x)
    value = _check_finite("actor objective", float(np.mean(q)))
    _, input_grad = backward(st.critic, x, np.full((b, 1), 1.0 / b))
    dq_da = input_grad[:, obs.shape[1]:]
    grads, _ = backward(st.actor, obs, dq_da)
    adam_step(st.actor.params(), [-g for g in grads], st.actor_adam)
    return value


def soft_critic_update(st: AgentState, batch, cfg: AgentConfig, rng) -> float:
    """N-perturbation target regression; returns the loss."""
    obs, act, rew, nxt, done = batch
    b, n = obs.shape[0], cfg.n_smooth
    m = st.act_lo.size
    next_act = forward(st.target_actor, nxt)
    noise = rng.standard_normal((b, n, m))
    noisy = np.clip(next_act[:, None, :] + cfg.sigma * noise, st.act_lo, st.act_hi)
    nxt_rep = np.repeat(nxt[:, None, :], n, axis=1).reshape(b * n, -1)
    target_q = _critic_value(st.target_critic, nxt_rep, noisy.reshape(b * n, m))
    y = rew[:, None] + cfg.gamma * (1.0 - done)[:, None] * target_q.reshape(b, n)
    x = np.concatenate([obs, act], axis=-1)
    q = forward(st.critic, x)
    loss = _check_finite("critic loss", float(np.mean((y - q[:, :1]) ** 2)) / 2.0)
    upstream = (q - y.mean(axis=1, keepdims=True)) / b
    grads, _ = backward(st.critic, x, upstream)
    adam_step(st.critic.params(), grads, st.critic_adam)
    return loss


def actor_noise_gradient(pi: np.ndarray, noisy: np.ndarray, q: np.ndarray, sigma: float):
    """Per-state gradient of the smoothed actor loss with respect to pi.

    pi: (B, m) policy actions; noisy: (B, N, m) perturbed actions, already
    treated as constants; q: (B, N) critic values at the perturbed actions.
    Returns (B, m) rows -(1 / N sigma^2) sum_i q_i (a_i - pi). The negative
    of a row is the score-form estimate of grad_a E[Q(s, a + sigma w)] at pi.
    """
    diff = noisy - pi[:, None, :]
    return -(q[..., None] * diff).mean(axis=1) / (sigma * sigma)


def soft_actor_update(st: AgentState, batch, cfg: AgentConfig, rng) -> float:
    """One Adam step on the noise-weighted actor loss; returns the loss."""
    obs = batch[0]
    b, n = obs.shape[0], cfg.n_smooth
    m = st.act_lo.size
    pi = forward(st.actor, obs)
    noise = rng.standard_normal((b, n, m))
    noisy = np.clip(pi[:, None, :] + cfg.sigma * noise, st.act_lo, st.act_hi)
    obs_rep = np.repeat(obs[:, None, :], n, axis=1).reshape(b * n, -1)
    q = _critic_value(st.critic, obs_rep, noisy.reshape(b * n, m)).reshape(b, n)
    diff = noisy - pi[:, None, :]
    loss = float(np.mean(np.sum(diff * diff, axis=-1) * q)) / (2.0 * cfg.sigma**2)
    _check_finite("actor loss", loss)
    upstream = actor_noise_gradient(pi, noisy, q, cfg.sigma) / b
    grads, _ = backward(st.actor, obs, upstream)
    adam_step(st.actor.params(), grads, st.actor_adam)
    return loss


def train_step(st: AgentState, env, buf, cfg: AgentConfig, rng, obs):
    """One environment step plus (after warmup) one update of everything.

    During the first warmup_steps environment steps the action is uniform
    in the action box and no parameters change. Afterwards each call runs
    exactly one critic update, one actor update, and one Polyak update of
    both targets. Returns (StepResult, metrics dict).
    """
    from .replay import Transition

    if st.step < cfg.warmup_steps:
        action = rng.uniform(st.act_lo, st.act_hi)
    else:
        action = select_action(st, obs, cfg, rng, explore=True)
    out = env.step(action)
    buf.push(Transition(np.asarray(obs, dtype=float), action, out.reward,
                        out.obs, out.terminated, out.truncated))
    metrics = {"reward": out.reward, "critic_loss": float("nan"),
               "actor_metric": float("nan")}
    if st.step >= cfg.warmup_steps:
        batch = buf.sample_arrays(cfg.batch, rng)
        if st.algo == "ddpg":
            metrics["critic_loss"] = ddpg_critic_update(st, batch, cfg)
            metrics["actor_metric"] = ddpg_actor_update(st, batch, cfg)
        else:
            metrics["critic_loss"] = soft_critic_update(st, batch, cfg, rng)
            metrics["actor_metric"] = soft_actor_update(st, batch, cfg, rng)
        polyak_update(st.target_critic, st.critic, cfg.tau)
        polyak_update(st.target_actor, st.actor, cfg.tau)
    st.step += 1
    return out, metrics
