"""Natively implemented episodic control environments.

Three tasks behind one stepping interface: a one-step interval bandit, the
classic torque-limited pendulum swing-up, and continuous mountain car. The
pendulum and mountain car each come in two reward modes that share bitwise
identical dynamics:

  dense     the usual shaped benchmark reward
  discrete  sparse banded rewards plus one-time-per-episode milestone
            bonuses, tracked by a ledger that resets with the episode

Episodes end by termination (the environment reached a final state; no
bootstrap) or truncation (horizon ran out; bootstrapping may continue).
Stepping a finished episode raises EnvUsageError instead of guessing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EnvSpec",
    "StepResult",
    "EnvUsageError",
    "Env",
    "ToyBandit",
    "Pendulum",
    "MountainCar",
    "make_env",
    "ENV_IDS",
]


class EnvUsageError(RuntimeError):
    """Interface misuse: stepping before reset or after episode end."""


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    act_dim: int
    act_lo: np.ndarray
    act_hi: np.ndarray
    max_steps: int

    def __post_init__(self):
        object.__setattr__(self, "act_lo", np.asarray(self.act_lo, dtype=float))
        object.__setattr__(self, "act_hi", np.asarray(self.act_hi, dtype=float))
        if self.act_lo.shape != (self.act_dim,) or self.act_hi.shape != (self.act_dim,):
            raise ValueError("action bounds must be act_dim-vectors")
        if not np.all(self.act_lo < self.act_hi):
            raise ValueError("act_lo must be strictly below act_hi")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    components: dict[str, float] = field(default_factory=dict)


class Env:
    """Base: holds the spec, step counting, and episode-state bookkeeping."""

    spec: EnvSpec

    def __init__(self, spec: EnvSpec):
        self.spec = spec
        self._steps = 0
        self._live = False

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._steps = 0
        self._live = True
        return self._do_reset(rng)

    def step(self, action) -> StepResult:
        if not self._live:
            raise EnvUsageError("episode is not running; call reset first")
        action = np.atleast_1d(np.asarray(action, dtype=float))
        if action.shape != (self.spec.act_dim,):
            raise ValueError(f"action must have shape ({self.spec.act_dim},)")
        if not np.all(np.isfinite(action)):
            raise ValueError("action must be finite")
        action = np.clip(action, self.spec.act_lo, self.spec.act_hi)
        self._steps += 1
        result = self._do_step(action)
        result.truncated = result.truncated or self._steps >= self.spec.max_steps
        if result.terminated or result.truncated:
            self._live = False
        return result

    def _do_reset(self, rng) -> np.ndarray:
        raise NotImplementedError

    def _do_step(self, action) -> StepResult:
        raise NotImplementedError


class ToyBandit(Env):
    """Single dummy state; reward 1 iff the action lands in a narrow interval.

    The interval is (0.5 - epsilon, 0.5 + epsilon), strict at both ends.
    Episodes run a fixed number of steps and never terminate early.
    """

    def __init__(self, epsilon: float = 0.05, horizon: int = 200):
        if not 0.0 < epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 0.5)")
        super().__init__(EnvSpec(1, 1, [-1.0], [1.0], horizon))
        self.epsilon = float(epsilon)

    def _do_reset(self, rng):
        return np.array([1.0])

    def _do_step(self, action):
        hit = abs(float(action[0]) - 0.5) < self.epsilon
        return StepResult(np.array([1.0]), 1.0 if hit else 0.0, False, False,
                          {"hit": 1.0 if hit else 0.0})


def _wrap_angle(x: float) -> float:
    """Map to (-pi, pi]."""
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y <= 0.0:
        y += 2.0 * math.pi
    return y - math.pi


class Pendulum(Env):
    """Torque-limited pendulum swing-up.

    State (theta, theta_dot) with theta in (-pi, pi], theta_dot in [-8, 8];
    observation (cos theta, sin theta, theta_dot); torque in [-2, 2].
    Dynamics: theta_ddot = (3g / 2l) sin theta + (3 / m l^2) u, Euler step
    dt = 0.05 with g=10, m=1, l=1. Never terminates; truncates at 200 steps.

    dense reward (pre-step state, current torque):
        -(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)
    discrete reward (post-step state): angle band 8/4/2/0.5 at |theta| <
    0.10/0.25/0.50/1.00; when |theta| < 0.25 a velocity bonus of 4 if
    |theta_dot| < 0.5 else 2 if |theta_dot| < 1.0; a hold counter runs while
    |theta| < 0.15 and |theta_dot| < 0.7 and pays one-time 20/40/80 on first
    reaching 10/30/60 consecutive steps.
    """

    G, M, L, DT = 10.0, 1.0, 1.0, 0.05
    MAX_SPEED = 8.0
    HOLD_BONUSES = ((10, 20.0), (30, 40.0), (60, 80.0))

    def __init__(self, reward_mode: str = "dense"):
        if reward_mode not in ("dense", "discrete"):
            raise ValueError("reward_mode must be 'dense' or 'discrete'")
        super().__init__(EnvSpec(3, 1, [-2.0], [2.0], 200))
        self.reward_mode = reward_mode
        self.theta = 0.0
        self.theta_dot = 0.0
        self._hold = 0
        self._granted: set[int] = set()

    def _obs(self):
        return np.array([math.cos(self.theta), math.sin(self.theta), self.theta_dot])

    def _do_reset(self, rng):
        self.theta = _wrap_angle(rng.uniform(-math.pi, math.pi))
        self.theta_dot = rng.uniform(-1.0, 1.0)
        self._hold = 0
        self._granted = set()
        return self._obs()

    def _do_step(self, action):
        u = float(action[0])
        th, thd = self.theta, self.theta_dot
        thd = thd + (1.5 * self.G / self.L * math.sin(th) + 3.0 / (self.M * self.L**2) * u) * self.DT
        thd = min(max(thd, -self.MAX_SPEED), self.MAX_SPEED)
        th = _wrap_angle(th + thd * self.DT)
        self.theta, self.theta_dot = th, thd

        components: dict[str, float] = {}
        if self.reward_mode == "dense":
            # cost on the pre-step state and the torque that was applied
            reward = -(self._last_th**2 + 0.1 * self._last_thd**2 + 0.001 * u**2)
            components["cost"] = reward
        else:
            reward = self._discrete_reward(components)
        return StepResult(self._obs(), reward, False, False, components)

    def step(self, action):
        # remember pre-step state for the dense cost before advancing
        self._last_th, self._last_thd = self.theta, self.theta_dot
        return super().step(action)

    def _discrete_reward(self, components):
        th, thd = abs(self.theta), abs(self.theta_dot)
        band = 0.0
        if th < 0.10:
            band = 8.0
        elif th < 0.25:
            band = 4.0
        elif th < 0.50:
            band = 2.0
        elif th < 1.00:
            band = 0.5
        reward = band
        if band:
            components["band"] = band
        if th < 0.25:
            bonus = 4.0 if thd < 0.5 else (2.0 if thd < 1.0 else 0.0)
            if bonus:
                components["velocity_bonus"] = bonus
                reward += bonus
        if th < 0.15 and thd < 0.7:
            self._hold += 1
            for need, pay in self.HOLD_BONUSES:
                if self._hold >= need and need not in self._granted:
                    self._granted.add(need)
                    components[f"hold_{need}"] = pay
                    reward += pay
        else:
            self._hold = 0
        return reward


class MountainCar(Env):
    """Continuous mountain car.

    State (x, v) with x in [-1.2, 0.6], v in [-0.07, 0.07]; action in
    [-1, 1]. v += 0.0015 a - 0.0025 cos(3x), both clamped; hitting the left
    wall zeroes negative velocity. Starts at x ~ U[-0.6, -0.4], v = 0;
    terminates at x >= 0.45; truncates at 999 steps.

    dense reward: -0.1 u^2 per step, +100 at the goal.
    discrete reward: -0.01 per step, one-time +10 on first reaching
    x < -0.7 (backward swing), one-time +20 on first x > -0.1, +100 at goal.
    """

    X_LO, X_HI, V_MAX, GOAL = -1.2, 0.6, 0.07, 0.45

    def __init__(self, reward_mode: str = "dense"):
        if reward_mode not in ("dense", "discrete"):
            raise ValueError("reward_mode must be 'dense' or 'discrete'")
        super().__init__(EnvSpec(2, 1, [-1.0], [1.0], 999))
        self.reward_mode = reward_mode
        self.x = 0.0
        self.v = 0.0
        self._granted: set[str] = set()

    def _obs(self):
        return np.array([self.x, self.v])

    def _do_reset(self, rng):
        self.x = rng.uniform(-0.6, -0.4)
        self.v = 0.0
        self._granted = set()
        return self._obs()

    def _do_step(self, action):
        a = float(action[0])
        v = self.v + 0.0015 * a - 0.0025 * math.cos(3.0 * self.x)
        v = min(max(v, -self.V_MAX), self.V_MAX)
        x = min(max(self.x + v, self.X_LO), self.X_HI)
        if x <= self.X_LO and v < 0.0:
            v = 0.0
        self.x, self.v = x, v

        goal = x >= self.GOAL
        components: dict[str, float] = {}
        if self.reward_mode == "dense":
            reward = -0.1 * a * a
            components["effort"] = reward
        else:
            reward = -0.01
            components["step_penalty"] = -0.01
            for name, hit, pay in (
                ("backswing", x < -0.7, 10.0),
                ("forward", x > -0.1, 20.0),
            ):
                if hit and name not in self._granted:
                    self._granted.add(name)
                    components[name] = pay
                    reward += pay
        if goal:
            components["goal"] = 100.0
            reward += 100.0
        return StepResult(self._obs(), reward, goal, False, components)


ENV_IDS = (
    "toy",
    "pendulum-dense",
    "pendulum-discrete",
    "mountaincar-dense",
    "mountaincar-discrete",
)


def make_env(env_id: str) -> Env:
    if env_id == "toy":
        return ToyBandit()
    if env_id.startswith("pendulum-"):
        mode = env_id.split("-", 1)[1]
        if mode in ("dense", "discrete"):
            return Pendulum(mode)
    if env_id.startswith("mountaincar-"):
        mode = env_id.split("-", 1)[1]
        if mode in ("dense", "discrete"):
            return MountainCar(mode)
    raise ValueError(f"unknown env id {env_id!r}; known: {', '.join(ENV_IDS)}")
