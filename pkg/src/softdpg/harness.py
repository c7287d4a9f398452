"""Training runs, evaluation, landscape export, theory checks, sweeps.

A run is driven by a TrainConfig (JSON on disk). Per seed it produces a
log CSV plus a final checkpoint; the exact config and a schema version are
copied into the output directory. Every random draw comes from a named
substream of the seed, and wall_ms is recorded as 0.0, so artifacts are
byte-identical across re-runs of the same config.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .agents import (
    ALGO_IDS,
    AgentConfig,
    AgentState,
    ddpg_actor_update,
    ddpg_critic_update,
    init_agent,
    select_action,
    soft_actor_update,
    soft_critic_update,
)
from .envs import ENV_IDS, make_env
from .mdp_lab import (
    CheckRow,
    TabularPolicy,
    action_grid,
    check_gradient_bellman,
    check_q_error_bound,
    check_q_lipschitz,
    check_q_neq_smoothed_q,
    check_v_error_bound,
    dpg_limit_check,
    j_sigma,
    smoothed_q,
    soft_dpg_gradient_oracle,
    verification_features,
    verification_mdp,
    verify_contraction,
)
from .nn import (
    AdamState,
    backward,
    forward,
    load_checkpoint,
    mlp_from_dict,
    mlp_to_dict,
    polyak_update,
    save_checkpoint,
)
from .replay import ReplayBuffer, Transition
from .seeding import substream
from .smoothing import SmoothingConfig

__all__ = [
    "SCHEMA_VERSION",
    "LOG_COLUMNS",
    "REPORT_COLUMNS",
    "TrainConfig",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "apply_overrides",
    "cmd_train",
    "cmd_eval",
    "cmd_landscape",
    "run_theory_checks",
    "cmd_sweep",
]

SCHEMA_VERSION = "1"
LOG_COLUMNS = (
    "seed",
    "env_step",
    "episode",
    "episodic_return",
    "eval_return_mean",
    "actor_loss",
    "critic_loss",
    "wall_ms",
)
REPORT_COLUMNS = ("check", "sigma", "observed", "bound", "tolerance", "pass")

_AGENT_FIELDS = {f.name for f in dataclasses.fields(AgentConfig)}
_TOP_FIELDS = {
    "env_id",
    "agent_id",
    "total_steps",
    "eval_every",
    "eval_episodes",
    "seeds",
    "agent",
    "output_dir",
}


@dataclass(frozen=True)
class TrainConfig:
    env_id: str
    agent_id: str
    total_steps: int
    seeds: tuple
    output_dir: str
    agent: AgentConfig = AgentConfig()
    eval_every: int = 1000
    eval_episodes: int = 10

    def __post_init__(self):
        if self.env_id not in ENV_IDS:
            raise ValueError(f"unknown env id {self.env_id!r}; known: {', '.join(ENV_IDS)}")
        if self.agent_id not in ALGO_IDS:
            raise ValueError(f"unknown agent id {self.agent_id!r}; known: {', '.join(ALGO_IDS)}")
        seeds = tuple(int(s) for s in self.seeds)
        object.__setattr__(self, "seeds", seeds)
        if not seeds:
            raise ValueError("seeds must be nonempty")
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        if self.total_steps < self.agent.warmup_steps:
            raise ValueError("total_steps must be at least the warmup length")
        if self.eval_every < 1 or self.eval_episodes < 1:
            raise ValueError("eval cadence and episode count must be positive")


def config_from_dict(data: dict) -> TrainConfig:
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(data) - _TOP_FIELDS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    missing = {"env_id", "agent_id", "total_steps", "seeds", "output_dir"} - set(data)
    if missing:
        raise ValueError(f"missing config keys: {', '.join(sorted(missing))}")
    agent_data = dict(data.get("agent", {}))
    bad = set(agent_data) - _AGENT_FIELDS
    if bad:
        raise ValueError(f"unknown agent config keys: {', '.join(sorted(bad))}")
    if "hidden" in agent_data:
        agent_data["hidden"] = tuple(int(h) for h in agent_data["hidden"])
    kwargs = {k: v for k, v in data.items() if k != "agent"}
    kwargs["seeds"] = tuple(kwargs["seeds"])
    return TrainConfig(agent=AgentConfig(**agent_data), **kwargs)


def config_to_dict(cfg: TrainConfig) -> dict:
    agent = dataclasses.asdict(cfg.agent)
    agent["hidden"] = list(agent["hidden"])
    return {
        "env_id": cfg.env_id,
        "agent_id": cfg.agent_id,
        "total_steps": cfg.total_steps,
        "eval_every": cfg.eval_every,
        "eval_episodes": cfg.eval_episodes,
        "seeds": list(cfg.seeds),
        "agent": agent,
        "output_dir": cfg.output_dir,
    }


def load_config(path, overrides=()) -> TrainConfig:
    with open(path) as fh:
        data = json.load(fh)
    return config_from_dict(apply_overrides(data, overrides))


def apply_overrides(data: dict, overrides) -> dict:
    """Dotted key=value assignments; values parse as JSON, else strings."""
    out = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {key!r} descends through a non-object")
        node[parts[-1]] = value
    return out


# ---------------------------------------------------------------------------
# deterministic text artifacts


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path, columns, rows):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _param_hash(st: AgentState) -> str:
    h = hashlib.sha256()
    for net in (st.actor, st.critic, st.target_actor, st.target_critic):
        for p in net.params():
            h.update(np.ascontiguousarray(p).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# training


def _greedy_returns(st: AgentState, env, acfg: AgentConfig, episodes: int, rng) -> np.ndarray:
    """Noise-free rollouts. Parameters must come back untouched."""
    before = _param_hash(st)
    returns = np.zeros(episodes)
    for e in range(episodes):
        obs = env.reset(rng)
        total = 0.0
        while True:
            out = env.step(select_action(st, obs, acfg))
            total += out.reward
            if out.terminated or out.truncated:
                break
            obs = out.obs
        returns[e] = total
    if _param_hash(st) != before:
        raise AssertionError("evaluation must not change parameters")
    return returns


def _checkpoint_payload(cfg: TrainConfig, seed: int, st: AgentState) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "env_id": cfg.env_id,
        "agent_id": cfg.agent_id,
        "seed": seed,
        "steps": st.step,
        "agent_config": config_to_dict(cfg)["agent"],
        "actor": mlp_to_dict(st.actor),
        "critic": mlp_to_dict(st.critic),
        "target_actor": mlp_to_dict(st.target_actor),
        "target_critic": mlp_to_dict(st.target_critic),
    }


def _run_seed(cfg: TrainConfig, seed: int):
    """Train one seed; returns (log rows, final state, final eval rows)."""
    env = make_env(cfg.env_id)
    eval_env = make_env(cfg.env_id)
    acfg = cfg.agent
    st = init_agent(acfg, env.spec, substream(seed, "agent-init"), cfg.agent_id)
    buf = ReplayBuffer(cfg.total_steps)
    env_rng = substream(seed, "env")
    expl_rng = substream(seed, "exploration")
    sample_rng = substream(seed, "sampling")
    smooth_rng = substream(seed, "smoothing")
    eval_rng = substream(seed, "eval")

    obs = env.reset(env_rng)
    episode_return, episodes_done, last_return = 0.0, 0, 0.0
    critic_loss = actor_loss = 0.0
    rows = []
    for step in range(1, cfg.total_steps + 1):
        if st.step < acfg.warmup_steps:
            action = expl_rng.uniform(st.act_lo, st.act_hi)
        else:
            action = select_action(st, obs, acfg, expl_rng, explore=True)
        out = env.step(action)
        buf.push(
            Transition(
                np.asarray(obs, dtype=float),
                np.asarray(action, dtype=float),
                out.reward,
                out.obs,
                out.terminated,
                out.truncated,
            )
        )
        episode_return += out.reward
        if st.step >= acfg.warmup_steps:
            batch = buf.sample_arrays(acfg.batch, sample_rng)
            if st.algo == "ddpg":
                critic_loss = ddpg_critic_update(st, batch, acfg)
                actor_loss = ddpg_actor_update(st, batch, acfg)
            else:
                critic_loss = soft_critic_update(st, batch, acfg, smooth_rng)
                actor_loss = soft_actor_update(st, batch, acfg, smooth_rng)
            polyak_update(st.target_critic, st.critic, acfg.tau)
            polyak_update(st.target_actor, st.actor, acfg.tau)
        st.step += 1
        if out.terminated or out.truncated:
            episodes_done += 1
            last_return = episode_return
            episode_return = 0.0
            obs = env.reset(env_rng)
        else:
            obs = out.obs
        if step % cfg.eval_every == 0 or step == cfg.total_steps:
            evals = _greedy_returns(st, eval_env, acfg, cfg.eval_episodes, eval_rng)
            rows.append(
                (
                    seed,
                    step,
                    episodes_done,
                    last_return,
                    float(evals.mean()),
                    actor_loss,
                    critic_loss,
                    0.0,
                )
            )
    return rows, st


def cmd_train(cfg: TrainConfig) -> list[dict]:
    """Run every seed; returns per-seed summaries sorted by seed."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    provenance = {"schema_version": SCHEMA_VERSION, "config": config_to_dict(cfg)}
    with open(os.path.join(cfg.output_dir, "config.json"), "w") as fh:
        json.dump(provenance, fh, indent=2, sort_keys=True)
        fh.write("\n")
    summaries = []
    for seed in cfg.seeds:
        rows, st = _run_seed(cfg, seed)
        seed_dir = os.path.join(cfg.output_dir, f"seed_{seed}")
        os.makedirs(seed_dir, exist_ok=True)
        log_path = os.path.join(seed_dir, "log.csv")
        _write_csv(log_path, LOG_COLUMNS, rows)
        ckpt_path = os.path.join(seed_dir, "checkpoint.json")
        save_checkpoint(ckpt_path, _checkpoint_payload(cfg, seed, st))
        summaries.append(
            {
                "seed": seed,
                "final_eval_mean": rows[-1][4],
                "log": log_path,
                "checkpoint": ckpt_path,
            }
        )
    return sorted(summaries, key=lambda s: s["seed"])


# ---------------------------------------------------------------------------
# evaluation and landscape export


def _state_from_checkpoint(payload: dict, env) -> AgentState:
    actor = mlp_from_dict(payload["actor"])
    critic = mlp_from_dict(payload["critic"])
    if actor.layer_sizes[0] != env.spec.obs_dim or actor.layer_sizes[-1] != env.spec.act_dim:
        raise ValueError(
            f"checkpoint actor is {actor.layer_sizes[0]}->{actor.layer_sizes[-1]} "
            f"but env wants {env.spec.obs_dim}->{env.spec.act_dim}"
        )
    if critic.layer_sizes[0] != env.spec.obs_dim + env.spec.act_dim:
        raise ValueError("checkpoint critic input does not match obs_dim + act_dim")
    return AgentState(
        algo=payload["agent_id"],
        actor=actor,
        critic=critic,
        target_actor=mlp_from_dict(payload["target_actor"]),
        target_critic=mlp_from_dict(payload["target_critic"]),
        actor_adam=AdamState(lr=1.0),
        critic_adam=AdamState(lr=1.0),
        act_lo=env.spec.act_lo.copy(),
        act_hi=env.spec.act_hi.copy(),
        step=int(payload.get("steps", 0)),
    )


def cmd_eval(checkpoint_path, env_id: str, episodes: int, seed: int):
    """Greedy evaluation of a checkpoint. Returns (mean, std) of returns."""
    if episodes < 1:
        raise ValueError("episodes must be positive")
    payload = load_checkpoint(checkpoint_path)
    env = make_env(env_id)
    st = _state_from_checkpoint(payload, env)
    acfg = AgentConfig(**{
        k: (tuple(v) if k == "hidden" else v)
        for k, v in payload["agent_config"].items()
    })
    returns = _greedy_returns(st, env, acfg, episodes, substream(seed, "eval"))
    return float(returns.mean()), float(returns.std())


def cmd_landscape(checkpoint_path, grid_step: float, out_path) -> int:
    """Critic slice over the bandit's action range; returns the row count.

    Writes columns a, q, abs_grad with q = Q(s, a) at the bandit's constant
    observation and abs_grad = |dQ/da| from the exact input gradient.
    """
    if not 0.0 < grid_step <= 2.0:
        raise ValueError("grid_step must lie in (0, 2]")
    payload = load_checkpoint(checkpoint_path)
    if payload["env_id"] != "toy":
        raise ValueError("landscape export expects a toy-env checkpoint")
    critic = mlp_from_dict(payload["critic"])
    n = int(round(2.0 / grid_step)) + 1
    actions = np.linspace(-1.0, 1.0, n)
    x = np.column_stack([np.ones(n), actions])
    q = forward(critic, x)[:, 0]
    _, input_grad = backward(critic, x, 1.0)
    abs_grad = np.abs(input_grad[:, 1])
    _write_csv(out_path, ("a", "q", "abs_grad"), zip(actions, q, abs_grad))
    return n


# ---------------------------------------------------------------------------
# theory certification


def run_theory_checks(
    out_dir,
    sigmas=(0.05, 0.1, 0.2),
    seed: int = 0,
    trials: int = 1000,
    trajectories: int = 4000,
    horizon: int = 150,
    gamma: float = 0.9,
):
    """Every tabular-lab check on the built-in verification MDP.

    Writes one CSV per check family plus a combined report.csv, all with
    columns check,sigma,observed,bound,tolerance,pass. Returns (rows, ok).
    """
    os.makedirs(out_dir, exist_ok=True)
    mdp = verification_mdp(gamma)
    feats = verification_features()
    grid = action_grid()
    pol = TabularPolicy.linear([0.3], feats)
    cfg = SmoothingConfig(sigma=0.2)

    families: dict[str, list[CheckRow]] = {}

    con = verify_contraction(
        mdp, pol, cfg, trials=trials, rng=substream(seed, "contraction"), grid=grid
    )
    rows = con.rows()
    for r in rows:
        r.sigma = cfg.sigma
    families["contraction"] = rows

    families["v_bound"] = check_v_error_bound(mdp, pol, sigmas, cfg, grid).rows()
    families["q_bound"] = check_q_error_bound(mdp, pol, sigmas, cfg, grid).rows()

    lip_rows = []
    for sigma in sigmas:
        rep = check_q_lipschitz(smoothed_q(mdp, pol, sigma, grid), mdp.l_q)
        row = rep.rows()[0]
        row.sigma = sigma
        lip_rows.append(row)
    families["q_lipschitz"] = lip_rows

    families["q_bias"] = [check_q_neq_smoothed_q(mdp, pol, 0.2, cfg, grid)]

    t1_rows = []
    h = 1e-5
    for i, theta in enumerate((0.3, 0.8, 1.6)):
        grad, se = soft_dpg_gradient_oracle(
            mdp,
            [theta],
            cfg,
            horizon=horizon,
            num_trajectories=trajectories,
            rng=substream(seed, f"mc-gradient-{i}"),
            grid=grid,
        )
        fd = (j_sigma(mdp, [theta + h], cfg, grid=grid) - j_sigma(mdp, [theta - h], cfg, grid=grid)) / (2 * h)
        gap = float(abs(grad[0] - fd))
        budget = float(4.0 * se[0])
        t1_rows.append(CheckRow("policy_gradient_mc", cfg.sigma, gap, budget, 0.0, gap <= budget))
    families["policy_gradient"] = t1_rows

    families["dpg_limit"] = dpg_limit_check(mdp, [0.3], [0.5, 0.2, 0.05, 0.01], cfg, grid=grid).rows()
    families["gradient_bellman"] = [check_gradient_bellman(mdp, [0.3], cfg)]

    all_rows: list[CheckRow] = []
    for name, rows in families.items():
        tuples = [(r.check, r.sigma, r.observed, r.bound, r.tolerance, r.passed) for r in rows]
        _write_csv(os.path.join(out_dir, f"{name}.csv"), REPORT_COLUMNS, tuples)
        all_rows.extend(rows)
    _write_csv(
        os.path.join(out_dir, "report.csv"),
        REPORT_COLUMNS,
        [(r.check, r.sigma, r.observed, r.bound, r.tolerance, r.passed) for r in all_rows],
    )
    return all_rows, all(r.passed for r in all_rows)


# ---------------------------------------------------------------------------
# sensitivity sweep


def cmd_sweep(param: str, values, base: dict) -> list[dict]:
    """One training run per value of sigma or N; writes a summary CSV."""
    if param not in ("sigma", "n"):
        raise ValueError("param must be 'sigma' or 'n'")
    if not values:
        raise ValueError("values must be nonempty")
    base_cfg = config_from_dict(base)
    root = base_cfg.output_dir
    os.makedirs(root, exist_ok=True)
    summary = []
    for value in values:
        data = json.loads(json.dumps(base))
        agent = data.setdefault("agent", {})
        if param == "sigma":
            agent["sigma"] = float(value)
        else:
            agent["n_smooth"] = int(value)
        tag = _fmt(float(value) if param == "sigma" else int(value))
        data["output_dir"] = os.path.join(root, f"{param}_{tag}")
        runs = cmd_train(config_from_dict(data))
        finals = np.array([r["final_eval_mean"] for r in runs])
        summary.append(
            {
                "param": param,
                "value": float(value),
                "eval_return_mean": float(finals.mean()),
                "eval_return_std": float(finals.std()),
            }
        )
    _write_csv(
        os.path.join(root, "summary.csv"),
        ("param", "value", "eval_return_mean", "eval_return_std"),
        [(s["param"], s["value"], s["eval_return_mean"], s["eval_return_std"]) for s in summary],
    )
    return summary
