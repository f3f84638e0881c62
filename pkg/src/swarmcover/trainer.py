"""Training orchestration, evaluation, and trajectory export.

One learner drives a set of independently seeded environments in lockstep.
Every episode: reset all of them, roll the shared policy forward step by
step, then run one update over the pooled trajectories. Per-episode metrics
stream to ``metrics.csv`` (a raw row per episode plus an averaged row every
``metric_window``), and checkpoints land beside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import EnvConfig, RunConfig, build_run_config
from .env import N_ACTIONS, CoverageEnv, observation_dim
from .policy import ActorCriticPolicy
from .ppo import PPOUpdater, RolloutBatch, compute_gae, compute_returns

__all__ = [
    "EpisodeMetrics",
    "Trainer",
    "policy_from_checkpoint",
    "evaluate",
    "export_trajectory",
    "METRICS_HEADER",
    "CHECKPOINT_INTERVAL",
]

METRICS_HEADER = (
    "episode,row_type,mean_reward,coverage_index,energy_index,"
    "connected_fraction,actor_loss,critic_loss"
)
CHECKPOINT_INTERVAL = 100


@dataclass
class EpisodeMetrics:
    episode: int
    mean_reward: float
    coverage_index: float
    energy_index: float
    connected_fraction: float
    actor_loss: float
    critic_loss: float

    def row(self, row_type: str = "raw") -> str:
        values = [
            self.mean_reward,
            self.coverage_index,
            self.energy_index,
            self.connected_fraction,
            self.actor_loss,
            self.critic_loss,
        ]
        return f"{self.episode},{row_type}," + ",".join(repr(v) for v in values)


def _mean_metrics(window: list[EpisodeMetrics]) -> EpisodeMetrics:
    return EpisodeMetrics(
        episode=window[-1].episode,
        mean_reward=float(np.mean([m.mean_reward for m in window])),
        coverage_index=float(np.mean([m.coverage_index for m in window])),
        energy_index=float(np.mean([m.energy_index for m in window])),
        connected_fraction=float(np.mean([m.connected_fraction for m in window])),
        actor_loss=float(np.mean([m.actor_loss for m in window])),
        critic_loss=float(np.mean([m.critic_loss for m in window])),
    )


class Trainer:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.envs = [CoverageEnv(cfg.env) for _ in range(cfg.parallel_envs)]
        init_ss, scenario_ss, action_ss = np.random.SeedSequence(cfg.seed).spawn(3)
        self.policy = ActorCriticPolicy(
            cfg.arch,
            observation_dim(cfg.env),
            cfg.env.n_uavs,
            N_ACTIONS,
            encoder_widths=cfg.train.encoder_widths,
            head_hidden=cfg.train.head_hidden,
            self_mix=cfg.train.self_mix,
            seed=init_ss,
        )
        self.updater = PPOUpdater(self.policy, cfg.train)
        self._scenario_rng = np.random.default_rng(scenario_ss)
        self._action_rng = np.random.default_rng(action_ss)
        self.out_dir = Path(cfg.out_dir)
        self.metrics_path = self.out_dir / "metrics.csv"
        self.final_checkpoint_path = self.out_dir / "checkpoint_final.ckpt"

    def run(self) -> list[EpisodeMetrics]:
        """Train for the configured number of episodes; returns raw per-episode metrics."""
        cfg = self.cfg
        self.out_dir.mkdir(parents=True, exist_ok=True)
        history: list[EpisodeMetrics] = []
        window: list[EpisodeMetrics] = []
        with open(self.metrics_path, "w", encoding="utf-8") as metrics_file:
            metrics_file.write(METRICS_HEADER + "\n")
            for episode in range(1, cfg.episodes + 1):
                batch, stats = self._rollout()
                diag = self.updater.update(batch)
                metrics = EpisodeMetrics(
                    episode=episode,
                    actor_loss=diag["actor_loss"],
                    critic_loss=diag["critic_loss"],
                    **stats,
                )
                history.append(metrics)
                window.append(metrics)
                metrics_file.write(metrics.row("raw") + "\n")
                if episode % cfg.metric_window == 0:
                    metrics_file.write(_mean_metrics(window).row("avg") + "\n")
                    window.clear()
                metrics_file.flush()
                if episode % CHECKPOINT_INTERVAL == 0:
                    self._save(self.out_dir / f"checkpoint_ep{episode:06d}.ckpt")
            self._save(self.final_checkpoint_path)
        return history

    def _save(self, path: Path) -> None:
        save_checkpoint(path, self.cfg, self.policy.named_parameters())

    def _rollout(self) -> tuple[RolloutBatch, dict[str, float]]:
        cfg = self.cfg
        n_envs, n_agents = cfg.parallel_envs, cfg.env.n_uavs
        steps = cfg.env.episode_len
        obs_dim = self.policy.obs_dim

        obs = np.empty((n_envs, n_agents, obs_dim))
        adj = np.empty((n_envs, n_agents, n_agents))
        for e, env in enumerate(self.envs):
            seed = int(self._scenario_rng.integers(0, 2**63))
            _, obs[e], adj[e] = env.reset(seed)

        obs_buf = np.empty((steps, n_envs, n_agents, obs_dim))
        adj_buf = np.empty((steps, n_envs, n_agents, n_agents))
        act_buf = np.empty((steps, n_envs, n_agents), dtype=np.int64)
        logp_buf = np.empty((steps, n_envs, n_agents))
        rew_buf = np.empty((steps, n_envs, n_agents))
        val_buf = np.empty((steps, n_envs, n_agents))

        coverage = 0.0
        energy = 0.0
        connected_steps = 0
        for t in range(steps):
            obs_buf[t] = obs
            adj_buf[t] = adj
            actions, logps, values = self.policy.act(obs, adj, self._action_rng)
            act_buf[t] = actions
            logp_buf[t] = logps
            val_buf[t] = values
            for e, env in enumerate(self.envs):
                outcome = env.step(actions[e])
                rew_buf[t, e] = outcome.rewards
                obs[e] = outcome.obs
                adj[e] = outcome.adj
                coverage += outcome.coverage_index
                energy += outcome.energy_index
                connected_steps += outcome.connected

        final_values = self.policy.values(obs, adj)
        returns = compute_returns(rew_buf, final_values, cfg.train.gamma)
        if cfg.train.advantage_mode == "gae":
            advantages = compute_gae(
                rew_buf, val_buf, final_values, cfg.train.gamma, cfg.train.gae_lambda
            )
        else:
            advantages = returns - val_buf

        flat = steps * n_envs
        batch = RolloutBatch(
            obs=obs_buf.reshape(flat, n_agents, obs_dim),
            adj=adj_buf.reshape(flat, n_agents, n_agents),
            actions=act_buf.reshape(flat, n_agents),
            logprobs=logp_buf.reshape(flat, n_agents),
            values=val_buf.reshape(flat, n_agents),
            returns=returns.reshape(flat, n_agents),
            advantages=advantages.reshape(flat, n_agents),
        )
        denom = steps * n_envs
        stats = {
            "mean_reward": float(rew_buf.mean()),
            "coverage_index": coverage / denom,
            "energy_index": energy / denom,
            "connected_fraction": connected_steps / denom,
        }
        return batch, stats


# ---------------------------------------------------------------------------
# checkpoint-driven entry points
# ---------------------------------------------------------------------------


def policy_from_checkpoint(
    path, env_config: EnvConfig | None = None
) -> tuple[ActorCriticPolicy, RunConfig]:
    """Rebuild the policy stored in a checkpoint, optionally against a new scenario."""
    config_values, records = load_checkpoint(path)
    run_cfg = build_run_config(config_values)
    env_cfg = env_config if env_config is not None else run_cfg.env
    policy = ActorCriticPolicy(
        run_cfg.arch,
        observation_dim(env_cfg),
        env_cfg.n_uavs,
        N_ACTIONS,
        encoder_widths=run_cfg.train.encoder_widths,
        head_hidden=run_cfg.train.head_hidden,
        self_mix=run_cfg.train.self_mix,
        seed=0,
    )
    try:
        policy.load_values(records)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint {path} does not fit the scenario: {exc}") from exc
    return policy, run_cfg


def evaluate(checkpoint_path, env_config: EnvConfig, episodes: int, seed: int = 0) -> dict:
    """Greedy-action rollouts with no learning; mean and std of episode metrics."""
    policy, _ = policy_from_checkpoint(checkpoint_path, env_config)
    if episodes == 0:
        return {"episodes": 0, "notice": "no episodes evaluated"}
    if episodes < 0:
        raise ValueError(f"episodes must be >= 0, got {episodes}")

    env = CoverageEnv(env_config)
    episode_seeds = np.random.SeedSequence(seed).generate_state(episodes, dtype=np.uint64)
    per_episode = {"reward": [], "coverage_index": [], "energy_index": [], "connected_fraction": []}
    for ep_seed in episode_seeds:
        _, obs, adj = env.reset(int(ep_seed))
        rewards = coverage = energy = connected = 0.0
        for _ in range(env_config.episode_len):
            actions = policy.greedy(obs[None], adj[None])[0]
            outcome = env.step(actions)
            obs, adj = outcome.obs, outcome.adj
            rewards += float(outcome.rewards.mean())
            coverage += outcome.coverage_index
            energy += outcome.energy_index
            connected += outcome.connected
        steps = env_config.episode_len
        per_episode["reward"].append(rewards / steps)
        per_episode["coverage_index"].append(coverage / steps)
        per_episode["energy_index"].append(energy / steps)
        per_episode["connected_fraction"].append(connected / steps)

    summary: dict = {"episodes": episodes}
    for key, values in per_episode.items():
        summary[key] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
    return summary


def export_trajectory(checkpoint_path, env_config: EnvConfig, seed: int, out_path) -> None:
    """Greedy episode dump: terminal positions once, then per-step UAV rows and covered ids."""
    policy, _ = policy_from_checkpoint(checkpoint_path, env_config)
    env = CoverageEnv(env_config)
    _, obs, adj = env.reset(seed)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("# swarmcover trajectory v1\n")
        f.write("# terminal,<id>,<x>,<y>\n")
        f.write("# uav,<step>,<id>,<x>,<y>\n")
        f.write("# covered,<step>,<id;id;...>\n")
        for i, (x, y) in enumerate(env.state.terminal_pos):
            f.write(f"terminal,{i},{float(x)!r},{float(y)!r}\n")
        for t in range(1, env_config.episode_len + 1):
            actions = policy.greedy(obs[None], adj[None])[0]
            outcome = env.step(actions)
            obs, adj = outcome.obs, outcome.adj
            for i, (x, y) in enumerate(env.state.uav_pos):
                f.write(f"uav,{t},{i},{float(x)!r},{float(y)!r}\n")
            covered = ";".join(str(i) for i in env.covered_terminal_ids())
            f.write(f"covered,{t},{covered}\n")
