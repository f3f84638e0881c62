"""On-policy update rules: discounted returns, advantages, and clipped losses.

The updater consumes one batch of full-episode trajectories per call, runs a
fixed number of epochs over it, and then the batch is thrown away. Actor and
critic use separate Adam instances over disjoint parameter groups; with a
shared backbone the encoder sits in the critic group only, and the forward
pass already blocks actor-loss gradients at the backbone boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    backward,
    clip,
    exp,
    gather_rows,
    minimum,
    mul,
    reduce_mean,
    reduce_sum,
    reshape,
)
from .config import TrainConfig
from .policy import ActorCriticPolicy

__all__ = [
    "TrainingDiverged",
    "compute_returns",
    "compute_gae",
    "normalize_advantages",
    "actor_loss",
    "critic_loss",
    "RolloutBatch",
    "PPOUpdater",
]


class TrainingDiverged(RuntimeError):
    """Raised when a loss or probability ratio stops being finite."""


def compute_returns(rewards: np.ndarray, final_value, gamma: float) -> np.ndarray:
    """Discounted returns by backward summation, bootstrapped with ``final_value``.

    ``rewards`` has time as its first axis; any trailing axes (envs, agents)
    are carried through elementwise.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.shape[0] < 1:
        raise ValueError("need at least one reward")
    out = np.empty_like(rewards)
    acc = np.broadcast_to(np.asarray(final_value, dtype=np.float64), rewards.shape[1:]).copy()
    for t in range(rewards.shape[0] - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    final_value,
    gamma: float,
    lam: float,
) -> np.ndarray:
    """Exponentially weighted advantage over temporal-difference residuals."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise ValueError(f"rewards {rewards.shape} and values {values.shape} must match")
    out = np.empty_like(rewards)
    next_value = np.broadcast_to(np.asarray(final_value, dtype=np.float64), rewards.shape[1:]).copy()
    running = np.zeros(rewards.shape[1:])
    for t in range(rewards.shape[0] - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        out[t] = running
        next_value = values[t]
    return out


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    """Shift/scale to zero mean, unit variance; degenerate batches just center."""
    advantages = np.asarray(advantages, dtype=np.float64)
    centered = advantages - advantages.mean()
    std = advantages.std()
    if std < 1e-12:
        return centered
    return centered / std


def actor_loss(
    new_logprobs: Tensor,
    old_logprobs: np.ndarray,
    advantages: np.ndarray,
    clip_epsilon: float,
    entropy_coeff: float = 0.0,
    dist_logprobs: Tensor | None = None,
) -> Tensor:
    """Negated clipped surrogate, optionally minus an entropy bonus.

    ``old_logprobs`` and ``advantages`` are plain arrays (no gradients flow
    into them). ``dist_logprobs`` carries the full (batch, actions) log
    distribution and is only needed when the entropy bonus is active.
    """
    old_logprobs = np.asarray(old_logprobs, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    ratio = exp(new_logprobs - old_logprobs)
    if not np.isfinite(ratio.data).all():
        bad = int((~np.isfinite(ratio.data)).sum())
        raise TrainingDiverged(f"non-finite probability ratio on {bad} samples")
    surr_plain = ratio * advantages
    surr_clipped = clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    surr = minimum(surr_plain, surr_clipped)
    assert (surr.data <= surr_plain.data).all() and (surr.data <= surr_clipped.data).all()
    loss = -reduce_mean(surr)
    if entropy_coeff:
        if dist_logprobs is None:
            raise ValueError("entropy bonus requires the full log distribution")
        probs = exp(dist_logprobs)
        entropy = -reduce_mean(reduce_sum(mul(probs, dist_logprobs), axis=-1))
        loss = loss - entropy_coeff * entropy
    return loss


def critic_loss(predicted_values: Tensor, returns: np.ndarray) -> Tensor:
    """Mean squared error between value predictions and empirical returns."""
    returns = np.asarray(returns, dtype=np.float64)
    diff = predicted_values - returns
    return reduce_mean(diff * diff)


@dataclass
class RolloutBatch:
    """Flattened on-policy trajectories: leading axis is (steps x envs)."""

    obs: np.ndarray  # (B, N, D)
    adj: np.ndarray  # (B, N, N)
    actions: np.ndarray  # (B, N)
    logprobs: np.ndarray  # (B, N) log prob of the sampled action, at sampling time
    values: np.ndarray  # (B, N) critic outputs at sampling time
    returns: np.ndarray  # (B, N)
    advantages: np.ndarray  # (B, N), not yet normalized

    def __post_init__(self):
        if self.actions.ndim != 2 or self.actions.shape[0] < 1:
            raise ValueError("rollout batch is empty")

    @property
    def size(self) -> int:
        return self.actions.shape[0] * self.actions.shape[1]


class PPOUpdater:
    """Runs clipped-surrogate updates over complete episode batches."""

    def __init__(self, policy: ActorCriticPolicy, cfg: TrainConfig):
        self.policy = policy
        self.cfg = cfg
        self.actor_opt, self.critic_opt = policy.make_optimizers(
            cfg.actor_lr, cfg.critic_lr, cfg.grad_clip_norm
        )

    def update(self, batch: RolloutBatch) -> dict[str, float]:
        cfg = self.cfg
        n_actions = self.policy.n_actions
        rows = batch.size
        actions_flat = batch.actions.reshape(rows)
        returns_flat = batch.returns.reshape(rows)
        advantages = normalize_advantages(batch.advantages.reshape(rows))

        # Reference log-probabilities from the parameters as they stand now,
        # i.e. the frozen pre-update policy.
        old_dist, _ = self.policy.forward(batch.obs, batch.adj)
        old_flat = old_dist.data.reshape(rows, n_actions)
        old_chosen = old_flat[np.arange(rows), actions_flat]

        actor_losses = []
        critic_losses = []
        first_epoch_ratio_dev = 0.0
        for epoch in range(cfg.update_epochs):
            log_probs, values = self.policy.forward(batch.obs, batch.adj)
            dist_flat = reshape(log_probs, (rows, n_actions))
            chosen = gather_rows(dist_flat, actions_flat)
            if epoch == 0:
                first_epoch_ratio_dev = float(
                    np.abs(np.exp(chosen.data - old_chosen) - 1.0).max()
                )
            a_loss = actor_loss(
                chosen,
                old_chosen,
                advantages,
                cfg.clip_epsilon,
                cfg.entropy_coeff,
                dist_flat if cfg.entropy_coeff else None,
            )
            c_loss = critic_loss(reshape(values, (rows,)), returns_flat)
            if not (np.isfinite(a_loss.data) and np.isfinite(c_loss.data)):
                raise TrainingDiverged(
                    f"loss diverged: actor={a_loss.item()!r} critic={c_loss.item()!r}"
                )
            self.actor_opt.zero_grad()
            self.critic_opt.zero_grad()
            backward(a_loss)
            backward(c_loss)
            self.actor_opt.step()
            self.critic_opt.step()
            actor_losses.append(a_loss.item())
            critic_losses.append(c_loss.item())

        return {
            "actor_loss": float(np.mean(actor_losses)),
            "critic_loss": float(np.mean(critic_losses)),
            "epoch1_ratio_dev": first_epoch_ratio_dev,
        }
