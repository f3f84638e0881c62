"""Actor-critic network wirings over a swarm of identical agents.

All agents share one parameter set. Three wirings are supported:

* ``individual_critic`` — actor and critic each own an encoder; the critic
  sees only the acting agent's observation.
* ``global_critic`` — the critic encodes the concatenation of every agent's
  observation (own observation first, the rest in index order) and emits one
  value per agent.
* ``shared_backbone`` — a single encoder feeds both heads; the actor branch
  reads the backbone output through a gradient stop, so only the critic
  loss trains the shared part.

With the neighborhood aggregator enabled, encoder outputs are mixed across
one-hop neighbors before the heads it feeds (the actor branch in the split
wirings, both heads in the shared wiring).
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, reshape, stop_gradient
from .config import Architecture, Variant
from .nets import Adam, Mlp, MlpSpec, aggregate_neighbors, categorical_sample

__all__ = ["ActorCriticPolicy"]


class ActorCriticPolicy:
    def __init__(
        self,
        arch: Architecture,
        obs_dim: int,
        n_agents: int,
        n_actions: int = 17,
        encoder_widths: tuple[int, ...] = (128, 64),
        head_hidden: int = 64,
        self_mix: float = 0.5,
        seed=0,
    ):
        if n_agents < 1 or obs_dim < 1 or n_actions < 2:
            raise ValueError("invalid policy dimensions")
        self.arch = arch
        self.obs_dim = obs_dim
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.encoder_widths = tuple(encoder_widths)
        self.head_hidden = head_hidden
        self.self_mix = self_mix

        rng = np.random.default_rng(seed)
        feat = self.encoder_widths[-1]
        enc = MlpSpec((obs_dim, *self.encoder_widths))
        actor = MlpSpec((feat, head_hidden, n_actions), output_activation="softmax")
        critic = MlpSpec((feat, head_hidden, 1))

        if arch.variant is Variant.SHARED_BACKBONE:
            self.backbone = Mlp(enc, rng, final_gain=np.sqrt(2.0), name="backbone")
            self._encoders = {"actor": self.backbone, "critic": self.backbone}
        else:
            self.actor_encoder = Mlp(enc, rng, final_gain=np.sqrt(2.0), name="actor_encoder")
            critic_in = obs_dim * n_agents if arch.variant is Variant.GLOBAL_CRITIC else obs_dim
            self.critic_encoder = Mlp(
                MlpSpec((critic_in, *self.encoder_widths)),
                rng,
                final_gain=np.sqrt(2.0),
                name="critic_encoder",
            )
            self._encoders = {"actor": self.actor_encoder, "critic": self.critic_encoder}

        self.actor_head = Mlp(actor, rng, final_gain=0.01, name="actor_head")
        self.critic_head = Mlp(critic, rng, final_gain=1.0, name="critic_head")

        # Row i of the gather index puts agent i's observation first.
        n = n_agents
        self._global_order = np.array(
            [[i] + [j for j in range(n) if j != i] for i in range(n)], dtype=np.int64
        )

    # ------------------------------------------------------------------
    # forward passes
    # ------------------------------------------------------------------

    def _check_inputs(self, obs: np.ndarray, adj: np.ndarray) -> None:
        if obs.ndim != 3 or obs.shape[1] != self.n_agents or obs.shape[2] != self.obs_dim:
            raise ValueError(
                f"expected observations (batch, {self.n_agents}, {self.obs_dim}), got {obs.shape}"
            )
        if adj.shape != (obs.shape[0], self.n_agents, self.n_agents):
            raise ValueError(f"adjacency shape {adj.shape} does not match observations {obs.shape}")

    def forward(self, obs: np.ndarray, adj: np.ndarray) -> tuple[Tensor, Tensor]:
        """Log action probabilities (B, N, K) and value estimates (B, N)."""
        obs = np.asarray(obs, dtype=np.float64)
        adj = np.asarray(adj, dtype=np.float64)
        self._check_inputs(obs, adj)
        b, n, d = obs.shape
        flat = Tensor(obs.reshape(b * n, d))

        shared = self.arch.variant is Variant.SHARED_BACKBONE
        h = self._encoders["actor"].forward(flat)
        if self.arch.aggregator_enabled:
            h = reshape(h, (b, n, -1))
            h = aggregate_neighbors(h, adj, self.self_mix)
            h = reshape(h, (b * n, -1))

        actor_in = stop_gradient(h) if shared else h
        log_probs = reshape(self.actor_head.log_probs(actor_in), (b, n, self.n_actions))

        if shared:
            critic_in = h
        elif self.arch.variant is Variant.GLOBAL_CRITIC:
            stacked = obs[:, self._global_order, :].reshape(b * n, n * d)
            critic_in = self._encoders["critic"].forward(Tensor(stacked))
        else:
            critic_in = self._encoders["critic"].forward(flat)
        values = reshape(self.critic_head.forward(critic_in), (b, n))
        return log_probs, values

    def act(self, obs, adj, rng: np.random.Generator):
        """Sample one action per agent; returns (actions, log_probs, values) arrays."""
        log_probs, values = self.forward(obs, adj)
        probs = np.exp(log_probs.data)
        b, n = probs.shape[:2]
        actions = np.empty((b, n), dtype=np.int64)
        chosen = np.empty((b, n))
        for e in range(b):
            for i in range(n):
                actions[e, i], chosen[e, i] = categorical_sample(probs[e, i], rng)
        return actions, chosen, values.data.copy()

    def greedy(self, obs, adj) -> np.ndarray:
        log_probs, _ = self.forward(obs, adj)
        return log_probs.data.argmax(axis=-1)

    def values(self, obs, adj) -> np.ndarray:
        return self.forward(obs, adj)[1].data.copy()

    # ------------------------------------------------------------------
    # parameters
    # ------------------------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        nets = (
            [self.backbone]
            if self.arch.variant is Variant.SHARED_BACKBONE
            else [self.actor_encoder, self.critic_encoder]
        )
        nets += [self.actor_head, self.critic_head]
        out: list[tuple[str, Tensor]] = []
        for net in nets:
            out.extend(net.named_parameters())
        return out

    def actor_parameters(self) -> list[Tensor]:
        """Parameters the actor loss is allowed to train."""
        if self.arch.variant is Variant.SHARED_BACKBONE:
            return self.actor_head.parameters()
        return self.actor_encoder.parameters() + self.actor_head.parameters()

    def critic_parameters(self) -> list[Tensor]:
        """Parameters the critic loss trains (includes any shared backbone)."""
        if self.arch.variant is Variant.SHARED_BACKBONE:
            return self.backbone.parameters() + self.critic_head.parameters()
        return self.critic_encoder.parameters() + self.critic_head.parameters()

    def load_values(self, records: dict[str, np.ndarray]) -> None:
        """Overwrite all parameters from name -> array records; shapes must match."""
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(records))
        extra = sorted(set(records) - set(params))
        if missing or extra:
            raise ValueError(f"parameter records mismatch: missing={missing} unexpected={extra}")
        for name, tensor in params.items():
            values = np.asarray(records[name], dtype=np.float64)
            if values.shape != tensor.data.shape:
                raise ValueError(
                    f"shape mismatch for {name}: expected {tensor.data.shape}, got {values.shape}"
                )
            tensor.data = values.copy()

    def make_optimizers(self, actor_lr, critic_lr, grad_clip_norm=None) -> tuple[Adam, Adam]:
        return (
            Adam(self.actor_parameters(), actor_lr, grad_clip_norm=grad_clip_norm),
            Adam(self.critic_parameters(), critic_lr, grad_clip_norm=grad_clip_norm),
        )
