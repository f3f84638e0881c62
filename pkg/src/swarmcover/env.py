"""2D UAV swarm coverage simulation.

A square world holds static ground terminals and a swarm of UAVs acting as
mobile relays. Each step every UAV picks one of 17 acceleration commands
(idle, or 8 compass directions at two magnitudes); velocities are clamped
to a top speed and positions to the map. Rewards trade covered terminals
against flight energy, and per-step metrics report coverage, energy, and
whether the inter-UAV communication graph is connected.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import EnvConfig

__all__ = [
    "N_ACTIONS",
    "WorldState",
    "StepOutcome",
    "ObservationLayout",
    "CoverageEnv",
    "acceleration_table",
    "decode_action",
    "adjacency_from_positions",
    "is_connected",
    "observation_dim",
    "observation_layout",
]

N_ACTIONS = 17

# Compass unit vectors, counterclockwise from +x: E, NE, N, NW, W, SW, S, SE.
_DIAG = np.sqrt(0.5)
_DIRECTIONS = np.array(
    [
        [1.0, 0.0],
        [_DIAG, _DIAG],
        [0.0, 1.0],
        [-_DIAG, _DIAG],
        [-1.0, 0.0],
        [-_DIAG, -_DIAG],
        [0.0, -1.0],
        [_DIAG, -_DIAG],
    ]
)


def acceleration_table(accel_low: float, accel_high: float) -> np.ndarray:
    """(17, 2) table mapping action id to acceleration vector.

    Action 0 is idle; 1-8 are the compass directions at ``accel_low``;
    9-16 the same directions at ``accel_high``.
    """
    return np.vstack([np.zeros((1, 2)), accel_low * _DIRECTIONS, accel_high * _DIRECTIONS])


def decode_action(action_id: int, accel_low: float = 0.5, accel_high: float = 1.0) -> np.ndarray:
    if not 0 <= action_id < N_ACTIONS:
        raise ValueError(f"action id must be in [0, {N_ACTIONS - 1}], got {action_id}")
    return acceleration_table(accel_low, accel_high)[action_id]


@dataclass
class WorldState:
    uav_pos: np.ndarray  # (N, 2)
    uav_vel: np.ndarray  # (N, 2)
    terminal_pos: np.ndarray  # (M, 2)
    step: int
    rng: np.random.Generator


@dataclass
class StepOutcome:
    obs: np.ndarray  # (N, obs_dim)
    adj: np.ndarray  # (N, N)
    rewards: np.ndarray  # (N,)
    coverage_index: float
    energy_index: float
    connected: bool
    done: bool


@dataclass(frozen=True)
class ObservationLayout:
    """Slices of the flat per-agent observation vector."""

    agent_onehot: slice
    pos_bits: slice
    velocity: slice
    terminals: slice
    neighbors: slice
    total: int


def observation_dim(config: EnvConfig) -> int:
    return (
        config.n_uavs
        + 2 * config.pos_bits
        + 2
        + 3 * (config.terminal_slots + config.neighbor_slots)
    )


def observation_layout(config: EnvConfig) -> ObservationLayout:
    n = config.n_uavs
    b = 2 * config.pos_bits
    t = 3 * config.terminal_slots
    k = 3 * config.neighbor_slots
    return ObservationLayout(
        agent_onehot=slice(0, n),
        pos_bits=slice(n, n + b),
        velocity=slice(n + b, n + b + 2),
        terminals=slice(n + b + 2, n + b + 2 + t),
        neighbors=slice(n + b + 2 + t, n + b + 2 + t + k),
        total=n + b + 2 + t + k,
    )


def adjacency_from_positions(pos: np.ndarray, comm_radius: float) -> np.ndarray:
    """Symmetric 0/1 one-hop link matrix with unit diagonal."""
    delta = pos[:, None, :] - pos[None, :, :]
    d2 = (delta * delta).sum(axis=-1)
    adj = (d2 <= comm_radius * comm_radius).astype(np.float64)
    np.fill_diagonal(adj, 1.0)
    return adj


def is_connected(adj: np.ndarray) -> bool:
    """True iff breadth-first search from node 0 reaches every node."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.nonzero(adj[i] > 0.0)[0]:
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


class CoverageEnv:
    """Seedable, deterministic simulation of the swarm coverage task.

    Instances are self-contained; run as many in parallel as needed, but
    drive each one from a single logical thread.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self._table = acceleration_table(config.accel_low, config.accel_high)
        self._layout = observation_layout(config)
        self._state: WorldState | None = None

    @property
    def state(self) -> WorldState:
        if self._state is None:
            raise RuntimeError("environment has not been reset")
        return self._state

    @property
    def obs_dim(self) -> int:
        return self._layout.total

    # ------------------------------------------------------------------
    # episode lifecycle
    # ------------------------------------------------------------------

    def reset(self, seed: int | None = None) -> tuple[WorldState, np.ndarray, np.ndarray]:
        """Start a new episode; returns (state, observations, adjacency).

        Terminals land uniformly on the map. UAVs are placed sequentially:
        the first uniformly, each next one uniformly inside the comm disk of
        a random already-placed UAV (clamped to the map), so the initial
        link graph is connected by construction.
        """
        cfg = self.config
        rng = np.random.default_rng(cfg.seed if seed is None else seed)

        terminals = rng.uniform(0.0, cfg.world_size, size=(cfg.n_terminals, 2))

        pos = np.empty((cfg.n_uavs, 2))
        pos[0] = rng.uniform(0.0, cfg.world_size, size=2)
        for k in range(1, cfg.n_uavs):
            anchor = pos[rng.integers(0, k)]
            radius = cfg.comm_radius * np.sqrt(rng.random())
            theta = rng.random() * 2.0 * np.pi
            candidate = anchor + radius * np.array([np.cos(theta), np.sin(theta)])
            pos[k] = np.clip(candidate, 0.0, cfg.world_size)

        self._state = WorldState(
            uav_pos=pos,
            uav_vel=np.zeros((cfg.n_uavs, 2)),
            terminal_pos=terminals,
            step=0,
            rng=rng,
        )
        return self._state, self.observe_all(), self.adjacency()

    def set_world(self, uav_pos, uav_vel=None, terminal_pos=None, step: int = 0) -> None:
        """Install an explicit world state (for evaluation of constructed scenarios)."""
        cfg = self.config
        pos = np.asarray(uav_pos, dtype=np.float64).reshape(cfg.n_uavs, 2)
        vel = (
            np.zeros((cfg.n_uavs, 2))
            if uav_vel is None
            else np.asarray(uav_vel, dtype=np.float64).reshape(cfg.n_uavs, 2)
        )
        if terminal_pos is not None:
            terms = np.asarray(terminal_pos, dtype=np.float64).reshape(-1, 2)
        elif self._state is not None:
            terms = self.state.terminal_pos
        else:
            raise ValueError("terminal_pos is required when the environment has no state")
        self._state = WorldState(pos, vel, terms, step, np.random.default_rng(cfg.seed))

    def step(self, actions) -> StepOutcome:
        """Advance one time step; rewards and metrics reflect the new state."""
        cfg = self.config
        state = self.state
        if state.step >= cfg.episode_len:
            raise ValueError("cannot step a finished episode; call reset()")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (cfg.n_uavs,):
            raise ValueError(f"expected {cfg.n_uavs} actions, got shape {actions.shape}")
        if actions.min() < 0 or actions.max() >= N_ACTIONS:
            raise ValueError("action id out of range")

        vel = state.uav_vel + self._table[actions]
        speed = np.linalg.norm(vel, axis=1)
        over = speed > cfg.max_speed
        if over.any():
            vel[over] *= (cfg.max_speed / speed[over])[:, None]

        raw = state.uav_pos + vel
        pos = np.clip(raw, 0.0, cfg.world_size)
        vel[raw != pos] = 0.0  # hitting a wall kills that velocity component

        state.uav_pos = pos
        state.uav_vel = vel
        state.step += 1

        adj = self.adjacency()
        connected = is_connected(adj)
        rewards, coverage_index = self._rewards(connected)
        energy_index = float(self._energies().mean())

        return StepOutcome(
            obs=self.observe_all(),
            adj=adj,
            rewards=rewards,
            coverage_index=coverage_index,
            energy_index=energy_index,
            connected=connected,
            done=state.step == cfg.episode_len,
        )

    # ------------------------------------------------------------------
    # sensing and scoring
    # ------------------------------------------------------------------

    def adjacency(self) -> np.ndarray:
        return adjacency_from_positions(self.state.uav_pos, self.config.comm_radius)

    def _energies(self) -> np.ndarray:
        speed = np.linalg.norm(self.state.uav_vel, axis=1)
        return 0.5 + 0.5 * speed / self.config.max_speed

    def _coverage_mask(self) -> np.ndarray:
        """(N, M) boolean: terminal j inside UAV i's coverage disk (closed)."""
        state = self.state
        delta = state.uav_pos[:, None, :] - state.terminal_pos[None, :, :]
        d2 = (delta * delta).sum(axis=-1)
        return d2 <= self.config.coverage_radius**2

    def _rewards(self, connected: bool) -> tuple[np.ndarray, float]:
        cfg = self.config
        covered = self._coverage_mask()
        own = covered.sum(axis=1).astype(np.float64)
        total = float(covered.any(axis=0).sum())
        individual = np.where(own == 0.0, -1.0, own)
        group = cfg.group_reward_coeff * (total - own)
        rewards = (individual + group) / self._energies()
        if cfg.disconnect_penalty and not connected:
            rewards = rewards - cfg.disconnect_penalty
        return rewards, total / cfg.n_terminals

    def compute_rewards(self) -> np.ndarray:
        """Per-UAV reward of the current state (coverage payoff over energy)."""
        return self._rewards(is_connected(self.adjacency()))[0]

    def coverage_index(self) -> float:
        return float(self._coverage_mask().any(axis=0).sum()) / self.config.n_terminals

    def covered_terminal_ids(self) -> np.ndarray:
        return np.nonzero(self._coverage_mask().any(axis=0))[0]

    # ------------------------------------------------------------------
    # observations
    # ------------------------------------------------------------------

    def build_observation(self, agent: int) -> np.ndarray:
        """Flat observation vector for one agent.

        Layout: id one-hot, per-axis binary position code (LSB first),
        velocity scaled by max speed, then nearest-first sensed terminal and
        neighbor slots as (dx, dy, present) triples; empty slots stay zero.
        """
        cfg = self.config
        state = self.state
        if not 0 <= agent < cfg.n_uavs:
            raise ValueError(f"agent index out of range: {agent}")
        lay = self._layout
        out = np.zeros(lay.total)

        out[agent] = 1.0

        levels = 1 << cfg.pos_bits
        quantized = np.floor(state.uav_pos[agent] / cfg.world_size * levels).astype(np.int64)
        quantized = np.clip(quantized, 0, levels - 1)
        shifts = np.arange(cfg.pos_bits)
        bits = np.concatenate([(q >> shifts) & 1 for q in quantized])
        out[lay.pos_bits] = bits

        out[lay.velocity] = state.uav_vel[agent] / cfg.max_speed

        out[lay.terminals] = self._slot_features(
            origin=state.uav_pos[agent],
            points=state.terminal_pos,
            radius=cfg.sensing_radius,
            slots=cfg.terminal_slots,
        )
        others = np.delete(state.uav_pos, agent, axis=0)
        out[lay.neighbors] = self._slot_features(
            origin=state.uav_pos[agent],
            points=others,
            radius=cfg.comm_radius,
            slots=cfg.neighbor_slots,
        )
        return out

    @staticmethod
    def _slot_features(origin, points, radius, slots) -> np.ndarray:
        feats = np.zeros((slots, 3))
        if points.size:
            delta = points - origin
            d2 = (delta * delta).sum(axis=1)
            inside = np.nonzero(d2 <= radius * radius)[0]
            order = inside[np.argsort(d2[inside], kind="stable")][:slots]
            feats[: order.size, :2] = delta[order] / radius
            feats[: order.size, 2] = 1.0
        return feats.reshape(-1)

    def observe_all(self) -> np.ndarray:
        return np.stack([self.build_observation(i) for i in range(self.config.n_uavs)])
