"""Configuration types for the environment, the learner, and training runs.

Run configuration can be loaded from a flat ``key = value`` text file whose
keys mirror the dataclass field names below ('#' starts a comment). Values
given on the command line override values from the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

__all__ = [
    "EnvConfig",
    "TrainConfig",
    "Variant",
    "Architecture",
    "RunConfig",
    "parse_config_text",
    "build_run_config",
    "run_config_to_text",
    "load_run_config",
]


@dataclass
class EnvConfig:
    """Geometry, sensing, dynamics, and reward parameters of the coverage world."""

    world_size: float = 200.0
    n_uavs: int = 10
    n_terminals: int = 120
    coverage_radius: float = 15.0
    sensing_radius: float = 19.0
    comm_radius: float = 30.0
    episode_len: int = 100
    max_speed: float = 2.0
    accel_low: float = 0.5
    accel_high: float = 1.0
    terminal_slots: int = 15
    neighbor_slots: int = 5
    group_reward_coeff: float = 0.1
    pos_bits: int = 20
    disconnect_penalty: float = 0.0
    seed: int = 0

    def __post_init__(self):
        positives = {
            "world_size": self.world_size,
            "n_uavs": self.n_uavs,
            "n_terminals": self.n_terminals,
            "coverage_radius": self.coverage_radius,
            "sensing_radius": self.sensing_radius,
            "comm_radius": self.comm_radius,
            "max_speed": self.max_speed,
            "accel_low": self.accel_low,
            "accel_high": self.accel_high,
            "terminal_slots": self.terminal_slots,
            "neighbor_slots": self.neighbor_slots,
            "pos_bits": self.pos_bits,
        }
        for name, value in positives.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.episode_len < 1:
            raise ValueError(f"episode_len must be >= 1, got {self.episode_len}")
        if not self.coverage_radius < self.sensing_radius < self.comm_radius:
            raise ValueError(
                "radii must satisfy coverage < sensing < comm, got "
                f"{self.coverage_radius}, {self.sensing_radius}, {self.comm_radius}"
            )
        if self.disconnect_penalty < 0:
            raise ValueError("disconnect_penalty must be >= 0")


@dataclass
class TrainConfig:
    """Learner hyperparameters, network sizing, and the aggregator mix weight."""

    gamma: float = 0.99
    clip_epsilon: float = 0.2
    update_epochs: int = 4
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    advantage_mode: str = "monte_carlo"  # monte_carlo | gae
    gae_lambda: float = 0.95
    entropy_coeff: float = 0.0
    grad_clip_norm: float = 0.5
    encoder_widths: tuple[int, ...] = (128, 64)
    head_hidden: int = 64
    self_mix: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError(f"clip_epsilon must be in (0, 1), got {self.clip_epsilon}")
        if self.update_epochs < 1:
            raise ValueError(f"update_epochs must be >= 1, got {self.update_epochs}")
        if self.advantage_mode not in ("monte_carlo", "gae"):
            raise ValueError(f"unknown advantage_mode {self.advantage_mode!r}")
        if not 0.0 <= self.self_mix <= 1.0:
            raise ValueError(f"self_mix must lie in [0, 1], got {self.self_mix}")
        if isinstance(self.encoder_widths, list):
            self.encoder_widths = tuple(self.encoder_widths)


class Variant(str, Enum):
    """How the critic is wired relative to the actor."""

    INDIVIDUAL_CRITIC = "individual_critic"
    GLOBAL_CRITIC = "global_critic"
    SHARED_BACKBONE = "shared_backbone"


@dataclass(frozen=True)
class Architecture:
    variant: Variant = Variant.SHARED_BACKBONE
    aggregator_enabled: bool = False


@dataclass
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    arch: Architecture = field(default_factory=Architecture)
    episodes: int = 3000
    parallel_envs: int = 5
    metric_window: int = 10
    seed: int = 0
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes}")
        if self.parallel_envs < 1:
            raise ValueError(f"parallel_envs must be >= 1, got {self.parallel_envs}")
        if self.metric_window < 1:
            raise ValueError(f"metric_window must be >= 1, got {self.metric_window}")


# ---------------------------------------------------------------------------
# flat key/value parsing
# ---------------------------------------------------------------------------

_ENV_FIELDS = {f.name: f for f in dataclasses.fields(EnvConfig)}
_TRAIN_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}
_RUN_FIELDS = {
    f.name: f for f in dataclasses.fields(RunConfig) if f.name not in ("env", "train", "arch")
}
_ARCH_KEYS = ("variant", "aggregator")

_TRUE = {"true", "on", "yes", "1"}
_FALSE = {"false", "off", "no", "0"}


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean (on/off), got {raw!r}")


def _convert(raw: str, target_type) -> object:
    raw = raw.strip()
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    if target_type is bool:
        return _parse_bool(raw)
    if target_type is str:
        return raw
    # tuple[int, ...] fields take comma separated integers
    return tuple(int(part) for part in raw.split(",") if part.strip())


_FIELD_TYPES = {
    "world_size": float, "n_uavs": int, "n_terminals": int, "coverage_radius": float,
    "sensing_radius": float, "comm_radius": float, "episode_len": int, "max_speed": float,
    "accel_low": float, "accel_high": float, "terminal_slots": int, "neighbor_slots": int,
    "group_reward_coeff": float, "pos_bits": int, "disconnect_penalty": float, "seed": int,
    "gamma": float, "clip_epsilon": float, "update_epochs": int, "actor_lr": float,
    "critic_lr": float, "advantage_mode": str, "gae_lambda": float, "entropy_coeff": float,
    "grad_clip_norm": float, "encoder_widths": tuple, "head_hidden": int, "self_mix": float,
    "episodes": int, "parallel_envs": int, "metric_window": int, "out_dir": str,
    "variant": str, "aggregator": bool,
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a raw string mapping."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = raw.strip()
    return values


def build_run_config(values: dict[str, str], overrides: dict[str, object] | None = None) -> RunConfig:
    """Assemble a RunConfig from raw string values plus typed overrides."""
    env_kwargs: dict[str, object] = {}
    train_kwargs: dict[str, object] = {}
    run_kwargs: dict[str, object] = {}
    arch_kwargs: dict[str, object] = {}

    for key, raw in values.items():
        if key not in _FIELD_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        value = _convert(raw, _FIELD_TYPES[key])
        if key == "variant":
            arch_kwargs["variant"] = Variant(value)
        elif key == "aggregator":
            arch_kwargs["aggregator_enabled"] = value
        elif key in _ENV_FIELDS:
            env_kwargs[key] = value
        elif key in _TRAIN_FIELDS:
            train_kwargs[key] = value
        elif key in _RUN_FIELDS:
            run_kwargs[key] = value

    # 'seed' appears in both EnvConfig and RunConfig; a single flat key drives both.
    if "seed" in env_kwargs:
        run_kwargs["seed"] = env_kwargs["seed"]

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "variant":
            arch_kwargs["variant"] = Variant(value)
        elif key == "aggregator":
            arch_kwargs["aggregator_enabled"] = value if isinstance(value, bool) else _parse_bool(str(value))
        elif key in _ENV_FIELDS:
            env_kwargs[key] = value
            if key == "seed":
                run_kwargs["seed"] = value
        elif key in _RUN_FIELDS:
            run_kwargs[key] = value
            if key == "seed":
                env_kwargs["seed"] = value
        elif key in _TRAIN_FIELDS:
            train_kwargs[key] = value
        else:
            raise ValueError(f"unknown override {key!r}")

    return RunConfig(
        env=EnvConfig(**env_kwargs),
        train=TrainConfig(**train_kwargs),
        arch=Architecture(**arch_kwargs),
        **run_kwargs,
    )


def load_run_config(path: str | Path, overrides: dict[str, object] | None = None) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    return build_run_config(parse_config_text(text), overrides)


def run_config_to_text(cfg: RunConfig) -> str:
    """Serialize a RunConfig back to the flat key/value format."""
    lines = []
    for name in _ENV_FIELDS:
        lines.append(f"{name} = {getattr(cfg.env, name)}")
    for name in _TRAIN_FIELDS:
        value = getattr(cfg.train, name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{name} = {value}")
    lines.append(f"variant = {cfg.arch.variant.value}")
    lines.append(f"aggregator = {'on' if cfg.arch.aggregator_enabled else 'off'}")
    for name in _RUN_FIELDS:
        if name == "seed":
            continue  # already emitted via the env block
        lines.append(f"{name} = {getattr(cfg, name)}")
    return "\n".join(lines) + "\n"
