"""Self-describing single-file checkpoints.

Layout: a magic version line, the full run configuration echoed as flat
``key = value`` text, then one record per parameter (name, shape, element
count, raw little-endian float64 bytes). Round-trips are exact at the bit
level.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config_text, run_config_to_text

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint", "MAGIC"]

MAGIC = b"SWARMCOVER-CKPT-1\n"


class CheckpointError(RuntimeError):
    """Unreadable or incompatible checkpoint file."""


def save_checkpoint(path, run_config: RunConfig, named_params) -> None:
    """Write config plus (name, Tensor) parameter records to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cfg_text = run_config_to_text(run_config).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(b"CONFIG %d\n" % len(cfg_text))
        f.write(cfg_text)
        f.write(b"PARAMS %d\n" % len(named_params))
        for name, tensor in named_params:
            arr = np.ascontiguousarray(tensor.data, dtype="<f8")
            shape = ",".join(str(d) for d in arr.shape)
            f.write(f"{name} {shape} {arr.size}\n".encode("utf-8"))
            f.write(arr.tobytes())
            f.write(b"\n")


def load_checkpoint(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Read a checkpoint; returns (raw config values, name -> float64 array)."""
    path = Path(path)
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise CheckpointError(f"cannot open checkpoint {path}: {exc}") from exc
    with f:
        if f.readline() != MAGIC:
            raise CheckpointError(f"{path} is not a recognized checkpoint file")
        cfg_header = f.readline().split()
        if len(cfg_header) != 2 or cfg_header[0] != b"CONFIG":
            raise CheckpointError(f"{path}: malformed config header")
        cfg_text = f.read(int(cfg_header[1])).decode("utf-8")
        params_header = f.readline().split()
        if len(params_header) != 2 or params_header[0] != b"PARAMS":
            raise CheckpointError(f"{path}: malformed parameter header")
        records: dict[str, np.ndarray] = {}
        for _ in range(int(params_header[1])):
            fields = f.readline().decode("utf-8").split()
            if len(fields) != 3:
                raise CheckpointError(f"{path}: malformed parameter record")
            name, shape_text, count = fields[0], fields[1], int(fields[2])
            shape = tuple(int(d) for d in shape_text.split(",") if d)
            blob = f.read(count * 8)
            if len(blob) != count * 8:
                raise CheckpointError(f"{path}: truncated parameter {name}")
            f.read(1)  # trailing newline
            records[name] = np.frombuffer(blob, dtype="<f8").astype(np.float64).reshape(shape)
    try:
        config_values = parse_config_text(cfg_text)
    except ValueError as exc:
        raise CheckpointError(f"{path}: bad embedded config: {exc}") from exc
    return config_values, records
