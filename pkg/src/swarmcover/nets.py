"""Dense networks, neighborhood feature mixing, sampling, and optimization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, log_softmax, matmul, relu, softmax, tanh

__all__ = [
    "MlpSpec",
    "Mlp",
    "orthogonal",
    "mixing_matrix",
    "aggregate_neighbors",
    "categorical_sample",
    "Adam",
]

_ACTIVATIONS = {"tanh": tanh, "relu": relu}


def orthogonal(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float = 1.0) -> np.ndarray:
    """Orthogonal weight matrix of shape (fan_in, fan_out), scaled by ``gain``."""
    rows, cols = max(fan_in, fan_out), min(fan_in, fan_out)
    a = rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix the sign ambiguity so init is reproducible
    if fan_in < fan_out:
        q = q.T
    return gain * q[:fan_in, :fan_out]


@dataclass(frozen=True)
class MlpSpec:
    """Widths and activations of a fully connected stack.

    ``activation`` is applied between affine layers; ``output_activation``
    (none or softmax) on the final output.
    """

    layer_widths: tuple[int, ...]
    activation: str = "tanh"
    output_activation: str = "none"

    def __post_init__(self):
        if len(self.layer_widths) < 2:
            raise ValueError("layer_widths needs at least input and output width")
        if any(w <= 0 for w in self.layer_widths):
            raise ValueError(f"layer widths must be positive, got {self.layer_widths}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.output_activation not in ("none", "softmax"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")


class Mlp:
    """Fully connected network with orthogonal init and named parameters."""

    def __init__(self, spec: MlpSpec, rng: np.random.Generator, final_gain: float = 1.0, name: str = "mlp"):
        self.spec = spec
        self.name = name
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        widths = spec.layer_widths
        n_layers = len(widths) - 1
        for i in range(n_layers):
            gain = final_gain if i == n_layers - 1 else np.sqrt(2.0)
            w = Tensor(orthogonal(rng, widths[i], widths[i + 1], gain), requires_grad=True)
            b = Tensor(np.zeros(widths[i + 1]), requires_grad=True)
            self.weights.append(w)
            self.biases.append(b)

    def logits(self, x) -> Tensor:
        """Run the stack up to (not including) the output activation."""
        act = _ACTIVATIONS[self.spec.activation]
        h = x if isinstance(x, Tensor) else Tensor(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = matmul(h, w) + b
            if i < last:
                h = act(h)
        return h

    def forward(self, x) -> Tensor:
        h = self.logits(x)
        if self.spec.output_activation == "softmax":
            h = softmax(h)
        return h

    def log_probs(self, x) -> Tensor:
        """Log-softmax over the final logits (valid for softmax-output heads)."""
        return log_softmax(self.logits(x))

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"{self.name}.w{i}", w))
            out.append((f"{self.name}.b{i}", b))
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]


def _check_adjacency(adj: np.ndarray) -> None:
    if adj.ndim < 2 or adj.shape[-1] != adj.shape[-2]:
        raise ValueError(f"adjacency must be square, got shape {adj.shape}")
    if not (((adj == 0.0) | (adj == 1.0)).all()):
        raise ValueError("adjacency entries must be 0 or 1")
    diag = np.diagonal(adj, axis1=-2, axis2=-1)
    if not (diag == 1.0).all():
        raise ValueError("adjacency diagonal must be all ones (self-loops)")
    if not (adj == np.swapaxes(adj, -1, -2)).all():
        raise ValueError("adjacency must be symmetric")


def mixing_matrix(adj: np.ndarray) -> np.ndarray:
    """Degree-normalized adjacency: rescale each link by 1/sqrt(deg_i * deg_j).

    Accepts a stack of adjacency matrices in the leading axes. Degrees count
    the self-loop, so every row degree is at least 1.
    """
    adj = np.asarray(adj, dtype=np.float64)
    _check_adjacency(adj)
    deg = adj.sum(axis=-1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return adj * inv_sqrt[..., :, None] * inv_sqrt[..., None, :]


def aggregate_neighbors(features, adj: np.ndarray, self_mix: float) -> Tensor:
    """Blend each node's features with its degree-normalized neighborhood average.

    Output is ``self_mix * x + (1 - self_mix) * S @ x`` where ``S`` is the
    symmetric degree-normalized adjacency. ``features`` is (..., N, F) and
    ``adj`` a matching (..., N, N) 0/1 matrix with unit diagonal.
    """
    if not 0.0 <= self_mix <= 1.0:
        raise ValueError(f"self_mix must lie in [0, 1], got {self_mix}")
    x = features if isinstance(features, Tensor) else Tensor(features)
    if x.data.ndim < 2:
        raise ValueError(f"features must be at least 2D, got shape {x.data.shape}")
    s = mixing_matrix(adj)
    if s.shape[-1] != x.data.shape[-2]:
        raise ValueError(f"adjacency {s.shape} does not match features {x.data.shape}")
    mixed = matmul(Tensor(s), x)
    return x * self_mix + mixed * (1.0 - self_mix)


def categorical_sample(probs: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
    """Draw an index from a probability vector; returns (index, log probability)."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise ValueError(f"probs must be a vector, got shape {probs.shape}")
    if (probs < 0.0).any():
        raise ValueError("probs must be nonnegative")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probs must sum to 1, got {probs.sum()!r}")
    cdf = np.cumsum(probs)
    action = int(np.searchsorted(cdf, rng.random(), side="right"))
    action = min(action, probs.size - 1)
    return action, float(np.log(probs[action]))


class Adam:
    """Adam with optional global gradient-norm clipping over its parameter group."""

    def __init__(
        self,
        params: list[Tensor],
        lr: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        grad_clip_norm: float | None = None,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.grad_clip_norm = grad_clip_norm
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def _clip_grads(self):
        if self.grad_clip_norm is None:
            return
        total = np.sqrt(
            sum(float((p.grad * p.grad).sum()) for p in self.params if p.grad is not None)
        )
        if total > self.grad_clip_norm:
            scale = self.grad_clip_norm / total
            for p in self.params:
                if p.grad is not None:
                    p.grad = p.grad * scale

    def step(self):
        self._clip_grads()
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self._m, self._v):
            if p.grad is None:
                continue
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
