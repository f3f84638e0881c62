"""Reverse-mode automatic differentiation over float64 numpy arrays.

A small tape-style engine covering exactly the operations the networks and
losses in this package compose: affine maps, pointwise activations,
softmax / log-softmax, reductions, and the clamp/minimum pieces of the
clipped policy objective. Everything is 64-bit; graphs are recorded eagerly
and freed once the tensors that reference them go out of scope.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "backward",
    "add",
    "sub",
    "mul",
    "neg",
    "matmul",
    "tanh",
    "relu",
    "exp",
    "log",
    "softmax",
    "log_softmax",
    "reduce_sum",
    "reduce_mean",
    "minimum",
    "clip",
    "reshape",
    "gather_rows",
    "stop_gradient",
]


class Tensor:
    """Array node in a dynamically recorded computation graph.

    ``data`` is always a float64 ndarray. Leaves constructed with
    ``requires_grad=True`` accumulate into ``grad`` when :func:`backward`
    runs; interior nodes never retain gradients.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() requires a single element, got shape {self.data.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward_fn) -> Tensor:
    """Create an op output, linked into the graph only if a parent needs grads."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``grad`` of every requires-grad leaf.

    ``loss`` must be a scalar produced by operations from this module.
    Repeated calls accumulate, torch-style; optimizers zero grads between
    steps.
    """
    if not isinstance(loss, Tensor):
        raise ValueError("backward target must be a Tensor")
    if loss.data.size != 1:
        raise ValueError(f"backward target must be scalar, got shape {loss.data.shape}")

    # Iterative post-order: parents land before their consumers.
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward_fn is not None:
            for parent, pg in zip(node._parents, node._backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg
        elif node.requires_grad:
            node.grad = g.copy() if node.grad is None else node.grad + g


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    ash, bsh = a.data.shape, b.data.shape

    def back(g):
        return _unbroadcast(g, ash), _unbroadcast(g, bsh)

    return _node(a.data + b.data, (a, b), back)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    ash, bsh = a.data.shape, b.data.shape

    def back(g):
        return _unbroadcast(g, ash), _unbroadcast(-g, bsh)

    return _node(a.data - b.data, (a, b), back)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    ad, bd = a.data, b.data

    def back(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _node(ad * bd, (a, b), back)


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _node(-a.data, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    """Matrix product; supports 2D x 2D, stacked x 2D, and stacked x stacked."""
    a, b = _as_tensor(a), _as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2:
        raise ValueError("matmul operands must have at least 2 dimensions")

    if ad.ndim == 2 and bd.ndim == 2:

        def back(g):
            return g @ bd.T, ad.T @ g

    elif bd.ndim == 2:
        # (..., m, k) @ (k, n): fold the stack axes for the weight gradient.
        def back(g):
            k, n = bd.shape
            da = g @ bd.T
            db = ad.reshape(-1, k).T @ g.reshape(-1, n)
            return da, db

    elif ad.ndim == bd.ndim and ad.shape[:-2] == bd.shape[:-2]:

        def back(g):
            return g @ np.swapaxes(bd, -1, -2), np.swapaxes(ad, -1, -2) @ g

    else:
        raise ValueError(f"unsupported matmul shapes {ad.shape} @ {bd.shape}")

    return _node(ad @ bd, (a, b), back)


# ---------------------------------------------------------------------------
# pointwise
# ---------------------------------------------------------------------------


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out_data = np.tanh(a.data)
    return _node(out_data, (a,), lambda g: (g * (1.0 - out_data * out_data),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0.0
    return _node(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out_data = np.exp(a.data)
    return _node(out_data, (a,), lambda g: (g * out_data,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    ad = a.data
    return _node(np.log(ad), (a,), lambda g: (g / ad,))


def softmax(a) -> Tensor:
    """Row-wise softmax over the last axis."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _node(s, (a,), back)


def log_softmax(a) -> Tensor:
    """Row-wise log-softmax over the last axis, computed via log-sum-exp."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    lp = shifted - lse
    p = np.exp(lp)

    def back(g):
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return _node(lp, (a,), back)


# ---------------------------------------------------------------------------
# reductions and shape
# ---------------------------------------------------------------------------


def reduce_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    ash = a.data.shape

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, ash).copy(),)

    return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), back)


def reduce_mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    ash = a.data.shape
    count = a.data.size if axis is None else ash[axis]

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, ash).copy(),)

    return _node(a.data.mean(axis=axis, keepdims=keepdims), (a,), back)


def minimum(a, b) -> Tensor:
    """Elementwise minimum; gradient follows the smaller side (ties go to ``a``)."""
    a, b = _as_tensor(a), _as_tensor(b)
    ad, bd = a.data, b.data
    take_a = ad <= bd

    def back(g):
        return (
            _unbroadcast(g * take_a, ad.shape),
            _unbroadcast(g * ~take_a, bd.shape),
        )

    return _node(np.where(take_a, ad, bd), (a, b), back)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values into [lo, hi]; gradient passes only inside the interval."""
    a = _as_tensor(a)
    inside = (a.data >= lo) & (a.data <= hi)
    return _node(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,))


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    ash = a.data.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(ash),))


def gather_rows(a, index) -> Tensor:
    """Pick ``a[i, index[i]]`` from a 2D tensor, one element per row."""
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError(f"gather_rows expects a 2D tensor, got shape {a.data.shape}")
    idx = np.asarray(index, dtype=np.int64)
    rows, cols = a.data.shape
    if idx.shape != (rows,):
        raise ValueError(f"index shape {idx.shape} does not match {rows} rows")
    if idx.min() < 0 or idx.max() >= cols:
        raise ValueError("gather index out of range")
    rng = np.arange(rows)

    def back(g):
        da = np.zeros((rows, cols))
        da[rng, idx] = g
        return (da,)

    return _node(a.data[rng, idx], (a,), back)


def stop_gradient(a) -> Tensor:
    """Forward the values, block all gradient flow into ``a``."""
    a = _as_tensor(a)
    return Tensor(a.data)
