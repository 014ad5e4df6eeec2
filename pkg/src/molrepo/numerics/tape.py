"""Reverse-mode automatic differentiation over dense numpy arrays.

Every operation records a node holding its value, its parent nodes and the
local vector-Jacobian products needed to push gradients backwards.  The
"tape" is implicit: calling :func:`backward` on a scalar loss node walks the
recorded graph in reverse topological order and accumulates gradients into
every node created with ``requires_grad=True``.

All arrays are float64.  Reductions use numpy's fixed-order summation, so a
run is bit-reproducible for a fixed seed on a fixed machine.
"""

from __future__ import annotations

import numpy as np

from .sparse import SparseMatrix


class ShapeMismatch(ValueError):
    """Operands have incompatible shapes for the requested operation."""


class Node:
    """One recorded value in the computation graph.

    ``parents`` and ``vjps`` are parallel tuples: ``vjps[i]`` maps the
    gradient flowing into this node to the gradient contribution for
    ``parents[i]``.
    """

    __slots__ = ("value", "parents", "vjps", "requires_grad", "grad")

    def __init__(self, value, parents=(), vjps=(), requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = parents
        self.vjps = vjps
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(shape={self.value.shape}, requires_grad={self.requires_grad})"


def constant(value) -> Node:
    """Wrap an array as a leaf that does not collect gradients."""
    return Node(value)


def parameter(value) -> Node:
    """Wrap an array as a trainable leaf."""
    return Node(value, requires_grad=True)


def _as_node(x) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    # Sum away leading axes that were added by broadcasting.
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    try:
        value = a.value + b.value
    except ValueError as exc:
        raise ShapeMismatch(f"add: {a.shape} vs {b.shape}") from exc
    return Node(
        value,
        parents=(a, b),
        vjps=(
            lambda g: _unbroadcast(g, a.value.shape),
            lambda g: _unbroadcast(g, b.value.shape),
        ),
    )


def sub(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    try:
        value = a.value - b.value
    except ValueError as exc:
        raise ShapeMismatch(f"sub: {a.shape} vs {b.shape}") from exc
    return Node(
        value,
        parents=(a, b),
        vjps=(
            lambda g: _unbroadcast(g, a.value.shape),
            lambda g: _unbroadcast(-g, b.value.shape),
        ),
    )


def mul(a, b) -> Node:
    """Elementwise product with numpy broadcasting."""
    a, b = _as_node(a), _as_node(b)
    try:
        value = a.value * b.value
    except ValueError as exc:
        raise ShapeMismatch(f"mul: {a.shape} vs {b.shape}") from exc
    return Node(
        value,
        parents=(a, b),
        vjps=(
            lambda g: _unbroadcast(g * b.value, a.value.shape),
            lambda g: _unbroadcast(g * a.value, b.value.shape),
        ),
    )


def div(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    try:
        value = a.value / b.value
    except ValueError as exc:
        raise ShapeMismatch(f"div: {a.shape} vs {b.shape}") from exc
    return Node(
        value,
        parents=(a, b),
        vjps=(
            lambda g: _unbroadcast(g / b.value, a.value.shape),
            lambda g: _unbroadcast(-g * a.value / (b.value * b.value), b.value.shape),
        ),
    )


def scale(a, c: float) -> Node:
    a = _as_node(a)
    c = float(c)
    return Node(a.value * c, parents=(a,), vjps=(lambda g: g * c,))


def matmul(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    return Node(
        a.value @ b.value,
        parents=(a, b),
        vjps=(lambda g: g @ b.value.T, lambda g: a.value.T @ g),
    )


def spmm(s: SparseMatrix, a) -> Node:
    """Sparse (constant) x dense (differentiable) matrix product."""
    a = _as_node(a)
    if a.value.ndim != 2 or s.shape[1] != a.value.shape[0]:
        raise ShapeMismatch(f"spmm: {s.shape} @ {a.shape}")
    st = s.transpose()
    return Node(s.matmul(a.value), parents=(a,), vjps=(lambda g: st.matmul(g),))


def transpose(a) -> Node:
    a = _as_node(a)
    return Node(a.value.T, parents=(a,), vjps=(lambda g: g.T,))


def reshape(a, shape) -> Node:
    a = _as_node(a)
    old = a.value.shape
    return Node(a.value.reshape(shape), parents=(a,), vjps=(lambda g: g.reshape(old),))


def concat_cols(a, b) -> Node:
    a, b = _as_node(a), _as_node(b)
    if a.value.shape[0] != b.value.shape[0]:
        raise ShapeMismatch(f"concat_cols: {a.shape} vs {b.shape}")
    na = a.value.shape[1]
    return Node(
        np.concatenate([a.value, b.value], axis=1),
        parents=(a, b),
        vjps=(lambda g: g[:, :na], lambda g: g[:, na:]),
    )


def gather_rows(a, index) -> Node:
    """Select rows ``a[index]``; duplicate indices accumulate on backward."""
    a = _as_node(a)
    index = np.asarray(index, dtype=np.intp)

    def vjp(g):
        out = np.zeros_like(a.value)
        np.add.at(out, index, g)
        return out

    return Node(a.value[index], parents=(a,), vjps=(vjp,))


def segment_sum(a, segments, num_segments: int) -> Node:
    """Sum rows of ``a`` into ``num_segments`` buckets given by ``segments``."""
    a = _as_node(a)
    segments = np.asarray(segments, dtype=np.intp)
    if segments.shape[0] != a.value.shape[0]:
        raise ShapeMismatch(f"segment_sum: {a.shape} with {segments.shape} segments")
    out = np.zeros((num_segments,) + a.value.shape[1:], dtype=np.float64)
    np.add.at(out, segments, a.value)
    return Node(out, parents=(a,), vjps=(lambda g: g[segments],))


def reduce_sum(a) -> Node:
    """Sum all entries to a scalar."""
    a = _as_node(a)
    shape = a.value.shape
    return Node(
        np.array(a.value.sum()),
        parents=(a,),
        vjps=(lambda g: np.broadcast_to(g, shape).copy(),),
    )


def reduce_mean(a) -> Node:
    a = _as_node(a)
    n = a.value.size
    return scale(reduce_sum(a), 1.0 / n)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def sigmoid(a) -> Node:
    a = _as_node(a)
    # Stable in both tails.
    v = np.where(a.value >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.value))),
                 np.exp(-np.abs(a.value)) / (1.0 + np.exp(-np.abs(a.value))))
    return Node(v, parents=(a,), vjps=(lambda g: g * v * (1.0 - v),))


def exp(a) -> Node:
    a = _as_node(a)
    v = np.exp(a.value)
    return Node(v, parents=(a,), vjps=(lambda g: g * v,))


def log(a) -> Node:
    a = _as_node(a)
    return Node(np.log(a.value), parents=(a,), vjps=(lambda g: g / a.value,))


def softplus(a) -> Node:
    """log(1 + e^x), computed as logaddexp(0, x); derivative is sigmoid(x)."""
    a = _as_node(a)
    v = np.logaddexp(0.0, a.value)
    sig = 1.0 / (1.0 + np.exp(-np.clip(a.value, -500, 500)))
    return Node(v, parents=(a,), vjps=(lambda g: g * sig,))


def relu(a) -> Node:
    a = _as_node(a)
    mask = (a.value > 0).astype(np.float64)
    return Node(a.value * mask, parents=(a,), vjps=(lambda g: g * mask,))


def leaky_relu(a, slope: float = 0.2) -> Node:
    a = _as_node(a)
    deriv = np.where(a.value > 0, 1.0, slope)
    return Node(
        np.where(a.value > 0, a.value, slope * a.value),
        parents=(a,),
        vjps=(lambda g: g * deriv,),
    )


def elu(a, alpha: float = 1.0) -> Node:
    a = _as_node(a)
    neg = alpha * (np.exp(np.minimum(a.value, 0.0)) - 1.0)
    v = np.where(a.value > 0, a.value, neg)
    deriv = np.where(a.value > 0, 1.0, neg + alpha)
    return Node(v, parents=(a,), vjps=(lambda g: g * deriv,))


ACTIVATIONS = {
    "elu": elu,
    "relu": relu,
    "leaky_relu": leaky_relu,
    "softplus": softplus,
}


def activation(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}")


def softmax(a) -> Node:
    """Softmax over a 1-d vector (used for layer-attention logits)."""
    a = _as_node(a)
    if a.value.ndim != 1:
        raise ShapeMismatch(f"softmax expects a vector, got {a.shape}")
    shifted = a.value - a.value.max()
    e = np.exp(shifted)
    p = e / e.sum()

    def vjp(g):
        return p * (g - np.dot(g, p))

    return Node(p, parents=(a,), vjps=(vjp,))


def dropout(a, rate: float, training: bool, rng: np.random.Generator | None = None) -> Node:
    """Inverted dropout: zero with probability ``rate``, scale survivors.

    Identity when ``training`` is false or ``rate`` is 0.
    """
    a = _as_node(a)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return Node(a.value.copy(), parents=(a,), vjps=(lambda g: g,))
    if rng is None:
        raise ValueError("dropout in training mode requires an rng")
    keep = (rng.random(a.value.shape) >= rate).astype(np.float64) / (1.0 - rate)
    return Node(a.value * keep, parents=(a,), vjps=(lambda g: g * keep,))


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Node) -> None:
    """Accumulate d(loss)/d(node) into ``node.grad`` for the whole graph.

    ``loss`` must be a scalar node.  Each node is visited exactly once, in
    reverse topological order.
    """
    if loss.value.size != 1:
        raise ShapeMismatch(f"backward expects a scalar loss, got shape {loss.shape}")

    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        node.grad = g if node.grad is None else node.grad + g
        for parent, vjp in zip(node.parents, node.vjps):
            if not parent.requires_grad:
                continue
            contrib = vjp(g)
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + contrib
            else:
                grads[id(parent)] = contrib


def zero_grads(nodes) -> None:
    for n in nodes:
        n.grad = None
