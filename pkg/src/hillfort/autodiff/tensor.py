"""Reverse-mode automatic differentiation over float64 numpy arrays.

A ``Tensor`` wraps an ndarray together with an optional gradient slot.
Operations record their parents and a backward closure; calling
``backward()`` on a scalar builds a ``ComputationTape`` (the operations
reaching that scalar in topological order) and walks it once in reverse.

Everything is double precision.  Broadcasting is supported for the
elementwise ops; gradients are summed back down to the parent shape.
"""

from __future__ import annotations

import contextlib

import numpy as np

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (rollouts, evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """Array node in the autodiff graph.

    grad is None until backward() touches the tensor; accumulated in place
    across multiple uses of the same tensor.
    """

    __slots__ = ("values", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

    # ---- construction helpers -------------------------------------------

    @staticmethod
    def _from_op(values, parents, backward):
        out = Tensor.__new__(Tensor)
        out.values = values
        out.grad = None
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    # ---- basic introspection --------------------------------------------

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    def item(self) -> float:
        return float(self.values)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.values.shape}{flag})"

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.values.copy())

    # ---- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape)

    def backward(self, seed=None):
        tape = ComputationTape(self)
        tape.backward(seed)
        return tape


class ComputationTape:
    """Topologically ordered record of the ops reaching one output.

    Built by depth-first traversal of the parent links; ``backward`` visits
    each recorded node exactly once, in reverse order.
    """

    def __init__(self, root: Tensor):
        self.root = root
        self.nodes: list[Tensor] = []
        seen: set[int] = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.nodes.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

    def backward(self, seed=None):
        root = self.root
        if seed is None:
            if root.values.size != 1:
                raise ValueError("backward() without seed needs a scalar output")
            seed = np.ones_like(root.values)
        grads: dict[int, np.ndarray] = {id(root): np.asarray(seed, dtype=np.float64)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and node._backward is None:
                # leaf parameter
                node.grad = g if node.grad is None else node.grad + g
                continue
            if node._backward is None:
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient g down to the given (broadcast-source) shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


# ---- elementwise arithmetic ---------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.values + b.values

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(out, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.values - b.values

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.values * b.values

    def backward(g):
        return (
            _unbroadcast(g * b.values, a.shape),
            _unbroadcast(g * a.values, b.shape),
        )

    return Tensor._from_op(out, (a, b), backward)


def neg(a) -> Tensor:
    a = _as_tensor(a)

    def backward(g):
        return (-g,)

    return Tensor._from_op(-a.values, (a,), backward)


def square(a) -> Tensor:
    a = _as_tensor(a)

    def backward(g):
        return (g * 2.0 * a.values,)

    return Tensor._from_op(a.values * a.values, (a,), backward)


# ---- linear algebra ------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.values @ b.values

    def backward(g):
        return g @ b.values.T, a.values.T @ g

    return Tensor._from_op(out, (a, b), backward)


def einsum2(eq: str, a, b) -> Tensor:
    """Two-operand einsum with autodiff.

    Restricted to equations where no operand repeats an index and every
    input index appears in the output or the other operand, so the
    gradient is itself an einsum with terms swapped.
    """
    a, b = _as_tensor(a), _as_tensor(b)
    lhs, out_term = eq.split("->")
    ta, tb = lhs.split(",")
    for term in (ta, tb):
        if len(set(term)) != len(term):
            raise ValueError(f"repeated index within operand in {eq!r}")
    for ch in ta:
        if ch not in out_term and ch not in tb:
            raise ValueError(f"index {ch!r} of first operand vanishes in {eq!r}")
    for ch in tb:
        if ch not in out_term and ch not in ta:
            raise ValueError(f"index {ch!r} of second operand vanishes in {eq!r}")
    out = np.einsum(eq, a.values, b.values)

    def backward(g):
        ga = np.einsum(f"{out_term},{tb}->{ta}", g, b.values)
        gb = np.einsum(f"{out_term},{ta}->{tb}", g, a.values)
        return ga, gb

    return Tensor._from_op(out, (a, b), backward)


# ---- reductions and shaping ---------------------------------------------


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    out = a.values.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._from_op(np.asarray(out, dtype=np.float64), (a,), backward)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    if axis is None:
        count = a.values.size
    else:
        count = a.values.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    old = a.shape
    out = a.values.reshape(shape)

    def backward(g):
        return (g.reshape(old),)

    return Tensor._from_op(out, (a,), backward)


def concat(tensors, axis=0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = np.concatenate([t.values for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor._from_op(out, tuple(tensors), backward)


def take_action(t, idx) -> Tensor:
    """Pick one entry along axis 1 per row.

    (B, A) with idx (B,) gives (B,); (B, A, K) gives (B, K).  Used to pull
    chosen-action values out of a per-action table.
    """
    t = _as_tensor(t)
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(t.shape[0])
    out = t.values[rows, idx]

    def backward(g):
        full = np.zeros_like(t.values)
        full[rows, idx] = g
        return (full,)

    return Tensor._from_op(out, (t,), backward)


# ---- nonlinearities ------------------------------------------------------


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.values > 0.0

    def backward(g):
        return (g * mask,)

    return Tensor._from_op(a.values * mask, (a,), backward)


def elu(a, alpha: float = 1.0) -> Tensor:
    a = _as_tensor(a)
    neg_part = alpha * np.expm1(np.minimum(a.values, 0.0))
    out = np.where(a.values > 0.0, a.values, neg_part)

    def backward(g):
        return (g * np.where(a.values > 0.0, 1.0, neg_part + alpha),)

    return Tensor._from_op(out, (a,), backward)


def absolute(a) -> Tensor:
    a = _as_tensor(a)
    sign = np.sign(a.values)

    def backward(g):
        return (g * sign,)

    return Tensor._from_op(np.abs(a.values), (a,), backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.values)

    def backward(g):
        return (g * (1.0 - out * out),)

    return Tensor._from_op(out, (a,), backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.values))

    def backward(g):
        return (g * out * (1.0 - out),)

    return Tensor._from_op(out, (a,), backward)


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = np.exp(a.values)

    def backward(g):
        return (g * out,)

    return Tensor._from_op(out, (a,), backward)


def log(a) -> Tensor:
    a = _as_tensor(a)

    def backward(g):
        return (g / a.values,)

    return Tensor._from_op(np.log(a.values), (a,), backward)


def softmax(a, axis: int = -1) -> Tensor:
    """Stable softmax along an axis; rows sum to one."""
    a = _as_tensor(a)
    shifted = a.values - a.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)

    return Tensor._from_op(out, (a,), backward)


def log_softmax(a, axis: int = -1) -> Tensor:
    a = _as_tensor(a)
    shifted = a.values - a.values.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    soft = np.exp(out)

    def backward(g):
        return (g - soft * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(out, (a,), backward)


def huber_unit(a) -> Tensor:
    """Huber loss elementwise with kappa = 1: 0.5 x^2 inside the unit band,
    |x| - 0.5 outside."""
    a = _as_tensor(a)
    absa = np.abs(a.values)
    inside = absa <= 1.0
    out = np.where(inside, 0.5 * a.values * a.values, absa - 0.5)

    def backward(g):
        return (g * np.clip(a.values, -1.0, 1.0),)

    return Tensor._from_op(out, (a,), backward)
