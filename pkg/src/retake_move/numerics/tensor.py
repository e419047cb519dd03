"""A small reverse-mode autodiff tensor over numpy arrays.

Only what the movement model needs.  Values are stored as float32 (or float64
for gradient-check shadow copies); every op computes in float64 and rounds the
result back to the storage dtype of its inputs.
"""

from __future__ import annotations

import contextlib

import numpy as np


class NumericError(ArithmeticError):
    """Raised when an op produces a non-finite value."""


class ShapeError(ValueError):
    """Raised on non-conformable operand shapes."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, dtype=None):
        arr = np.asarray(data)
        if dtype is None:
            dtype = arr.dtype if arr.dtype in (np.float32, np.float64) else np.float32
        self.data = np.asarray(arr, dtype=dtype, order="C")  # keeps 0-d scalars 0-d
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self.op = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op})"

    # Operator sugar over the registered ops.
    def __add__(self, other):
        from .ops import add

        return add(self, other)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)

    def reshape(self, *shape):
        from .ops import reshape

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self):
        from .ops import sum_all

        return sum_all(self)

    def backward(self):
        backward(self)


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def make_result(value, parents, backward_fn, op):
    """Wrap a float64 op result, cast to the parents' storage dtype, check finiteness."""
    dtype = np.float64 if any(p.dtype == np.float64 for p in parents) else np.float32
    with np.errstate(over="ignore"):
        out = Tensor(value, dtype=dtype)
    # Checked after the cast so float32 overflow is caught too.  NaN and Inf
    # survive a sum, so one reduction usually replaces an elementwise scan.
    if not np.isfinite(np.add.reduce(out.data, axis=None)) and not np.isfinite(out.data).all():
        raise NumericError(f"non-finite result in {op}")
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
        out.op = op
    return out


def _accumulate(t, g):
    g = np.asarray(g, dtype=np.float64)
    if g.shape != t.shape:
        raise ShapeError(f"gradient shape {g.shape} does not match {t.shape} ({t.op})")
    if t.grad is None:
        t.grad = g.astype(t.dtype)
    else:
        t.grad = (t.grad.astype(np.float64) + g).astype(t.dtype)


def backward(loss):
    """Populate ``.grad`` of every requires-grad tensor reachable from a scalar loss."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    grads = {id(loss): np.ones(loss.shape, dtype=np.float64)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            _accumulate(node, g)
            continue
        if node.op is None:
            raise RuntimeError("graph node without a registered adjoint")
        parent_grads = node._backward(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None or not p.requires_grad:
                continue
            if p._backward is None:
                _accumulate(p, pg)
            elif id(p) in grads:
                grads[id(p)] = grads[id(p)] + pg
            else:
                grads[id(p)] = np.asarray(pg, dtype=np.float64)
