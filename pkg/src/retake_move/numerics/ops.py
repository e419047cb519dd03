"""Differentiable ops used by the movement model.

Each op is registered in ``REGISTRY`` together with a generator of random
instances, which the gradient checker walks.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import ShapeError, Tensor, as_tensor, make_result

MASK_VALUE = -1e9
LEAKY_SLOPE = 0.01

REGISTRY = {}


def register(name, sampler):
    """Record an op and a ``sampler(rng, dtype) -> (args, kwargs)`` for gradient checks."""

    def deco(fn):
        REGISTRY[name] = (fn, sampler)
        return fn

    return deco


def _f64(t):
    return t.data.astype(np.float64, copy=False)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _rand(rng, shape, dtype, scale=1.0):
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True, dtype=dtype)


# ---------------------------------------------------------------- elementwise


def _sample_binary(rng, dtype):
    return (_rand(rng, (3, 4), dtype), _rand(rng, (4,), dtype)), {}


@register("add", _sample_binary)
def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = _f64(a) + _f64(b)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_result(out, (a, b), backward, "add")


@register("mul", _sample_binary)
def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    av, bv = _f64(a), _f64(b)
    try:
        out = av * bv
    except ValueError as exc:
        raise ShapeError(str(exc)) from None

    def backward(g):
        return _unbroadcast(g * bv, a.shape), _unbroadcast(g * av, b.shape)

    return make_result(out, (a, b), backward, "mul")


def _sample_unary(rng, dtype):
    x = rng.normal(0.0, 1.0, size=(4, 5))
    # Keep probes away from the kink of piecewise-linear ops.
    x = np.where(np.abs(x) < 0.05, 0.3, x)
    return (Tensor(x, requires_grad=True, dtype=dtype),), {}


@register("leaky_relu", _sample_unary)
def leaky_relu(x, slope=LEAKY_SLOPE):
    x = as_tensor(x)
    xv = _f64(x)
    pos = xv > 0
    out = np.maximum(xv, slope * xv) if 0.0 <= slope <= 1.0 else np.where(pos, xv, slope * xv)

    def backward(g):
        return (np.where(pos, g, slope * g),)

    return make_result(out, (x,), backward, "leaky_relu")


@register("reshape", lambda rng, dtype: ((_rand(rng, (2, 6), dtype), (3, 4)), {}))
def reshape(x, shape):
    x = as_tensor(x)
    out = _f64(x).reshape(shape)

    def backward(g):
        return (g.reshape(x.shape),)

    return make_result(out, (x,), backward, "reshape")


@register("sum_all", lambda rng, dtype: ((_rand(rng, (3, 5), dtype),), {}))
def sum_all(x):
    x = as_tensor(x)
    out = np.asarray(_f64(x).sum())

    def backward(g):
        return (np.broadcast_to(g, x.shape).astype(np.float64),)

    return make_result(out, (x,), backward, "sum_all")


# ---------------------------------------------------------------- linear algebra


def _sample_matmul(rng, dtype):
    return (_rand(rng, (2, 3, 4), dtype), _rand(rng, (4, 5), dtype)), {}


@register("matmul", _sample_matmul)
def matmul(a, b):
    """Batched matrix product with float64 accumulation."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ShapeError(f"matmul {a.shape} @ {b.shape}")
    av, bv = _f64(a), _f64(b)
    out = np.matmul(av, bv)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(bv, -1, -2))
        if b.ndim == 2:
            gb = np.matmul(av.reshape(-1, av.shape[-1]).T, g.reshape(-1, g.shape[-1]))
        else:
            gb = _unbroadcast(np.matmul(np.swapaxes(av, -1, -2), g), b.shape)
        return _unbroadcast(ga, a.shape), gb

    return make_result(out, (a, b), backward, "matmul")


def _sample_linear(rng, dtype):
    return (_rand(rng, (2, 3, 4), dtype), _rand(rng, (4, 6), dtype, 0.5), _rand(rng, (6,), dtype)), {}


@register("linear", _sample_linear)
def linear(x, w, b=None):
    """``x @ w + b`` over the last axis of ``x``."""
    x, w = as_tensor(x), as_tensor(w)
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"linear {x.shape} with weight {w.shape}")
    lead = x.shape[:-1]
    xv = _f64(x).reshape(-1, x.shape[-1])
    wv = _f64(w)
    out = xv @ wv
    if b is not None:
        b = as_tensor(b)
        out += _f64(b)
    out = out.reshape(lead + (w.shape[1],))

    def backward(g):
        g2 = g.reshape(-1, w.shape[1])
        gx = (g2 @ wv.T).reshape(x.shape) if x.requires_grad else None
        gw = xv.T @ g2
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    return make_result(out, parents, backward, "linear")


# ---------------------------------------------------------------- normalizers


def _softmax64(xv):
    z = xv - xv.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@register("softmax", lambda rng, dtype: ((_rand(rng, (3, 7), dtype),), {}))
def softmax(x):
    x = as_tensor(x)
    p = _softmax64(_f64(x))

    def backward(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return make_result(p, (x,), backward, "softmax")


@register("log_softmax", lambda rng, dtype: ((_rand(rng, (3, 7), dtype),), {}))
def log_softmax(x):
    x = as_tensor(x)
    xv = _f64(x)
    z = xv - xv.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    p = np.exp(out)

    def backward(g):
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return make_result(out, (x,), backward, "log_softmax")


def _sample_layer_norm(rng, dtype):
    return (
        _rand(rng, (2, 3, 8), dtype),
        _rand(rng, (8,), dtype, 0.5),
        _rand(rng, (8,), dtype, 0.5),
    ), {}


@register("layer_norm", _sample_layer_norm)
def layer_norm(x, gamma, beta, eps=1e-5):
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    xv = _f64(x)
    mu = xv.mean(axis=-1, keepdims=True)
    xc = xv - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    gv, bv = _f64(gamma), _f64(beta)
    out = xhat * gv + bv

    def backward(g):
        n = xv.shape[-1]
        gh = g * gv
        gx = inv / n * (n * gh - gh.sum(axis=-1, keepdims=True) - xhat * (gh * xhat).sum(axis=-1, keepdims=True))
        lead = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return make_result(out, (x, gamma, beta), backward, "layer_norm")


# ---------------------------------------------------------------- encodings


def sinusoid_frequencies(dim, base=10000.0):
    """Frequency ladder of the classic transformer encoding, one per sin/cos pair."""
    if dim % 2:
        raise ShapeError("sinusoidal encoding width must be even")
    return 1.0 / base ** (np.arange(0, dim, 2, dtype=np.float64) / dim)


def sinusoid_table(positions, dim, base=10000.0):
    """Plain (non-differentiable) encoding table, e.g. for the fixed timestamps."""
    pos = np.asarray(positions, dtype=np.float64)[..., None]
    ang = pos * sinusoid_frequencies(dim, base)
    out = np.empty(pos.shape[:-1] + (dim,))
    out[..., 0::2] = np.sin(ang)
    out[..., 1::2] = np.cos(ang)
    return out


def _sample_sinusoid(rng, dtype):
    return (_rand(rng, (2, 3, 2), dtype, 3.0), 8), {"scale": 1.5}


@register("sinusoidal_encoding", _sample_sinusoid)
def sinusoidal_encoding(pos, dim_per_axis, scale=1.0):
    """Encode each coordinate of ``pos[..., A]`` and concatenate the A halves."""
    pos = as_tensor(pos)
    pv = _f64(pos) * scale
    freqs = sinusoid_frequencies(dim_per_axis)
    ang = pv[..., None] * freqs  # (..., A, dim/2)
    s, c = np.sin(ang), np.cos(ang)
    enc = np.empty(pv.shape + (dim_per_axis,))
    enc[..., 0::2] = s
    enc[..., 1::2] = c
    out = enc.reshape(pv.shape[:-1] + (pv.shape[-1] * dim_per_axis,))

    def backward(g):
        ge = g.reshape(enc.shape)
        gp = (ge[..., 0::2] * c - ge[..., 1::2] * s) * freqs
        return (gp.sum(axis=-1) * scale,)

    return make_result(out, (pos,), backward, "sinusoidal_encoding")


def _sample_embedding_sum(rng, dtype):
    return (_rand(rng, (2, 4, 6), dtype), _rand(rng, (3, 6), dtype)), {}


@register("embedding_sum", _sample_embedding_sum)
def embedding_sum(x, enc):
    """Replicate each token ``H`` times and add the per-copy encoding.

    ``x`` is (B, P, E), ``enc`` is (H, E); output is (B, P*H, E) ordered
    token-major, so row ``p*H + h`` is token ``p`` at copy ``h``.
    """
    x, enc = as_tensor(x), as_tensor(enc)
    B, P, E = x.shape
    H = enc.shape[0]
    if enc.shape[1] != E:
        raise ShapeError(f"embedding_sum {x.shape} with encoding {enc.shape}")
    out = (_f64(x)[:, :, None, :] + _f64(enc)[None, None, :, :]).reshape(B, P * H, E)

    def backward(g):
        g4 = g.reshape(B, P, H, E)
        return g4.sum(axis=2), g4.sum(axis=(0, 1))

    return make_result(out, (x, enc), backward, "embedding_sum")


# ---------------------------------------------------------------- attention


def _sample_attention(rng, dtype):
    B, T, d = 2, 5, 4
    allow = rng.random((B, T, T)) < 0.6
    allow[:, np.arange(T), np.arange(T)] = True
    return (_rand(rng, (B, T, d), dtype), _rand(rng, (B, T, d), dtype), _rand(rng, (B, T, d), dtype), allow), {}


@register("masked_attention", _sample_attention)
def masked_attention(q, k, v, allow):
    """Single-head scaled dot-product attention.

    ``allow`` is a boolean (B, T, T) matrix; disallowed query/key pairs get an
    additive ``MASK_VALUE`` logit before the softmax.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if q.shape != k.shape or k.shape[:2] != v.shape[:2]:
        raise ShapeError(f"attention q{q.shape} k{k.shape} v{v.shape}")
    allow = np.asarray(allow, dtype=bool)
    qv, kv, vv = _f64(q), _f64(k), _f64(v)
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = np.matmul(qv, np.swapaxes(kv, -1, -2)) * scale
    scores = scores + np.where(allow, 0.0, MASK_VALUE)
    a = _softmax64(scores)
    out = np.matmul(a, vv)

    def backward(g):
        gv = np.matmul(np.swapaxes(a, -1, -2), g)
        ga = np.matmul(g, np.swapaxes(vv, -1, -2))
        gs = a * (ga - (ga * a).sum(axis=-1, keepdims=True)) * scale
        gq = np.matmul(gs, kv)
        gk = np.matmul(np.swapaxes(gs, -1, -2), qv)
        return gq, gk, gv

    return make_result(out, (q, k, v), backward, "masked_attention")


# ---------------------------------------------------------------- losses


def _sample_cross_entropy(rng, dtype):
    labels = rng.integers(0, 6, size=(3, 4))
    weights = (rng.random((3, 4)) < 0.7).astype(np.float64)
    return (_rand(rng, (3, 4, 6), dtype), labels, weights), {}


@register("cross_entropy", _sample_cross_entropy)
def cross_entropy(logits, labels, weights):
    """``sum(weights * -log softmax(logits)[labels])``; zero weights contribute exactly 0."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    C = logits.shape[-1]
    if labels.shape != logits.shape[:-1] or w.shape != labels.shape:
        raise ShapeError(f"cross_entropy logits {logits.shape} labels {labels.shape} weights {w.shape}")
    if ((labels < 0) | (labels >= C)).any():
        raise ValueError(f"label out of range 0..{C - 1}")
    xv = _f64(logits)
    z = xv - xv.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - lse
    picked = np.take_along_axis(logp, labels[..., None], axis=-1)[..., 0]
    active = w != 0.0
    out = np.asarray(-(np.where(active, picked, 0.0) * w).sum())

    def backward(g):
        p = np.exp(logp)
        onehot = np.zeros_like(p)
        np.put_along_axis(onehot, labels[..., None], 1.0, axis=-1)
        return ((p - onehot) * (w * g)[..., None],)

    return make_result(out, (logits,), backward, "cross_entropy")
