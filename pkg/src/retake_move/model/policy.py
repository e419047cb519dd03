"""Transformer movement policy over 10 player tokens and 3 horizons."""

from __future__ import annotations

import math

import numpy as np

from ..numerics import ops
from ..numerics.tensor import ShapeError, Tensor, as_tensor, no_grad
from .config import ModelConfig


def _uniform(rng, shape, fan_in):
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, dtype=np.float32)


def init_params(config: ModelConfig, seed=0):
    """Named parameter table in a fixed order (the checkpoint order)."""
    rng = np.random.default_rng(seed)
    E, W, H = config.embed_dim, config.token_width, config.mlp_hidden
    params = {}

    def lin(name, fan_in, fan_out):
        params[f"{name}.w"] = _uniform(rng, (fan_in, fan_out), fan_in)
        params[f"{name}.b"] = _uniform(rng, (fan_out,), fan_in)

    lin("embed.0", W, E)
    lin("embed.1", E, E)
    lin("embed.2", E, E)
    for i in range(config.num_layers):
        p = f"layer{i}"
        lin(f"{p}.q", E, E)
        lin(f"{p}.k", E, E)
        lin(f"{p}.v", E, E)
        lin(f"{p}.o", E, E)
        params[f"{p}.ln1.g"] = Tensor(np.ones(E), requires_grad=True, dtype=np.float32)
        params[f"{p}.ln1.b"] = Tensor(np.zeros(E), requires_grad=True, dtype=np.float32)
        lin(f"{p}.mlp0", E, H)
        lin(f"{p}.mlp1", H, E)
        params[f"{p}.ln2.g"] = Tensor(np.ones(E), requires_grad=True, dtype=np.float32)
        params[f"{p}.ln2.b"] = Tensor(np.zeros(E), requires_grad=True, dtype=np.float32)
    # Zero head: the untrained policy is exactly uniform.
    params["head.w"] = Tensor(np.zeros((E, config.action_dim)), requires_grad=True, dtype=np.float32)
    params["head.b"] = Tensor(np.zeros(config.action_dim), requires_grad=True, dtype=np.float32)
    return params


def param_shapes(config: ModelConfig):
    return {k: v.shape for k, v in init_params(config, 0).items()}


class MovePolicy:
    def __init__(self, config: ModelConfig, params=None, seed=0):
        self.config = config
        self.params = params if params is not None else init_params(config, seed)
        self._temporal = Tensor(ops.sinusoid_table(config.horizon_offsets_ms, config.embed_dim), dtype=np.float32)
        self._scale = np.asarray(config.position_scale, dtype=np.float64)

    def num_parameters(self):
        return int(sum(p.data.size for p in self.params.values()))

    def parameters(self):
        return list(self.params.values())

    def attention_allow(self, alive):
        """Boolean (B, T, T) query/key permission matrix, T = players * horizons."""
        cfg = self.config
        B = alive.shape[0]
        T = cfg.num_players * cfg.horizons
        if cfg.variant == "no_attn":
            return np.broadcast_to(np.eye(T, dtype=bool), (B, T, T))
        keys = np.repeat(alive, cfg.horizons, axis=1)  # token-major: slot p -> rows p*H .. p*H+H-1
        return np.broadcast_to(keys[:, None, :], (B, T, T))

    def forward(self, tokens, alive):
        """Logits of shape (B, players, horizons, actions)."""
        cfg = self.config
        P = self.params
        tokens = as_tensor(tokens)
        alive = np.asarray(alive, dtype=bool)
        if tokens.ndim != 3 or tokens.shape[1] != cfg.num_players or tokens.shape[2] != cfg.token_width:
            raise ShapeError(f"expected tokens (B, {cfg.num_players}, {cfg.token_width}), got {tokens.shape}")
        if alive.shape != tokens.shape[:2]:
            raise ShapeError(f"alive mask {alive.shape} does not match tokens {tokens.shape}")
        if not alive.any(axis=1).all():
            raise ValueError("every sample needs at least one alive player")
        B = tokens.shape[0]
        E = cfg.embed_dim

        h = ops.leaky_relu(ops.linear(tokens, P["embed.0.w"], P["embed.0.b"]))
        h = ops.leaky_relu(ops.linear(h, P["embed.1.w"], P["embed.1.b"]))
        h = ops.linear(h, P["embed.2.w"], P["embed.2.b"])
        pos_units = Tensor(tokens.data[..., :2].astype(np.float64) * self._scale, dtype=np.float32)
        h = ops.add(h, ops.sinusoidal_encoding(pos_units, E // 2))
        h = ops.embedding_sum(h, self._temporal)  # (B, players*horizons, E)

        allow = self.attention_allow(alive)
        for i in range(cfg.num_layers):
            p = f"layer{i}"
            q = ops.linear(h, P[f"{p}.q.w"], P[f"{p}.q.b"])
            k = ops.linear(h, P[f"{p}.k.w"], P[f"{p}.k.b"])
            v = ops.linear(h, P[f"{p}.v.w"], P[f"{p}.v.b"])
            a = ops.linear(ops.masked_attention(q, k, v, allow), P[f"{p}.o.w"], P[f"{p}.o.b"])
            h = ops.layer_norm(ops.add(h, a), P[f"{p}.ln1.g"], P[f"{p}.ln1.b"])
            m = ops.leaky_relu(ops.linear(h, P[f"{p}.mlp0.w"], P[f"{p}.mlp0.b"]))
            m = ops.linear(m, P[f"{p}.mlp1.w"], P[f"{p}.mlp1.b"])
            h = ops.layer_norm(ops.add(h, m), P[f"{p}.ln2.g"], P[f"{p}.ln2.b"])

        logits = ops.linear(h, P["head.w"], P["head.b"])
        return ops.reshape(logits, (B, cfg.num_players, cfg.horizons, cfg.action_dim))

    def probabilities(self, tokens, alive):
        """(B, players, horizons, actions) float32 distributions, computed without a graph."""
        with no_grad():
            return ops.softmax(self.forward(tokens, alive)).data


def policy_loss(logits, labels, alive):
    """Mean cross-entropy over alive players and all horizons; dead slots contribute 0."""
    labels = np.asarray(labels, dtype=np.int64)
    alive = np.asarray(alive, dtype=bool)
    weights = np.broadcast_to(alive[..., None], labels.shape).astype(np.float64)
    n = weights.sum()
    if n == 0:
        raise ValueError("loss needs at least one alive player")
    safe = np.where(weights > 0, labels, 0)
    return ops.cross_entropy(logits, safe, weights / n)
