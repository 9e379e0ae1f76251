"""Attention and feed-forward building blocks plus a tiny parameter container."""

from __future__ import annotations

import math
from collections import OrderedDict

import numpy as np

from . import tensor as T
from .tensor import NEG_INF, Tensor, default_dtype

_MASKED = -1e29


def multi_head_attention(
    q_src: Tensor,
    kv_src: Tensor,
    additive_mask,
    heads: int,
    Wq: Tensor,
    Wk: Tensor,
    Wv: Tensor,
    Wo: Tensor,
    bo: Tensor | None = None,
) -> Tensor:
    """Scaled dot-product attention with ``heads`` heads.

    ``q_src`` is (B, Lq, d), ``kv_src`` is (B, Lk, d). ``additive_mask`` is
    broadcastable to (B, Lq, Lk) and holds 0 or NEG_INF; ``None`` means no mask.
    """
    B, Lq, _ = q_src.shape
    Lk = kv_src.shape[1]
    d = Wq.shape[1]
    if d % heads:
        raise ValueError(f"embedding dim {d} not divisible by {heads} heads")
    dh = d // heads

    def split(x, L):
        return T.transpose(T.reshape(x, (B, L, heads, dh)), (0, 2, 1, 3))

    q = split(T.matmul(q_src, Wq), Lq)
    k = split(T.matmul(kv_src, Wk), Lk)
    v = split(T.matmul(kv_src, Wv), Lk)
    scores = T.scale(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    if additive_mask is not None:
        m = np.broadcast_to(np.asarray(additive_mask, dtype=scores.data.dtype), (B, Lq, Lk))
        if not (m > _MASKED).any(axis=-1).all():
            raise ValueError("attention row with every key masked")
        scores = T.add(scores, m[:, None, :, :])
    attn = T.softmax(scores, axis=-1)
    out = T.reshape(T.transpose(T.matmul(attn, v), (0, 2, 1, 3)), (B, Lq, d))
    return T.linear(out, Wo, bo)


def feed_forward(x: Tensor, W1: Tensor, b1: Tensor, W2: Tensor, b2: Tensor) -> Tensor:
    return T.linear(T.relu(T.linear(x, W1, b1)), W2, b2)


def additive_mask(allowed: np.ndarray) -> np.ndarray:
    return np.where(allowed, 0.0, NEG_INF)


class Module:
    """Holds parameters (Tensors) and submodules as attributes, in definition order."""

    def named_parameters(self, prefix: str = "") -> "OrderedDict[str, Tensor]":
        out: OrderedDict[str, Tensor] = OrderedDict()
        for name, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                out[prefix + name] = val
            elif isinstance(val, Module):
                out.update(val.named_parameters(f"{prefix}{name}."))
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        out.update(item.named_parameters(f"{prefix}{name}.{i}."))
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, v.data.copy()) for k, v in self.named_parameters().items())

    def load_state_dict(self, state) -> None:
        params = self.named_parameters()
        missing = set(params) - set(state)
        extra = set(state) - set(params)
        if missing or extra:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(extra)}")
        for k, p in params.items():
            arr = np.asarray(state[k])
            if arr.shape != p.shape:
                raise ValueError(f"shape mismatch for {k}: {arr.shape} vs {p.shape}")
            p.data = arr.astype(default_dtype()).copy()

    def zero_grad(self) -> None:
        """Explicit zeros, so parameters a loss does not touch still report a zero gradient."""
        for p in self.parameters():
            p.grad = np.zeros_like(p.data)


def param(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True) -> None:
        self.W = param(rng, (d_in, d_out), d_in)
        self.b = param(rng, (d_out,), d_in) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return T.linear(x, self.W, self.b)


class MultiHeadAttention(Module):
    def __init__(self, d: int, heads: int, rng: np.random.Generator) -> None:
        if d % heads:
            raise ValueError(f"embedding dim {d} not divisible by {heads} heads")
        self.heads = heads
        self.Wq = param(rng, (d, d), d)
        self.Wk = param(rng, (d, d), d)
        self.Wv = param(rng, (d, d), d)
        self.Wo = param(rng, (d, d), d)
        self.bo = param(rng, (d,), d)

    def __call__(self, q_src: Tensor, kv_src: Tensor, mask=None) -> Tensor:
        return multi_head_attention(q_src, kv_src, mask, self.heads, self.Wq, self.Wk, self.Wv, self.Wo, self.bo)


class FeedForward(Module):
    def __init__(self, d: int, hidden: int, rng: np.random.Generator) -> None:
        self.W1 = param(rng, (d, hidden), d)
        self.b1 = param(rng, (hidden,), d)
        self.W2 = param(rng, (hidden, d), hidden)
        self.b2 = param(rng, (d,), hidden)

    def __call__(self, x: Tensor) -> Tensor:
        return feed_forward(x, self.W1, self.b1, self.W2, self.b2)


class LayerNorm(Module):
    def __init__(self, d: int) -> None:
        self.gain = Tensor(np.ones(d), requires_grad=True)
        self.bias = Tensor(np.zeros(d), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.mul(T.normalize(x), self.gain), self.bias)


class TransformerLayer(Module):
    """Self-attention + feed-forward, each with a residual connection.

    With ``norm=False`` the layer carries no normalisation parameters at all.
    """

    def __init__(self, d: int, heads: int, ff_hidden: int, rng: np.random.Generator, norm: bool = True) -> None:
        self.attn = MultiHeadAttention(d, heads, rng)
        self.ff = FeedForward(d, ff_hidden, rng)
        self.norm1 = LayerNorm(d) if norm else None
        self.norm2 = LayerNorm(d) if norm else None

    def __call__(self, x: Tensor, mask=None) -> Tensor:
        h = T.add(x, self.attn(x, x, mask))
        if self.norm1 is not None:
            h = self.norm1(h)
        out = T.add(h, self.ff(h))
        if self.norm2 is not None:
            out = self.norm2(out)
        return out
