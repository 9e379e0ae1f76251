"""Single-task teacher: deep normalised encoder, one-step attention decoder."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from mtlkd.core.batch import BatchEnv
from mtlkd.numkit import ops
from mtlkd.numkit.nn import Linear, Module, MultiHeadAttention, TransformerLayer
from mtlkd.numkit.tensor import NEG_INF, Tensor

from .base import StepOut
from .features import DYNAMIC_FEATURES, NODE_FEATURES, StepInput, node_features


@dataclass(frozen=True)
class TeacherConfig:
    encoder_layers: int = 6
    decoder_layers: int = 1
    embed_dim: int = 16
    heads: int = 2
    ff_hidden: int = 32
    logit_clip: float = 10.0

    def __post_init__(self) -> None:
        if self.embed_dim % self.heads:
            raise ValueError("embed_dim must be divisible by heads")
        if self.decoder_layers != 1:
            raise ValueError("the teacher decoder is a single attention glimpse")

    @classmethod
    def paper(cls) -> "TeacherConfig":
        return cls(embed_dim=128, heads=8, ff_hidden=512)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TeacherCache:
    H: Tensor  # (B, N+1, d) node embeddings
    graph: Tensor  # (B, 1, d) mean over valid nodes
    k: Tensor  # (B, heads, N+1, dh) glimpse keys
    v: Tensor  # (B, heads, N+1, dh) glimpse values

    def repeat(self, k: int) -> "TeacherCache":
        return TeacherCache(*(ops.repeat_batch(t, k) for t in (self.H, self.graph, self.k, self.v)))


class TeacherPolicy(Module):
    kind = "teacher"

    def __init__(self, config: TeacherConfig = TeacherConfig(), seed: int = 0, task: str | None = None) -> None:
        self.config = config
        self.task = task
        rng = np.random.default_rng(seed)
        d, h, ff = config.embed_dim, config.heads, config.ff_hidden
        self.embed = Linear(NODE_FEATURES, d, rng)
        self.encoder = [TransformerLayer(d, h, ff, rng, norm=True) for _ in range(config.encoder_layers)]
        self.context = Linear(2 * d + DYNAMIC_FEATURES, d, rng, bias=False)
        self.glimpse = MultiHeadAttention(d, h, rng)

    def _split(self, x: Tensor) -> Tensor:
        B, L, d = x.shape
        h = self.config.heads
        return ops.transpose(ops.reshape(x, (B, L, h, d // h)), (0, 2, 1, 3))

    def encode(self, env: BatchEnv) -> TeacherCache:
        H = self.embed(Tensor(node_features(env)))
        mask = None
        if not env.node_valid.all():
            mask = np.where(env.node_valid, 0.0, NEG_INF)[:, None, :]
        for layer in self.encoder:
            H = layer(H, mask)
        w = env.node_valid / env.node_valid.sum(axis=1, keepdims=True)
        graph = ops.sum(ops.mul(H, w[:, :, None]), axis=1, keepdims=True)
        g = self.glimpse
        return TeacherCache(H, graph, self._split(ops.matmul(H, g.Wk)), self._split(ops.matmul(H, g.Wv)))

    def repeat_cache(self, cache: TeacherCache, k: int) -> TeacherCache:
        return cache.repeat(k)

    def logits(self, cache: TeacherCache, inp: StepInput) -> Tensor:
        """Clipped compatibility logits (B, N+1), before the feasibility mask."""
        H = cache.H
        B, N1, d = H.shape
        h = self.config.heads
        dh = d // h
        D = Tensor(inp.dynamic[:, None, :])
        h_last = ops.gather_rows(H, inp.last[:, None])
        q_in = self.context(ops.concat([cache.graph, h_last, D], axis=-1))  # (B, 1, d)

        g = self.glimpse
        q = self._split(ops.matmul(q_in, g.Wq))  # (B, h, 1, dh)
        att = ops.scale(ops.matmul(q, ops.transpose(cache.k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
        mask = np.where(inp.allowed, 0.0, NEG_INF)[:, None, None, :]
        att = ops.softmax(ops.add(att, mask), axis=-1)
        glimpse = ops.reshape(ops.transpose(ops.matmul(att, cache.v), (0, 2, 1, 3)), (B, 1, d))
        glimpse = ops.linear(glimpse, g.Wo, g.bo)

        logits = ops.scale(ops.matmul(glimpse, ops.transpose(H, (0, 2, 1))), 1.0 / math.sqrt(d))
        return ops.scale(ops.tanh(ops.reshape(logits, (B, N1))), self.config.logit_clip)

    def decode(self, cache: TeacherCache, inp: StepInput) -> StepOut:
        logits = self.logits(cache, inp)
        B, N1 = logits.shape
        nodes = np.broadcast_to(np.arange(N1), (B, N1))
        return StepOut(ops.masked_log_softmax(logits, inp.allowed), nodes, inp.allowed.copy())
