"""Multi-task student: one-layer encoder, deep decoder over the unvisited nodes.

At every step the decoder re-embeds the unvisited nodes together with two
state tokens (last node and depot, each fused with the dynamic features),
runs ``decoder_layers`` attention layers over them and scores each candidate
against a context query built from the two state tokens.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from mtlkd.core.batch import BatchEnv
from mtlkd.numkit import ops
from mtlkd.numkit.nn import Linear, Module, TransformerLayer, param
from mtlkd.numkit.tensor import NEG_INF, Tensor

from .base import StepOut
from .features import DYNAMIC_FEATURES, NODE_FEATURES, StepInput, node_features
from .padding import PaddedBatch, pad_unvisited


@dataclass(frozen=True)
class StudentConfig:
    encoder_layers: int = 1
    decoder_layers: int = 6
    embed_dim: int = 16
    heads: int = 2
    ff_hidden: int = 32
    layer_norm_in_attention: bool = False

    def __post_init__(self) -> None:
        if self.embed_dim % self.heads:
            raise ValueError("embed_dim must be divisible by heads")

    @classmethod
    def paper(cls, embed_dim: int = 128) -> "StudentConfig":
        return cls(embed_dim=embed_dim, heads=8, ff_hidden=512)

    def to_dict(self) -> dict:
        return asdict(self)


class StudentPolicy(Module):
    kind = "student"

    def __init__(self, config: StudentConfig = StudentConfig(), seed: int = 0) -> None:
        self.config = config
        rng = np.random.default_rng(seed)
        d, h, ff = config.embed_dim, config.heads, config.ff_hidden
        norm = config.layer_norm_in_attention
        self.embed = Linear(NODE_FEATURES, d, rng)
        self.encoder = [TransformerLayer(d, h, ff, rng, norm=norm) for _ in range(config.encoder_layers)]
        self.last_token = Linear(DYNAMIC_FEATURES + d, d, rng)
        self.depot_token = Linear(DYNAMIC_FEATURES + d, d, rng)
        self.decoder = [TransformerLayer(d, h, ff, rng, norm=norm) for _ in range(config.decoder_layers)]
        self.context = Linear(2 * d, d, rng)
        self.Wq = param(rng, (d, d), d)
        self.Wk = param(rng, (d, d), d)

    def encode(self, env: BatchEnv) -> Tensor:
        """H_enc of shape (B, N+1, d): linear embedding then the encoder layers."""
        H = self.embed(Tensor(node_features(env)))
        mask = None
        if not env.node_valid.all():
            mask = np.where(env.node_valid, 0.0, NEG_INF)[:, None, :]
        for layer in self.encoder:
            H = layer(H, mask)
        return H

    def repeat_cache(self, H: Tensor, k: int) -> Tensor:
        return ops.repeat_batch(H, k)

    def pad(self, H: Tensor, inp: StepInput) -> PaddedBatch:
        return pad_unvisited(H, inp.unvisited)

    def decode(self, H: Tensor, inp: StepInput, padded: PaddedBatch | None = None) -> StepOut:
        padded = padded if padded is not None else self.pad(H, inp)
        B, M = padded.index.shape
        D = Tensor(inp.dynamic[:, None, :])
        h_last = ops.gather_rows(H, inp.last[:, None])
        h_depot = ops.slice_axis(H, 0, 1, axis=1)
        tok_last = self.last_token(ops.concat([D, h_last], axis=-1))
        tok_depot = self.depot_token(ops.concat([D, h_depot], axis=-1))
        X = ops.concat([tok_last, tok_depot, padded.emb], axis=1)  # (B, M+2, d)

        key_mask = np.concatenate([np.zeros((B, 2)), padded.mask], axis=1)[:, None, :]
        for layer in self.decoder:
            X = layer(X, key_mask)

        d = self.config.embed_dim
        hq = self.context(ops.concat([ops.slice_axis(X, 0, 1), ops.slice_axis(X, 1, 2)], axis=-1))
        q = ops.matmul(hq, self.Wq)  # (B, 1, d)
        k = ops.matmul(ops.slice_axis(X, 1, M + 2), self.Wk)  # depot token + unvisited
        scores = ops.scale(ops.matmul(q, ops.transpose(k, (0, 2, 1))), 1.0 / math.sqrt(d))
        scores = ops.reshape(scores, (B, M + 1))

        nodes = np.concatenate([np.zeros((B, 1), dtype=np.int64), padded.index], axis=1)
        rows = np.arange(B)[:, None]
        allowed = inp.allowed[rows, nodes]
        allowed[:, 1:] &= ~padded.pad
        return StepOut(ops.masked_log_softmax(scores, allowed), nodes, allowed)
