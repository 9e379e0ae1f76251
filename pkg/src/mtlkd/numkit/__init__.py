"""Dense tensors with reverse-mode autodiff, attention blocks and Adam."""

from . import tensor as ops
from .gradcheck import grad_check
from .nn import (
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    TransformerLayer,
    additive_mask,
    feed_forward,
    multi_head_attention,
)
from .optim import Adam, adam_update
from .serialize import TensorFormatError, dumps_named, loads_named
from .tensor import NEG_INF, Tensor, backward, no_grad, set_default_dtype

__all__ = [
    "Adam",
    "FeedForward",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadAttention",
    "NEG_INF",
    "Tensor",
    "TensorFormatError",
    "TransformerLayer",
    "adam_update",
    "additive_mask",
    "backward",
    "dumps_named",
    "feed_forward",
    "grad_check",
    "loads_named",
    "multi_head_attention",
    "no_grad",
    "ops",
    "set_default_dtype",
]
