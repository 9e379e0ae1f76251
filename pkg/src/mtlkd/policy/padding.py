from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtlkd.numkit import ops
from mtlkd.numkit.tensor import NEG_INF, Tensor


@dataclass
class PaddedBatch:
    """Unvisited-node embeddings padded with depot tokens to a common length."""

    emb: Tensor  # (B, M, d)
    index: np.ndarray  # (B, M) node index per slot; padded slots hold 0 (the depot)
    pad: np.ndarray  # (B, M) True on padded slots

    @property
    def mask(self) -> np.ndarray:
        """Additive padding mask: 0 on valid slots, NEG_INF on padding."""
        return np.where(self.pad, NEG_INF, 0.0)

    @property
    def lengths(self) -> np.ndarray:
        return (~self.pad).sum(axis=1)


def pad_unvisited(H: Tensor, unvisited: np.ndarray) -> PaddedBatch:
    """Gather each row's unvisited nodes (ascending index) from ``H`` of shape (B, N+1, d)."""
    B = unvisited.shape[0]
    counts = unvisited.sum(axis=1)
    M = int(counts.max()) if B else 0
    index = np.zeros((B, M), dtype=np.int64)
    pad = np.ones((B, M), dtype=bool)
    # stable argsort puts unvisited nodes first, in index order
    order = np.argsort(~unvisited, axis=1, kind="stable")[:, :M]
    valid = np.arange(M)[None, :] < counts[:, None]
    index[valid] = order[valid]
    pad[valid] = False
    return PaddedBatch(ops.gather_rows(H, index), index, pad)


def pad_batch(items) -> PaddedBatch:
    """Pad a list of (H_enc, DecodeState) pairs; H_enc is an (N_i+1, d) Tensor.

    Instances may differ in size: each H_enc is first padded to the largest
    node count with copies of its depot row.
    """
    items = list(items)
    if not items:
        raise ValueError("pad_batch needs at least one (H_enc, state) pair")
    n1 = max(h.shape[0] for h, _ in items)
    rows, unv = [], np.zeros((len(items), n1), dtype=bool)
    for b, (h, state) in enumerate(items):
        k = h.shape[0]
        if k < n1:
            fill = ops.concat([ops.slice_axis(h, 0, 1, axis=0)] * (n1 - k), axis=0)
            h = ops.concat([h, fill], axis=0)
        rows.append(ops.reshape(h, (1,) + h.shape))
        u = ~np.asarray(state.visited)
        u[0] = False
        unv[b, :k] = u
    return pad_unvisited(ops.concat(rows, axis=0), unv)
