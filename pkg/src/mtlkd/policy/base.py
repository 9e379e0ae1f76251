from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtlkd.numkit import ops
from mtlkd.numkit.tensor import Tensor


@dataclass
class StepOut:
    """One decoding step for a batch: log-probabilities over candidate positions.

    ``nodes[b, p]`` is the node index candidate ``p`` stands for; positions
    that are padding or infeasible have ``allowed`` False and log-prob -inf.
    """

    logp: Tensor  # (B, P)
    nodes: np.ndarray  # (B, P)
    allowed: np.ndarray  # (B, P)

    def probs(self) -> np.ndarray:
        return np.where(self.allowed, np.exp(self.logp.data), 0.0)

    def node_probs(self, n_nodes: int) -> np.ndarray:
        B = self.nodes.shape[0]
        out = np.zeros((B, n_nodes))
        p = self.probs()
        rows = np.broadcast_to(np.arange(B)[:, None], self.nodes.shape)
        np.add.at(out, (rows[self.allowed], self.nodes[self.allowed]), p[self.allowed])
        return out

    def positions_of(self, actions) -> np.ndarray:
        a = np.asarray(actions)
        hit = (self.nodes == a[:, None]) & self.allowed
        if not hit.any(axis=1).all():
            raise ValueError("action is not an allowed candidate")
        return hit.argmax(axis=1)

    def log_prob_of(self, actions) -> Tensor:
        pos = self.positions_of(actions)
        return ops.reshape(ops.gather_rows(self.logp, pos[:, None]), (len(pos),))


def choose(step: StepOut, n_nodes: int, mode: str, rng: np.random.Generator | None) -> np.ndarray:
    """Batched action selection in node space: greedy breaks ties toward the lowest node index."""
    p = step.node_probs(n_nodes)
    if mode == "greedy":
        return p.argmax(axis=1)
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    cdf = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0]) * cdf[:, -1]
    return (cdf > u[:, None]).argmax(axis=1)
