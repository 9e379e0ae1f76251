from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtlkd.core.batch import BatchEnv
from mtlkd.core.instance import Instance
from mtlkd.core.state import DecodeState, feasibility_mask

NODE_FEATURES = 6  # x, y, demand / C, service time, tw start, tw end
DYNAMIC_FEATURES = 4  # remaining load, current time, remaining duration, open flag


def node_features(env: BatchEnv) -> np.ndarray:
    """(B, N+1, 6) static features; time-window columns are zero without time windows."""
    tw = env.has_tw[:, None]
    feats = np.stack(
        [
            env.coords[..., 0],
            env.coords[..., 1],
            env.demand / env.capacity[:, None],
            np.where(tw, env.service, 0.0),
            np.where(tw, env.early, 0.0),
            np.where(tw & env.node_valid, env.late, 0.0),
        ],
        axis=-1,
    )
    return feats


@dataclass
class StepInput:
    """What a decoder needs to know about the current partial solutions."""

    last: np.ndarray  # (B,)
    visited: np.ndarray  # (B, N+1) bool; padded nodes count as visited
    node_valid: np.ndarray  # (B, N+1) bool
    dynamic: np.ndarray  # (B, 4)
    allowed: np.ndarray  # (B, N+1) feasibility mask

    @property
    def unvisited(self) -> np.ndarray:
        u = ~self.visited & self.node_valid
        u[:, 0] = False
        return u

    @classmethod
    def from_env(cls, env: BatchEnv) -> "StepInput":
        return cls(env.last.copy(), env.visited.copy(), env.node_valid, env.dynamic_features(), env.mask())

    @classmethod
    def from_state(cls, instance: Instance, state: DecodeState) -> "StepInput":
        return cls(
            np.array([state.last]),
            state.visited[None, :].copy(),
            np.ones((1, instance.n + 1), dtype=bool),
            state.dynamic_features(instance)[None, :],
            feasibility_mask(instance, state).allowed[None, :],
        )
