from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .instance import Instance
from .solution import Solution
from .state import ContractViolation, DecodeState, FeasibilityMask, feasibility_mask, initial_state, transition

StepPolicy = Callable[[Instance, DecodeState], np.ndarray]


@dataclass(frozen=True)
class StepDistribution:
    probs: np.ndarray  # over all nodes; exactly zero where masked
    mask: FeasibilityMask
    action: int


def select_action(probs: np.ndarray, mode: str, rng: np.random.Generator | None) -> int:
    """Greedy picks the lowest-index argmax; sampling inverts the CDF so that
    zero-probability entries can never be returned."""
    if mode == "greedy":
        return int(np.argmax(probs))
    if mode != "sample":
        raise ValueError(f"unknown mode {mode!r}")
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    return int(np.argmax(cdf > u))


def check_step_probs(probs: np.ndarray, mask: FeasibilityMask) -> None:
    if probs.shape != mask.allowed.shape:
        raise ContractViolation(f"policy returned shape {probs.shape}, expected {mask.allowed.shape}")
    bad = (probs > 0) & ~mask.allowed
    if bad.any():
        raise ContractViolation(f"policy put mass on masked nodes {np.flatnonzero(bad).tolist()}")
    if not np.isclose(probs.sum(), 1.0, atol=1e-6):
        raise ContractViolation(f"policy probabilities sum to {probs.sum()}")


def routes_from_actions(actions) -> Solution:
    return Solution.from_giant_tour([0, *actions, 0])


def construct(
    instance: Instance,
    step_policy: StepPolicy,
    mode: str = "greedy",
    rng: np.random.Generator | None = None,
) -> tuple[Solution, list[StepDistribution]]:
    """Build a solution autoregressively, one node per step."""
    if mode == "sample" and rng is None:
        raise ValueError("sampling requires an rng")
    state = initial_state(instance)
    trace: list[StepDistribution] = []
    actions: list[int] = []
    while not state.done:
        mask = feasibility_mask(instance, state)
        probs = np.asarray(step_policy(instance, state), dtype=np.float64)
        check_step_probs(probs, mask)
        a = select_action(probs, mode, rng)
        trace.append(StepDistribution(probs, mask, a))
        actions.append(a)
        state = transition(instance, state, a)
    return routes_from_actions(actions), trace


def uniform_policy(instance: Instance, state: DecodeState) -> np.ndarray:
    allowed = feasibility_mask(instance, state).allowed
    return allowed / allowed.sum()


def nearest_policy(instance: Instance, state: DecodeState) -> np.ndarray:
    """One-hot on the nearest allowed node (lowest index on ties)."""
    allowed = feasibility_mask(instance, state).allowed
    d = np.where(allowed, instance.dist[state.last], np.inf)
    out = np.zeros(instance.n + 1)
    out[int(np.argmin(d))] = 1.0
    return out


def softmin_distance_policy(instance: Instance, state: DecodeState, temperature: float = 1.0) -> np.ndarray:
    """Softmax of negated distances from the last node, restricted to allowed nodes."""
    allowed = feasibility_mask(instance, state).allowed
    logits = np.where(allowed, -instance.dist[state.last] / temperature, -np.inf)
    logits = logits - logits.max()
    p = np.exp(logits)
    return p / p.sum()
