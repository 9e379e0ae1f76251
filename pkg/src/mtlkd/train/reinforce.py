from __future__ import annotations

import numpy as np

from mtlkd.core.instance import Instance
from mtlkd.numkit import ops
from mtlkd.policy.rollout import rollout


def multi_start_actions(instances: list[Instance], k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` distinct first customers per instance, flattened instance-major."""
    n = min(inst.n for inst in instances)
    if k > n:
        raise ValueError(f"multi-start count {k} exceeds customer count {n}")
    return np.concatenate([rng.permutation(inst.n)[:k] + 1 for inst in instances])


def reinforce_teacher_step(model, instances: list[Instance], rng: np.random.Generator, k: int = 8, reward_shift: float = 0.0):
    """Policy-gradient loss with the shared multi-start baseline; fills ``.grad``.

    Each instance is rolled out ``k`` times from distinct first customers;
    the baseline is the mean reward of those ``k`` rollouts. Returns
    ``(loss, mean_cost)``. ``reward_shift`` adds a constant to every reward
    (the gradient must not depend on it).
    """
    variants = {inst.variant for inst in instances}
    if len(variants) != 1:
        raise ValueError("a teacher batch must hold a single variant")
    first = multi_start_actions(instances, k, rng)
    res = rollout(model, instances, "sample", rng, repeat=k, first_actions=first, track_grad=True)
    reward = -res.costs.reshape(len(instances), k) + reward_shift
    adv = (reward - reward.mean(axis=1, keepdims=True)).reshape(-1)
    model.zero_grad()
    if res.log_likelihood is None:  # every rollout was fully forced
        return 0.0, float(res.costs.mean())
    loss = ops.scale(ops.sum(ops.mul(res.log_likelihood, adv)), -1.0 / adv.size)
    loss.backward()
    return loss.item(), float(res.costs.mean())
