"""Batched autoregressive decoding with any policy exposing encode/decode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtlkd.core.batch import BatchEnv
from mtlkd.core.instance import Instance
from mtlkd.core.solution import Solution
from mtlkd.numkit import ops
from mtlkd.numkit.tensor import Tensor, no_grad

from .base import choose
from .features import StepInput


@dataclass
class RolloutResult:
    env: BatchEnv
    log_likelihood: Tensor | None  # (B,) summed log-prob of sampled actions

    @property
    def costs(self) -> np.ndarray:
        return self.env.cost

    def solutions(self) -> list[Solution]:
        return self.env.solutions()


def rollout(
    policy,
    instances: list[Instance],
    mode: str = "greedy",
    rng: np.random.Generator | None = None,
    repeat: int = 1,
    first_actions: np.ndarray | None = None,
    track_grad: bool = False,
) -> RolloutResult:
    """Decode every instance ``repeat`` times (rows are instance-major).

    ``first_actions`` forces the first customer of each row (multi-start);
    forced actions contribute nothing to the log-likelihood.
    """
    env = BatchEnv(instances, repeat=repeat)
    if not track_grad:
        with no_grad():
            return _run(policy, instances, env, mode, rng, repeat, first_actions, False)
    return _run(policy, instances, env, mode, rng, repeat, first_actions, True)


def _run(policy, instances, env, mode, rng, repeat, first_actions, track_grad) -> RolloutResult:
    cache = policy.encode(BatchEnv(instances)) if repeat > 1 else policy.encode(env)
    if repeat > 1:
        cache = policy.repeat_cache(cache, repeat)
    if first_actions is not None:
        env.step(first_actions)
    ll = None
    while not env.all_done:
        inp = StepInput.from_env(env)
        out = policy.decode(cache, inp)
        actions = choose(out, env.N1, mode, rng)
        if track_grad:
            lp = out.log_prob_of(actions)
            active = (~env.done).astype(np.float64)
            term = ops.mul(lp, active)
            ll = term if ll is None else ops.add(ll, term)
        env.step(actions, check=False)
    return RolloutResult(env, ll)


def as_step_policy(policy):
    """Adapter for ``mtlkd.core.construct``: (instance, state) -> node probabilities."""
    memo: dict = {}

    def step(instance: Instance, state) -> np.ndarray:
        key = id(instance)
        if key not in memo or memo[key][0] is not instance:
            memo.clear()
            with no_grad():
                memo[key] = (instance, policy.encode(BatchEnv([instance])))
        with no_grad():
            out = policy.decode(memo[key][1], StepInput.from_state(instance, state))
        return out.node_probs(instance.n + 1)[0]

    return step
