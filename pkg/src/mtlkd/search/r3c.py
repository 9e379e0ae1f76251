"""Random reordering re-construct search.

Each iteration shuffles the order of the current routes, optionally flips
some of them, cuts out a depot-to-depot segment of whole routes, solves that
segment as a standalone instance and splices the result back in if the full
objective strictly improves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mtlkd.core.instance import Instance
from mtlkd.core.solution import Solution, evaluate, verify
from mtlkd.data.generate import make_rng
from mtlkd.policy.rollout import rollout

from .exact import MAX_EXACT, TooLargeError, exact_solve
from .subtours import (
    Segment,
    accumulate_segment,
    draw_target,
    reorder_subtours,
    reverse_subtours,
    split_subtours,
)

IMPROVE_TOL = 1e-9


@dataclass(frozen=True)
class R3CConfig:
    iterations: int = 200
    length_mode: str = "random"  # random | fixed
    k: int = 10  # target customer count in fixed mode
    min_customers: int = 4
    max_customers: int | None = None  # None: min(n, 50), or min(n, 12) for exact-dp
    enable_reversal: bool = True
    enable_reorder: bool = True
    reoptimizer: str = "model"  # model | exact-dp
    seed: int = 0

    def __post_init__(self) -> None:
        if self.length_mode not in ("random", "fixed"):
            raise ValueError(f"length_mode must be random or fixed, got {self.length_mode!r}")
        if self.reoptimizer not in ("model", "exact-dp"):
            raise ValueError(f"reoptimizer must be model or exact-dp, got {self.reoptimizer!r}")
        if self.iterations < 0 or self.min_customers < 1 or self.k < 1:
            raise ValueError("iterations must be >= 0, min_customers and k >= 1")
        if self.reoptimizer == "exact-dp":
            if (self.max_customers or 0) > MAX_EXACT or (self.length_mode == "fixed" and self.k > MAX_EXACT):
                raise ValueError(f"exact-dp segments are limited to {MAX_EXACT} customers")

    def bounds(self, n: int) -> tuple[int, int]:
        top = MAX_EXACT if self.reoptimizer == "exact-dp" else 50
        hi = min(n, self.max_customers or top)
        return min(self.min_customers, hi), hi

    def cap(self, n: int) -> int | None:
        """Hard segment size limit; only the exact backend has one."""
        return self.bounds(n)[1] if self.reoptimizer == "exact-dp" else None


@dataclass
class R3CResult:
    solution: Solution
    objective: float
    initial: float
    trace: list[float] = field(default_factory=list)  # best objective after each iteration
    accepted: int = 0


def sample_segment(solution: Solution, config: R3CConfig, rng: np.random.Generator, n: int | None = None) -> Segment | None:
    subtours = split_subtours(solution)
    n = sum(len(r) for r in subtours) if n is None else n
    lo, hi = config.bounds(n)
    target = draw_target(config.length_mode, config.k, lo, hi, rng)
    return accumulate_segment(subtours, target, rng, config.cap(n))


class ExactReoptimizer:
    def solve_many(self, instances: list[Instance]) -> list[Solution]:
        return [exact_solve(inst)[0] for inst in instances]


class ModelReoptimizer:
    """Greedy construction with a trained policy, all segments of an iteration in one batch."""

    def __init__(self, policy) -> None:
        self.policy = policy

    def solve_many(self, instances: list[Instance]) -> list[Solution]:
        return rollout(self.policy, instances, "greedy").solutions()


def reoptimize_segment(instance: Instance, customers, reoptimizer) -> list[tuple[int, ...]]:
    """Re-solve the given customers as a standalone instance; routes in original node ids."""
    if isinstance(reoptimizer, ExactReoptimizer) and len(customers) > MAX_EXACT:
        raise TooLargeError(f"segment of {len(customers)} customers exceeds the exact limit {MAX_EXACT}")
    sub, nodes = instance.sub_instance(sorted(customers))
    sol = reoptimizer.solve_many([sub])[0]
    return [tuple(int(nodes[c]) for c in r) for r in sol.routes]


def make_reoptimizer(config: R3CConfig, policy=None):
    if config.reoptimizer == "exact-dp":
        return ExactReoptimizer()
    if policy is None:
        raise ValueError("model re-optimizer needs a policy")
    return ModelReoptimizer(policy)


class _Run:
    def __init__(self, instance: Instance, initial: Solution, config: R3CConfig, index: int) -> None:
        report = verify(instance, initial)
        if not report.feasible:
            raise ValueError(f"initial solution is infeasible: {report.violations[:3]}")
        self.instance = instance
        self.config = config
        self.rng = make_rng(config.seed, index)
        self.current = initial
        self.best = self.initial = evaluate(instance, initial)
        self.trace: list[float] = []
        self.accepted = 0
        self.pending: tuple[list, list[int], Instance, np.ndarray] | None = None

    def propose(self) -> Instance | None:
        """Shuffle/flip the current routes and cut a segment; returns its sub-instance."""
        sol = self.current
        if self.config.enable_reorder:
            sol = reorder_subtours(sol, self.rng)
        if self.config.enable_reversal:
            sol = reverse_subtours(sol, self.rng, self.instance.variant)
        self.current = sol
        routes = split_subtours(sol)
        seg = sample_segment(sol, self.config, self.rng, self.instance.n)
        if seg is None:
            self.pending = None
            return None
        idx = seg.indices(len(routes))
        customers = sorted(c for i in idx for c in routes[i])
        sub, nodes = self.instance.sub_instance(customers)
        self.pending = (routes, idx, sub, nodes)
        return sub

    def settle(self, candidate: Solution | None) -> None:
        if self.pending is not None and candidate is not None:
            routes, idx, _, nodes = self.pending
            taken = set(idx)
            spliced = [r for i, r in enumerate(routes) if i not in taken]
            spliced += [tuple(int(nodes[c]) for c in r) for r in candidate.routes]
            new = Solution(spliced)
            obj = evaluate(self.instance, new)
            if obj < self.best - IMPROVE_TOL and verify(self.instance, new).feasible:
                self.current, self.best = new, obj
                self.accepted += 1
        self.pending = None
        self.trace.append(self.best)

    def result(self) -> R3CResult:
        return R3CResult(self.current, self.best, self.initial, self.trace, self.accepted)


def r3c_run_many(instances, initials, config: R3CConfig, reoptimizer=None, policy=None, first_index: int = 0) -> list[R3CResult]:
    """Independent runs advanced in lock-step so segment re-solves share one batch.

    Run ``i`` draws from ``make_rng(config.seed, first_index + i)``, so its
    result does not depend on which other runs share the batch (up to the
    re-optimizer's own batching numerics).
    """
    reopt = reoptimizer or make_reoptimizer(config, policy)
    runs = [_Run(inst, sol, config, first_index + i) for i, (inst, sol) in enumerate(zip(instances, initials))]
    for _ in range(config.iterations):
        subs = [r.propose() for r in runs]
        todo = [i for i, s in enumerate(subs) if s is not None]
        cands = reopt.solve_many([subs[i] for i in todo]) if todo else []
        by_run = dict(zip(todo, cands))
        for i, r in enumerate(runs):
            r.settle(by_run.get(i))
    return [r.result() for r in runs]


def r3c_run(instance: Instance, initial: Solution, config: R3CConfig, reoptimizer=None, policy=None) -> R3CResult:
    return r3c_run_many([instance], [initial], config, reoptimizer, policy)[0]


def format_trace(trace) -> str:
    """Tab-separated ``iteration  best_objective`` lines with a header."""
    lines = ["iteration\tbest_objective"]
    lines += [f"{i}\t{v!r}" for i, v in enumerate(trace, 1)]
    return "\n".join(lines) + "\n"


def write_trace(path, trace) -> None:
    with open(path, "w") as fh:
        fh.write(format_trace(trace))


def read_trace(path) -> list[float]:
    with open(path) as fh:
        rows = fh.read().splitlines()[1:]
    return [float(r.split("\t")[1]) for r in rows if r]


def mean_objective(results: list[R3CResult]) -> float:
    return math.fsum(r.objective for r in results) / max(len(results), 1)
