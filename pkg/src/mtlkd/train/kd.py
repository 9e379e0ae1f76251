"""Per-step knowledge distillation from single-task teachers into the student."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from mtlkd.core.batch import BatchEnv
from mtlkd.core.instance import Instance
from mtlkd.numkit import ops
from mtlkd.numkit.tensor import no_grad
from mtlkd.policy.base import choose
from mtlkd.policy.features import StepInput


class RoutingError(ValueError):
    """An instance has no teacher for its variant, or a teacher is registered under the wrong task."""


@dataclass
class KDStats:
    loss: float
    kl_sum: float
    steps: int  # number of (instance, step) pairs that contributed

    @property
    def mean_step_kl(self) -> float:
        return self.kl_sum / max(self.steps, 1)


def _subset(inp: StepInput, rows) -> StepInput:
    return StepInput(inp.last[rows], inp.visited[rows], inp.node_valid[rows], inp.dynamic[rows], inp.allowed[rows])


def route_teachers(instances: list[Instance], teachers: dict) -> dict[str, np.ndarray]:
    groups: dict[str, list[int]] = defaultdict(list)
    for i, inst in enumerate(instances):
        groups[inst.variant.name].append(i)
    for name in groups:
        if name not in teachers:
            raise RoutingError(f"no teacher for variant {name}")
        task = getattr(teachers[name], "task", None)
        if task is not None and task != name:
            raise RoutingError(f"teacher registered for {name} was trained on {task}")
    return {name: np.array(rows) for name, rows in groups.items()}


def _teacher_probs(teachers, caches, groups, inp: StepInput, n_nodes: int) -> np.ndarray:
    p = np.zeros((len(inp.last), n_nodes))
    with no_grad():
        for name, rows in groups.items():
            out = teachers[name].decode(caches[name], _subset(inp, rows))
            p[rows] = out.node_probs(n_nodes)
    return p


def distill(student, teachers: dict, instances: list[Instance], rng, mode: str = "sample", track_grad: bool = True, alpha: float = 1.0):
    """Walk the student's own trajectories and sum forward KL(teacher || student) per step.

    Returns ``(loss_tensor_or_None, KDStats)``; the loss is the batch mean of
    per-instance KL summed over steps.
    """
    groups = route_teachers(instances, teachers)
    env = BatchEnv(instances)
    B = env.B
    with no_grad():
        caches = {name: teachers[name].encode(BatchEnv([instances[i] for i in rows])) for name, rows in groups.items()}

    def run():
        H = student.encode(env)
        total = None
        ll = None
        kl_sum, steps = 0.0, 0
        while not env.all_done:
            inp = StepInput.from_env(env)
            out = student.decode(H, inp)
            p_t = _teacher_probs(teachers, caches, groups, inp, env.N1)
            active = ~env.done
            w = p_t[np.arange(B)[:, None], out.nodes] * out.allowed * active[:, None]
            pos = w > 0
            const = np.where(pos, w * np.log(np.where(pos, w, 1.0)), 0.0).sum(axis=1)
            cross = ops.masked_sum(out.logp, pos, weights=w)  # sum_j p_t log p_s
            kl_rows = const - cross.data
            kl_sum += float(kl_rows.sum())
            steps += int(active.sum())
            term = ops.sub(const, cross)
            total = term if total is None else ops.add(total, term)
            actions = choose(out, env.N1, mode, rng)
            if alpha < 1.0:
                lp = ops.mul(out.log_prob_of(actions), active.astype(np.float64))
                ll = lp if ll is None else ops.add(ll, lp)
            env.step(actions, check=False)
        loss = ops.scale(ops.sum(total), 1.0 / B)
        if alpha < 1.0:
            # task term: REINFORCE on the student's own trajectories, batch-mean baseline
            reward = -env.cost
            adv = reward - reward.mean()
            task = ops.scale(ops.sum(ops.mul(ll, adv)), -1.0 / B)
            loss = ops.add(ops.scale(loss, alpha), ops.scale(task, 1.0 - alpha))
        return loss, KDStats(0.0, kl_sum, steps)

    if track_grad:
        loss, stats = run()
    else:
        with no_grad():
            loss, stats = run()
    stats.loss = float(loss.data)
    return loss, stats


def kd_student_step(student, teachers: dict, instances: list[Instance], rng, mode: str = "sample", alpha: float = 1.0) -> KDStats:
    """One distillation step: computes the loss and fills the student's ``.grad``."""
    student.zero_grad()
    loss, stats = distill(student, teachers, instances, rng, mode, track_grad=True, alpha=alpha)
    loss.backward()
    return stats


def kd_evaluate(student, teachers: dict, instances: list[Instance], batch: int = 256) -> float:
    """Mean per-step KL along the student's greedy trajectories."""
    kl, steps = 0.0, 0
    for s in range(0, len(instances), batch):
        _, st = distill(student, teachers, instances[s : s + batch], None, "greedy", track_grad=False)
        kl += st.kl_sum
        steps += st.steps
    return kl / max(steps, 1)
