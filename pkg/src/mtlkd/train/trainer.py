"""Training loops for teachers (REINFORCE) and the student (distillation).

Epoch ``e`` trains on instances generated from seed ``(config.seed, e)``, so
the data never depends on how far a previous process got. Rollout sampling
uses one persistent generator whose state is checkpointed, which makes a
resumed run step-identical to an uninterrupted one.
"""

from __future__ import annotations

import time

import numpy as np

from mtlkd.core.variant import VariantSpec
from mtlkd.data.generate import generate_instances, make_rng
from mtlkd.numkit.optim import Adam
from mtlkd.policy.student import StudentPolicy
from mtlkd.policy.teacher import TeacherPolicy

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, TrainConfig
from .kd import kd_student_step, route_teachers
from .reinforce import reinforce_teacher_step
from .schedule import lr_schedule

ROLLOUT_STREAM = 1  # spawn index of the sampling generator, distinct from the data streams


class _Trainer:
    kind = ""

    def __init__(self, config: TrainConfig, model) -> None:
        self.config = config
        self.model = model
        self.opt = Adam(model.parameters(), lr=config.lr0)
        self.rng = make_rng(config.seed, ROLLOUT_STREAM)
        self.epoch = 0
        self.batch = 0
        self.log: list[tuple[int, float, float, float]] = []  # epoch, loss, lr, wallclock
        self._data: tuple[int, list] | None = None
        self._losses: list[float] = []

    # subclass hooks
    def batches_per_epoch(self) -> int:
        raise NotImplementedError

    def make_epoch_data(self, epoch: int) -> list:
        raise NotImplementedError

    def train_batch(self, items) -> float:
        raise NotImplementedError

    @property
    def task(self) -> str | None:
        return None

    def lr(self) -> float:
        c = self.config
        return lr_schedule(self.epoch, c.lr0, c.lr_halve_after, c.lr_period)

    def step(self) -> float:
        """One optimizer update; returns its loss."""
        if self._data is None or self._data[0] != self.epoch:
            self._data = (self.epoch, self.make_epoch_data(self.epoch))
        loss = self.train_batch(self._data[1][self.batch])
        self.opt.step(lr=self.lr())
        self._losses.append(loss)
        self.batch += 1
        if self.batch == self.batches_per_epoch():
            self.log.append((self.epoch, float(np.mean(self._losses)), self.lr(), time.perf_counter()))
            self._losses = []
            self.batch = 0
            self.epoch += 1
        return loss

    def train(self, epochs: int | None = None, on_epoch=None) -> None:
        """Train until ``epochs`` (default ``config.epochs``) epochs are complete."""
        target = self.config.epochs if epochs is None else epochs
        while self.epoch < target:
            ep = self.epoch
            self.step()
            if self.epoch != ep and on_epoch is not None:
                on_epoch(self)

    # checkpointing
    def checkpoint(self) -> Checkpoint:
        st = self.opt.state()
        return Checkpoint(
            kind=self.kind,
            task=self.task,
            config=self.config.to_dict(),
            epoch=self.epoch,
            batch=self.batch,
            rng_state=self.rng.bit_generator.state,
            adam_t=st["t"],
            params=dict(self.model.state_dict()),
            adam_m=st["m"],
            adam_v=st["v"],
            epoch_losses=list(self._losses),
        )

    def save(self, path) -> None:
        save_checkpoint(path, self.checkpoint())

    def restore(self, ck: Checkpoint) -> None:
        if ck.kind != self.kind:
            raise CheckpointError(f"checkpoint holds a {ck.kind}, expected a {self.kind}")
        self.model.load_state_dict(ck.params)
        self.opt.load_state({"t": ck.adam_t, "m": ck.adam_m, "v": ck.adam_v})
        self.rng.bit_generator.state = ck.rng_state
        self.epoch, self.batch = ck.epoch, ck.batch
        self._losses = list(ck.epoch_losses)
        self._data = None

    def log_text(self, with_wallclock: bool = True) -> str:
        rows = []
        for ep, loss, lr, wall in self.log:
            cols = [str(ep), repr(loss), repr(lr)] + ([f"{wall:.3f}"] if with_wallclock else [])
            rows.append("\t".join(cols))
        return "".join(r + "\n" for r in rows)


class TeacherTrainer(_Trainer):
    kind = "teacher"

    def __init__(self, config: TrainConfig, task: str) -> None:
        self.variant = VariantSpec.from_name(task)
        if config.multi_start > config.n:
            raise ConfigError(f"multi_start {config.multi_start} exceeds n = {config.n}")
        super().__init__(config, TeacherPolicy(config.teacher_config(), seed=config.seed, task=self.variant.name))

    @property
    def task(self) -> str:
        return self.variant.name

    def batches_per_epoch(self) -> int:
        return max(1, self.config.instances_per_epoch // self.config.batch_size)

    def make_epoch_data(self, epoch: int) -> list:
        c = self.config
        insts = generate_instances(self.variant, c.n, self.batches_per_epoch() * c.batch_size, (c.seed, epoch))
        return [insts[b * c.batch_size : (b + 1) * c.batch_size] for b in range(self.batches_per_epoch())]

    def train_batch(self, items) -> float:
        loss, _ = reinforce_teacher_step(self.model, items, self.rng, k=self.config.multi_start)
        return loss


class StudentTrainer(_Trainer):
    kind = "student"

    def __init__(self, config: TrainConfig, teachers: dict) -> None:
        missing = [t for t in config.tasks if t not in teachers]
        if missing:
            raise ConfigError(f"missing teacher for seen task(s): {', '.join(missing)}")
        self.teachers = {t: teachers[t] for t in config.tasks}
        self.variants = [VariantSpec.from_name(t) for t in config.tasks]
        # fail early on a teacher registered under the wrong task
        route_teachers([generate_instances(v, 1, 1, 0)[0] for v in self.variants], self.teachers)
        super().__init__(config, StudentPolicy(config.student_config(), seed=config.seed))

    def batches_per_epoch(self) -> int:
        return max(1, self.config.instances_per_epoch // self.config.kd_batch_size)

    def make_epoch_data(self, epoch: int) -> list:
        c = self.config
        nb, per = self.batches_per_epoch(), c.per_task_batch
        by_task = [generate_instances(v, c.n, nb * per, (c.seed, epoch, j)) for j, v in enumerate(self.variants)]
        return [[inst for insts in by_task for inst in insts[b * per : (b + 1) * per]] for b in range(nb)]

    def train_batch(self, items) -> float:
        stats = kd_student_step(self.model, self.teachers, items, self.rng, mode=self.config.kd_mode, alpha=self.config.alpha)
        return stats.loss


def teacher_from_checkpoint(path_or_ck) -> TeacherPolicy:
    ck = path_or_ck if isinstance(path_or_ck, Checkpoint) else load_checkpoint(path_or_ck)
    if ck.kind != "teacher":
        raise CheckpointError(f"expected a teacher checkpoint, got {ck.kind}")
    cfg = TrainConfig().override(**ck.config)
    model = TeacherPolicy(cfg.teacher_config(), seed=cfg.seed, task=ck.task)
    model.load_state_dict(ck.params)
    return model


def student_from_checkpoint(path_or_ck) -> StudentPolicy:
    ck = path_or_ck if isinstance(path_or_ck, Checkpoint) else load_checkpoint(path_or_ck)
    if ck.kind != "student":
        raise CheckpointError(f"expected a student checkpoint, got {ck.kind}")
    cfg = TrainConfig().override(**ck.config)
    model = StudentPolicy(cfg.student_config(), seed=cfg.seed)
    model.load_state_dict(ck.params)
    return model


def _expect(ck: Checkpoint, kind: str) -> Checkpoint:
    if ck.kind != kind:
        raise CheckpointError(f"expected a {kind} checkpoint, got {ck.kind}")
    return ck


def resume_teacher(path) -> TeacherTrainer:
    ck = _expect(load_checkpoint(path), "teacher")
    tr = TeacherTrainer(TrainConfig().override(**ck.config), ck.task)
    tr.restore(ck)
    return tr


def resume_student(path, teachers: dict) -> StudentTrainer:
    ck = _expect(load_checkpoint(path), "student")
    tr = StudentTrainer(TrainConfig().override(**ck.config), teachers)
    tr.restore(ck)
    return tr
