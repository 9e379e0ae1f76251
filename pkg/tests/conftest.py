import time

import pytest

from mtlkd.core import CVRP, OVRP
from mtlkd.data.generate import generate_instances
from mtlkd.train import StudentTrainer, TeacherTrainer, TrainConfig, kd_evaluate

CRITERIA: dict[int, str] = {}


def record(number: int, name: str, ok: bool, detail: str) -> None:
    """Keep one summary line per acceptance criterion; printed at the end of the run."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])


# toy preset for both teachers; the student sees 2 batches of 32 + 32 per epoch
TEACHER_CONFIG = TrainConfig()
STUDENT_CONFIG = TrainConfig(epochs=300, instances_per_epoch=128, per_task_batch=32, tasks=("CVRP", "OVRP"))


@pytest.fixture(scope="session")
def toy_teachers():
    """Toy-preset CVRP and OVRP teachers with their training times in seconds."""
    out, seconds = {}, {}
    for task in ("CVRP", "OVRP"):
        t = time.perf_counter()
        tr = TeacherTrainer(TEACHER_CONFIG, task)
        tr.train()
        out[task] = tr.model
        seconds[task] = time.perf_counter() - t
    return out, seconds


@pytest.fixture(scope="session")
def toy_student(toy_teachers):
    """Student distilled from the toy teachers, with held-out mean per-step KL before and after."""
    teachers, _ = toy_teachers
    held = generate_instances(CVRP, 10, 64, 4242) + generate_instances(OVRP, 10, 64, 4242)
    t = time.perf_counter()
    tr = StudentTrainer(STUDENT_CONFIG, teachers)
    kl0 = kd_evaluate(tr.model, teachers, held)
    tr.train()
    kl = kd_evaluate(tr.model, teachers, held)
    return tr.model, kl0, kl, time.perf_counter() - t
