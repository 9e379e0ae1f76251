"""Acceptance checks. Each test records one PASS/FAIL line, printed in the terminal summary."""

import copy
import json
import math
import time
from pathlib import Path

import numpy as np

from conftest import STUDENT_CONFIG, record
from mtlkd.cli import main
from mtlkd.core import ALL_VARIANTS, CVRP, OVRP, VRPTW, evaluate, verify
from mtlkd.core.batch import BatchEnv
from mtlkd.core.construct import construct, uniform_policy
from mtlkd.core.state import initial_state, transition
from mtlkd.data import generate_instance, parse_cvrplib, parse_solomon
from mtlkd.data.generate import generate_instances, make_rng
from mtlkd.evaluate import format_gap
from mtlkd.numkit import grad_check, no_grad, ops
from mtlkd.policy import StepInput, StudentPolicy, TeacherPolicy, rollout
from mtlkd.search import R3CConfig, enumerate_optimum, exact_solve, r3c_run_many
from mtlkd.train import kd_student_step

DATA = Path(__file__).parent / "data"


def monotone(trace) -> bool:
    return all(b <= a for a, b in zip(trace, trace[1:]))


# ---------------------------------------------------------------- 1


def test_c01_feasibility_fuzz():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    total = passed = 0
    groups = [(v, n) for v in ALL_VARIANTS for n in (5, 20, 50)]
    per_group = [10_000 // len(groups) + (1 if i < 10_000 % len(groups) else 0) for i in range(len(groups))]
    for (variant, n), count in zip(groups, per_group):
        insts = generate_instances(variant, n, count, (7, n))
        env = BatchEnv(insts)
        while not env.all_done:
            allowed = env.mask()
            u = rng.random(allowed.shape) * allowed
            env.step(u.argmax(axis=1))  # uniform over allowed entries; step() re-checks the mask
        for inst, sol in zip(insts, env.solutions()):
            total += 1
            passed += verify(inst, sol).feasible
    elapsed = time.perf_counter() - t0
    ok = total == 10_000 and passed == total and elapsed < 120
    record(1, "feasibility fuzz", ok, f"{passed}/{total} rollouts verified in {elapsed:.1f}s (limit 120s)")
    assert ok


# ---------------------------------------------------------------- 2


def test_c02_oracle_equivalence():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for variant in (CVRP, OVRP, VRPTW):
        for inst in generate_instances(variant, 7, 100, 99):
            _, obj = exact_solve(inst)
            _, ref = enumerate_optimum(inst)
            worst = max(worst, abs(obj - ref))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = count == 300 and worst < 1e-9 and elapsed < 600
    record(2, "oracle equivalence", ok, f"{count} instances, max |DP - enumeration| = {worst:.2e} in {elapsed:.1f}s (limit 600s)")
    assert ok


# ---------------------------------------------------------------- 3


def test_c03_gradient_checks():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    insts = [generate_instance(VRPTW, 6, 1), generate_instance(OVRP, 6, 2)]
    errors = {}
    for policy in (StudentPolicy(seed=5), TeacherPolicy(seed=6)):
        # one full step: encoder and decoder, mid-route, batch of two variants
        env = BatchEnv(insts)
        env.step(np.array([2, 3]))
        inp = StepInput.from_env(env)
        w = rng.random(inp.allowed.shape)

        def loss():
            out = policy.decode(policy.encode(env), inp)
            return ops.sum(ops.masked_sum(out.logp, out.allowed, weights=w[np.arange(2)[:, None], out.nodes]))

        errors[policy.kind] = grad_check(loss, policy.parameters(), max_entries=12, rng=rng)
    elapsed = time.perf_counter() - t0
    ok = max(errors.values()) < 1e-4 and elapsed < 60
    detail = ", ".join(f"{k} max rel err {v:.2e}" for k, v in errors.items())
    record(3, "gradient checks", ok, f"{detail} in {elapsed:.1f}s (limit 60s)")
    assert ok


# ---------------------------------------------------------------- 4

def test_c04_distillation(toy_student):
    # anchor: the student's own parameters as teacher give zero loss on any batch
    student = StudentPolicy(STUDENT_CONFIG.student_config(), seed=0)
    twin = copy.deepcopy(student)
    rng = np.random.default_rng(0)
    copied = max(
        abs(kd_student_step(student, {"CVRP": twin, "OVRP": twin},
                            generate_instances(CVRP, 10, 8, (1, b)) + generate_instances(OVRP, 10, 8, (2, b)), rng).loss)
        for b in range(5)
    )
    _, kl0, kl, seconds = toy_student
    reduction = 1 - kl / kl0
    ok = copied < 1e-9 and reduction >= 0.8 and seconds < 1200
    record(4, "distillation", ok,
           f"copied-teacher loss {copied:.1e}; held-out KL {kl0:.4f} -> {kl:.4f} ({100 * reduction:.1f}% cut, need 80%); "
           f"300 epochs in {seconds:.0f}s (limit 1200s)")
    assert ok


# ---------------------------------------------------------------- 5


def test_c05_teacher_learning(toy_teachers):
    teachers, seconds = toy_teachers
    t0 = time.perf_counter()
    held = generate_instances(CVRP, 10, 64, 777)
    rng = make_rng(777, 1)
    random_cost = np.mean([[evaluate(i, construct(i, uniform_policy, "sample", rng)[0]) for _ in range(16)] for i in held])
    teacher_cost = rollout(teachers["CVRP"], held, "greedy").costs.mean()
    optimum = np.mean([exact_solve(i)[1] for i in held])
    closed = (random_cost - teacher_cost) / (random_cost - optimum)
    elapsed = time.perf_counter() - t0 + seconds["CVRP"]
    ok = closed >= 0.6 and elapsed < 1800
    record(5, "teacher learning", ok,
           f"random {random_cost:.4f}, teacher {teacher_cost:.4f}, optimum {optimum:.4f}: {100 * closed:.1f}% of gap closed (need 60%) in {elapsed:.0f}s (limit 1800s)")
    assert ok


# ---------------------------------------------------------------- 6


def test_c06_r3c_monotone_and_reach():
    t0 = time.perf_counter()
    insts = generate_instances(CVRP, 8, 100, 606)
    inits = [construct(i, uniform_policy, "sample", make_rng(606, k))[0] for k, i in enumerate(insts)]
    res = r3c_run_many(insts, inits, R3CConfig(iterations=200, reoptimizer="exact-dp", seed=6))
    reached = sum(abs(r.objective - exact_solve(i)[1]) < 1e-9 for r, i in zip(res, insts))
    mono = all(monotone(r.trace) for r in res)
    elapsed = time.perf_counter() - t0
    ok = mono and reached >= 95 and elapsed < 600
    record(6, "R3C monotone + reach", ok,
           f"traces non-increasing: {mono}; optimum reached on {reached}/100 (need 95) in {elapsed:.1f}s (limit 600s)")
    assert ok


# ---------------------------------------------------------------- 7


def test_c07_random_segment_length(toy_student):
    policy = toy_student[0]
    t0 = time.perf_counter()
    insts = generate_instances(CVRP, 50, 20, 707)
    inits = rollout(policy, insts, "greedy").solutions()
    means, mono = {}, True
    for label, cfg in [("random", {})] + [(f"k={k}", {"length_mode": "fixed", "k": k}) for k in (5, 10, 20)]:
        finals = []
        for seed in range(5):
            res = r3c_run_many(insts, inits, R3CConfig(iterations=50, seed=seed, **cfg), policy=policy)
            mono &= all(monotone(r.trace) for r in res)
            finals += [r.objective for r in res]
        means[label] = math.fsum(finals) / len(finals)
    elapsed = time.perf_counter() - t0
    ok = mono and all(means["random"] <= v for v in means.values()) and elapsed < 900
    detail = ", ".join(f"{k} {v:.4f}" for k, v in means.items())
    record(7, "random segment length", ok,
           f"mean final objective over 20 instances x 5 seeds: {detail} in {elapsed:.0f}s (limit 900s)")
    assert ok


# ---------------------------------------------------------------- 8


def test_c08_mask_and_padding_exact():
    rng = np.random.default_rng(8)
    worst, leaked, steps, b = 0.0, 0.0, 0, 0
    policies = (StudentPolicy(seed=8), TeacherPolicy(seed=9))
    while steps < 1000:
        sizes = rng.integers(3, 16, size=6)
        variants = [ALL_VARIANTS[i] for i in rng.integers(16, size=6)]
        insts = [generate_instance(v, int(n), (808, b, j)) for j, (v, n) in enumerate(zip(variants, sizes))]
        b += 1
        policy = policies[b % 2]
        env = BatchEnv(insts)
        states = [initial_state(i) for i in insts]
        with no_grad():
            cache = policy.encode(env)
            singles = [policy.encode(BatchEnv([i])) for i in insts]
            while not env.all_done:
                inp = StepInput.from_env(env)
                P = policy.decode(cache, inp).node_probs(env.N1)
                steps += 1
                for r, inst in enumerate(insts):
                    if env.done[r]:
                        continue
                    k = inst.n + 1
                    leaked = max(leaked, P[r, k:].sum(), P[r, ~inp.allowed[r]].sum())
                    q = policy.decode(singles[r], StepInput.from_state(inst, states[r])).node_probs(k)[0]
                    worst = max(worst, np.abs(P[r, :k] - q).max())
                actions = (rng.random(P.shape) * (P > 0)).argmax(axis=1)
                for r, inst in enumerate(insts):
                    if not env.done[r]:
                        states[r] = transition(inst, states[r], int(actions[r]))
                env.step(actions)
    ok = leaked == 0.0 and worst <= 1e-9
    record(8, "mask/pad exactness", ok,
           f"{steps} batched steps: mass on padded/infeasible = {leaked}, max batched-vs-single diff {worst:.1e} (limit 1e-9)")
    assert ok


# ---------------------------------------------------------------- 9


def test_c09_metric_fidelity():
    g = format_gap(16.06, 15.53)
    x = parse_cvrplib((DATA / "X-n101-k25.vrp").read_text())
    r = parse_solomon((DATA / "R101.txt").read_text())
    ok = g == "3.41%" and (x.name, x.n, x.capacity) == ("X-n101-k25", 100, 206) and (r.name, r.n) == ("R101", 100)
    record(9, "metric fidelity", ok, f"gap(16.06 vs 15.53) = {g}; parsed {x.name} (n={x.n}, C={x.capacity:g}) and {r.name} (n={r.n})")
    assert ok


# ---------------------------------------------------------------- 10


def _run_all(d: Path, threads: int) -> dict[str, bytes]:
    d.mkdir()
    tiny = ["--set", "n=6", "--set", "multi_start=3", "--set", "instances_per_epoch=8", "--set", "batch_size=4",
            "--set", "per_task_batch=2", "--set", "tasks=CVRP,OVRP", "--seed", "3"]
    cmds = [
        ["gen", "--variant", "CVRP", "--n", "10", "--count", "48", "--seed", "3", "--out", str(d / "cvrp.bin")],
        ["gen", "--variant", "VRPBLTW", "--n", "10", "--count", "40", "--seed", "3", "--out", str(d / "mix.bin")],
        ["oracle", "--dataset", str(d / "cvrp.bin"), "--out", str(d / "opt.txt")],
        ["oracle", "--dataset", str(d / "mix.bin"), "--out", str(d / "opt_mix.txt")],
        ["train-teacher", "--task", "CVRP", "--epochs", "2", "--out", str(d / "CVRP.ck"), *tiny],
        ["train-teacher", "--task", "OVRP", "--epochs", "2", "--out", str(d / "OVRP.ck"), *tiny],
        ["train-student", "--teacher", f"CVRP={d / 'CVRP.ck'}", "--teacher", f"OVRP={d / 'OVRP.ck'}",
         "--epochs", "2", "--out", str(d / "student.ck"), *tiny],
    ]
    for mode in ("st", "r3c:5"):
        cmds.append(["eval", "--model", str(d / "student.ck"), "--dataset", str(d / "cvrp.bin"), "--baseline", str(d / "opt.txt"),
                     "--dataset", str(d / "mix.bin"), "--baseline", str(d / "opt_mix.txt"), "--mode", mode, "--seed", "3",
                     "--threads", str(threads), "--no-wallclock", "--out", str(d / f"eval-{mode}.json"),
                     "--table", str(d / f"eval-{mode}.txt"), "--objectives", str(d / f"obj-{mode}.txt")])
    cmds.append(["bench", str(DATA / "X-n101-k25.vrp"), str(DATA / "R101.txt"), "--model", str(d / "student.ck"),
                 "--optima", str(DATA / "optima.txt"), "--mode", "r3c:3", "--seed", "3", "--threads", str(threads),
                 "--out", str(d / "bench.json")])
    cmds.append(["r3c-trace", "--dataset", str(d / "cvrp.bin"), "--model", str(d / "student.ck"), "--iterations", "20",
                 "--seed", "3", "--out", str(d / "trace.tsv")])
    for c in cmds:
        assert main(c) == 0, c
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_c10_determinism(tmp_path):
    runs = {(t, k): _run_all(tmp_path / f"t{t}-{k}", t) for t in (1, 4) for k in (0, 1)}
    ref = runs[(1, 0)]
    same = all(r == ref for r in runs.values())
    assert json.loads(ref["eval-st.json"])["rows"][1]["zero_shot"]
    record(10, "determinism", same,
           f"{len(ref)} artefacts (datasets, checkpoints, eval/bench reports, trace) byte-identical across 2 runs x threads {{1, 4}}")
    assert same
