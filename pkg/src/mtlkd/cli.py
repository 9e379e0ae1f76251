"""Command-line interface.

Verbs: gen, oracle, train-teacher, train-student, eval, bench, r3c-trace.
Exit codes: 0 ok, 2 configuration error, 3 data error. ``MTLKD_SEED`` is
used when no seed is given on the command line or in the config.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from mtlkd.core.construct import construct, nearest_policy
from mtlkd.core.variant import VariantSpec
from mtlkd.data.dataset import DatasetFormatError, generate_dataset, load_dataset, save_dataset
from mtlkd.data.parsers import ParseError, parse_cvrplib, parse_solomon
from mtlkd.evaluate import EvalReport, SidecarError, config_hash, eval_row, read_baseline, read_optima, solve_instances, write_baseline
from mtlkd.numkit.serialize import TensorFormatError
from mtlkd.policy.rollout import rollout
from mtlkd.search.exact import ExactSolveError, TooLargeError, exact_solve
from mtlkd.search.r3c import R3CConfig, r3c_run, write_trace
from mtlkd.train.checkpoint import CheckpointError, load_checkpoint
from mtlkd.train.config import ConfigError, load_config
from mtlkd.train.kd import RoutingError
from mtlkd.train.trainer import (
    StudentTrainer,
    TeacherTrainer,
    resume_student,
    resume_teacher,
    student_from_checkpoint,
    teacher_from_checkpoint,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class DataError(Exception):
    pass


def env_seed() -> int | None:
    raw = os.environ.get("MTLKD_SEED")
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"MTLKD_SEED must be an integer, got {raw!r}") from e


def resolve_seed(flag: int | None, default: int = 0) -> int:
    if flag is not None:
        return flag
    s = env_seed()
    return default if s is None else s


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise ConfigError(f"--set expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _train_config(args):
    overrides = _overrides(args.set)
    if args.epochs is not None:
        overrides["epochs"] = str(args.epochs)
    file_has_seed = False
    if args.config:
        with open(args.config) as fh:
            file_has_seed = re.search(r"^\s*seed\s*=", fh.read(), re.M) is not None
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    elif "seed" not in overrides and not file_has_seed and env_seed() is not None:
        overrides["seed"] = str(env_seed())
    return load_config(args.config, overrides)


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_model(path):
    ck = load_checkpoint(path)
    if ck.kind == "teacher":
        return teacher_from_checkpoint(ck), [ck.task], ck.config
    return student_from_checkpoint(ck), list(ck.config["tasks"]), ck.config


# verbs


def cmd_gen(args) -> int:
    variant = VariantSpec.from_name(args.variant)
    seed = resolve_seed(args.seed)
    ds = generate_dataset(variant, args.n, args.count, seed)
    save_dataset(args.out, ds)
    print(f"wrote {len(ds)} {variant.name} instances (n={args.n}, seed={seed}) to {args.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    ds = load_dataset(args.dataset)
    values = [exact_solve(inst)[1] for inst in ds.instances]
    write_baseline(args.out, values)
    print(f"wrote {len(values)} optimal objectives to {args.out}")
    return EXIT_OK


def _log_epochs(trainer, log_path, verbose: bool):
    fh = open(log_path, "a") if log_path else None
    header = f"# seed={trainer.config.seed} config_hash={trainer.config.config_hash()}\n"
    if fh:
        fh.write(header)
    print(header, end="")

    def on_epoch(tr):
        ep, loss, lr, wall = tr.log[-1]
        line = f"{ep}\t{loss!r}\t{lr!r}\t{wall:.3f}\n"
        if fh:
            fh.write(line)
            fh.flush()
        if verbose:
            print(line, end="")

    return on_epoch, fh


def _run_trainer(trainer, args) -> int:
    on_epoch, fh = _log_epochs(trainer, args.log, args.verbose)
    try:
        trainer.train(args.epochs, on_epoch=on_epoch)
    finally:
        if fh:
            fh.close()
    trainer.save(args.out)
    print(f"saved {trainer.kind} checkpoint at epoch {trainer.epoch} to {args.out}")
    return EXIT_OK


def cmd_train_teacher(args) -> int:
    if args.resume:
        trainer = resume_teacher(args.resume)
        if args.task and VariantSpec.from_name(args.task).name != trainer.task:
            raise ConfigError(f"resume checkpoint is for {trainer.task}, not {args.task}")
    else:
        if not args.task:
            raise ConfigError("--task is required")
        trainer = TeacherTrainer(_train_config(args), args.task)
    return _run_trainer(trainer, args)


def _teachers(specs: list[str]) -> dict:
    teachers = {}
    for spec in specs or []:
        if "=" not in spec:
            raise ConfigError(f"--teacher expects TASK=PATH, got {spec!r}")
        task, path = spec.split("=", 1)
        task = VariantSpec.from_name(task).name
        if not Path(path).exists():
            raise ConfigError(f"missing teacher checkpoint for {task}: {path}")
        teachers[task] = teacher_from_checkpoint(path)
    return teachers


def cmd_train_student(args) -> int:
    teachers = _teachers(args.teacher)
    if args.resume:
        trainer = resume_student(args.resume, teachers)
    else:
        trainer = StudentTrainer(_train_config(args), teachers)
    return _run_trainer(trainer, args)


def cmd_eval(args) -> int:
    policy, seen, model_cfg = _load_model(args.model)
    seed = resolve_seed(args.seed)
    baselines = args.baseline or []
    if baselines and len(baselines) != len(args.dataset):
        raise ConfigError("give one --baseline per --dataset (or none)")
    settings = {"model": model_cfg, "mode": args.mode, "seed": seed}
    report = EvalReport(seed, config_hash(settings), args.mode)
    objectives = []
    for k, path in enumerate(args.dataset):
        ds = load_dataset(path)
        base = read_baseline(baselines[k]) if baselines else None
        row, objs = eval_row(policy, ds.instances, args.mode, seed, args.threads, base, seen)
        report.rows.append(row)
        objectives.append(objs)
    wall = not args.no_wallclock
    if args.out:
        _write(args.out, report.to_json(wall))
    _write(args.table, report.to_text(wall))
    if args.objectives:
        write_baseline(args.objectives, [o for objs in objectives for o in objs])
    return EXIT_OK


def _parse_bench_file(path: str):
    text = Path(path).read_text()
    if re.search(r"^\s*DIMENSION\s*:", text, re.M):
        return parse_cvrplib(text)
    return parse_solomon(text)


def cmd_bench(args) -> int:
    policy, _, model_cfg = _load_model(args.model)
    seed = resolve_seed(args.seed)
    optima = read_optima(args.optima) if args.optima else {}
    settings = {"model": model_cfg, "mode": args.mode, "seed": seed}
    rows = []
    parsed = []
    for path in args.files:
        try:
            parsed.append(_parse_bench_file(path))
        except (ParseError, OSError, ValueError) as e:
            print(f"skipping {path}: {e}", file=sys.stderr)
    if not parsed:
        raise DataError("no benchmark file could be parsed")
    results = solve_instances(policy, parsed, args.mode, seed, args.threads, chunk=1)
    for inst, (_, obj) in zip(parsed, results):
        native = obj * inst.scale
        opt = optima.get(inst.name)
        rows.append(
            {
                "name": inst.name,
                "variant": inst.variant.name,
                "n": inst.n,
                "objective": native,
                "optimum": opt,
                "gap": None if opt is None else (native - opt) / opt,
            }
        )
    out = {"seed": seed, "config_hash": config_hash(settings), "mode": args.mode, "rows": rows}
    if args.out:
        _write(args.out, json.dumps(out, indent=1, sort_keys=True) + "\n")
    lines = [f"# seed={seed} config_hash={out['config_hash']} mode={args.mode}\n", "name\tn\tobjective\toptimum\tgap\n"]
    for r in rows:
        opt = "-" if r["optimum"] is None else f"{r['optimum']:.1f}"
        g = "-" if r["gap"] is None else f"{100 * r['gap']:.2f}%"
        lines.append(f"{r['name']}\t{r['n']}\t{r['objective']:.1f}\t{opt}\t{g}\n")
    sys.stdout.write("".join(lines))
    return EXIT_OK


def cmd_r3c_trace(args) -> int:
    ds = load_dataset(args.dataset)
    if not 0 <= args.index < len(ds):
        raise DataError(f"instance index {args.index} out of range (dataset has {len(ds)})")
    inst = ds[args.index]
    seed = resolve_seed(args.seed)
    cfg = R3CConfig(
        iterations=args.iterations,
        length_mode=args.length_mode,
        k=args.k,
        reoptimizer=args.reoptimizer,
        enable_reversal=not args.no_reversal,
        enable_reorder=not args.no_reorder,
        seed=seed,
    )
    policy = None
    if args.model:
        policy, _, _ = _load_model(args.model)
        initial = rollout(policy, [inst], "greedy").solutions()[0]
    elif cfg.reoptimizer == "model":
        raise ConfigError("the model re-optimizer needs --model")
    else:
        initial = construct(inst, nearest_policy, "greedy")[0]
    res = r3c_run(inst, initial, cfg, policy=policy)
    write_trace(args.out, res.trace)
    print(f"# seed={seed} config_hash={config_hash(cfg.__dict__)}")
    print(f"initial {res.initial:.6f} final {res.objective:.6f} accepted {res.accepted}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtlkd", description="Multi-task VRP solver with distilled student and R3C search.")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", help="generate a seeded dataset file")
    g.add_argument("--variant", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    o = sub.add_parser("oracle", help="write exact optima of a small-n dataset as a baseline file")
    o.add_argument("--dataset", required=True)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oracle)

    for verb, func in (("train-teacher", cmd_train_teacher), ("train-student", cmd_train_student)):
        t = sub.add_parser(verb)
        if verb == "train-teacher":
            t.add_argument("--task")
        else:
            t.add_argument("--teacher", action="append", metavar="TASK=PATH", help="one per seen task")
        t.add_argument("--config", help="flat key = value file")
        t.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
        t.add_argument("--seed", type=int)
        t.add_argument("--epochs", type=int)
        t.add_argument("--resume", help="checkpoint to continue from")
        t.add_argument("--out", required=True, help="checkpoint path")
        t.add_argument("--log", help="append tab-separated epoch/loss/lr/wallclock lines here")
        t.add_argument("--verbose", action="store_true")
        t.set_defaults(func=func)

    e = sub.add_parser("eval", help="evaluate a checkpoint on dataset files")
    e.add_argument("--model", required=True)
    e.add_argument("--dataset", action="append", required=True)
    e.add_argument("--baseline", action="append", help="baseline objectives, one per line")
    e.add_argument("--mode", default="st", help="st or r3c:K")
    e.add_argument("--seed", type=int)
    e.add_argument("--threads", type=int, default=1)
    e.add_argument("--out", default=None, help="JSON report path")
    e.add_argument("--table", default=None, help="text table path (default stdout)")
    e.add_argument("--objectives", help="also write per-instance objectives here")
    e.add_argument("--no-wallclock", action="store_true", help="omit timings for byte-comparable reports")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="solve CVRPLIB / Solomon files")
    b.add_argument("files", nargs="+")
    b.add_argument("--model", required=True)
    b.add_argument("--optima", help="sidecar with 'NAME value' lines")
    b.add_argument("--mode", default="st")
    b.add_argument("--seed", type=int)
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("r3c-trace", help="export the best-objective trace of one R3C run")
    r.add_argument("--dataset", required=True)
    r.add_argument("--index", type=int, default=0)
    r.add_argument("--model")
    r.add_argument("--reoptimizer", default="model", choices=["model", "exact-dp"])
    r.add_argument("--iterations", type=int, default=200)
    r.add_argument("--length-mode", default="random", choices=["random", "fixed"])
    r.add_argument("--k", type=int, default=10)
    r.add_argument("--no-reversal", action="store_true")
    r.add_argument("--no-reorder", action="store_true")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_r3c_trace)
    return p


CONFIG_ERRORS = (ConfigError, RoutingError, TooLargeError)
DATA_ERRORS = (
    DataError,
    DatasetFormatError,
    ParseError,
    SidecarError,
    CheckpointError,
    TensorFormatError,
    ExactSolveError,
    OSError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CONFIG_ERRORS as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DATA_ERRORS as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:  # bad variant names, modes and similar argument values
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
