"""Evaluation: solving datasets with a policy, gaps against baselines, reports.

Instances are processed in fixed-size chunks whatever the thread count, and
R3C run ``i`` draws from its own stream ``(seed, i)``, so results do not
depend on how many worker threads are used.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from mtlkd.core.instance import Instance
from mtlkd.core.solution import Solution, evaluate
from mtlkd.policy.rollout import rollout
from mtlkd.search.r3c import R3CConfig, r3c_run_many

CHUNK = 32


class SidecarError(ValueError):
    pass


def gap(obj: float, base: float) -> float:
    """Relative gap ``(obj - base) / base``."""
    if base == 0:
        raise ZeroDivisionError("baseline objective is zero")
    return (obj - base) / base


def format_gap(obj: float, base: float) -> str:
    return f"{100.0 * gap(obj, base):.2f}%"


def parse_mode(mode: str) -> int:
    """R3C iteration count for ``st`` (0) or ``r3c:K``."""
    if mode == "st":
        return 0
    if mode.startswith("r3c:"):
        try:
            k = int(mode[4:])
        except ValueError:
            k = -1
        if k >= 0:
            return k
    raise ValueError(f"mode must be 'st' or 'r3c:K', got {mode!r}")


def solve_instances(policy, instances: list[Instance], mode: str = "st", seed: int = 0, threads: int = 1, chunk: int = CHUNK) -> list[tuple[Solution, float]]:
    iters = parse_mode(mode)
    starts = list(range(0, len(instances), chunk))

    def work(s: int):
        part = instances[s : s + chunk]
        sols = rollout(policy, part, "greedy").solutions()
        if iters:
            res = r3c_run_many(part, sols, R3CConfig(iterations=iters, seed=seed), policy=policy, first_index=s)
            sols = [r.solution for r in res]
        return [(sol, evaluate(inst, sol)) for inst, sol in zip(part, sols)]

    if threads <= 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    return [x for p in parts for x in p]


def read_baseline(path) -> list[float]:
    """One objective per line; blank lines and ``#`` comments are ignored."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                out.append(float(line))
            except ValueError as e:
                raise SidecarError(f"{path}:{lineno}: not a number: {line!r}") from e
    return out


def write_baseline(path, values) -> None:
    with open(path, "w") as fh:
        fh.write("".join(f"{v!r}\n" for v in values))


def read_optima(path) -> dict[str, float]:
    """``NAME value`` per line."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise SidecarError(f"{path}:{lineno}: expected 'NAME value'")
            try:
                out[parts[0]] = float(parts[1])
            except ValueError as e:
                raise SidecarError(f"{path}:{lineno}: bad value {parts[1]!r}") from e
    return out


@dataclass
class EvalRow:
    variant: str
    n: int
    count: int
    mean_objective: float
    mean_baseline: float | None
    gap: float | None
    zero_shot: bool
    wallclock: float


@dataclass
class EvalReport:
    seed: int
    config_hash: str
    mode: str
    rows: list[EvalRow] = field(default_factory=list)

    def to_json(self, wallclock: bool = True) -> str:
        d = asdict(self)
        if not wallclock:
            for r in d["rows"]:
                r["wallclock"] = None
        return json.dumps(d, indent=1, sort_keys=True) + "\n"

    def to_text(self, wallclock: bool = True) -> str:
        head = f"# seed={self.seed} config_hash={self.config_hash} mode={self.mode}\n"
        cols = ["variant", "n", "count", "objective", "baseline", "gap", "zero_shot"] + (["time_s"] if wallclock else [])
        lines = [head, "\t".join(cols) + "\n"]
        for r in self.rows:
            vals = [
                r.variant,
                str(r.n),
                str(r.count),
                f"{r.mean_objective:.6f}",
                "-" if r.mean_baseline is None else f"{r.mean_baseline:.6f}",
                "-" if r.gap is None else f"{100.0 * r.gap:.2f}%",
                "yes" if r.zero_shot else "no",
            ]
            if wallclock:
                vals.append(f"{r.wallclock:.2f}")
            lines.append("\t".join(vals) + "\n")
        return "".join(lines)


def eval_row(policy, instances: list[Instance], mode: str, seed: int, threads: int, baseline=None, seen=None) -> tuple[EvalRow, list[float]]:
    t0 = time.perf_counter()
    objs = [o for _, o in solve_instances(policy, instances, mode, seed, threads)]
    wall = time.perf_counter() - t0
    mean = math.fsum(objs) / len(objs)
    base = g = None
    if baseline is not None:
        if len(baseline) != len(instances):
            raise SidecarError(f"baseline has {len(baseline)} values for {len(instances)} instances")
        base = math.fsum(baseline) / len(baseline)
        g = gap(mean, base)
    variant = instances[0].variant.name
    zero_shot = seen is not None and variant not in seen
    return EvalRow(variant, instances[0].n, len(instances), mean, base, g, zero_shot, wall), objs


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]
