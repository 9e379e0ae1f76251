"""Exact optimum for small instances (up to ``MAX_EXACT`` customers).

The kernel is compiled from ``_exact_ext.pyx`` when available; set
``MTLKD_PURE_PYTHON=1`` to force the pure-Python kernel. Both produce the
same routes for the same input.
"""

from __future__ import annotations

import math
import os

from mtlkd.core.instance import Instance
from mtlkd.core.solution import Solution, evaluate, verify

from . import _exact_py

MAX_EXACT = 12

if os.environ.get("MTLKD_PURE_PYTHON", "") not in ("", "0"):
    _kernel = _exact_py
    BACKEND = "python"
else:
    try:
        from . import _exact_ext as _kernel

        BACKEND = "compiled"
    except ImportError:
        _kernel = _exact_py
        BACKEND = "python"


class TooLargeError(ValueError):
    """Instance has more customers than the exact solver accepts."""


class ExactSolveError(RuntimeError):
    """The solver produced no solution, or one the verifier rejects."""


def kernel_args(instance: Instance) -> tuple:
    v = instance.variant
    return (
        instance.dist.tolist(),
        instance.demand.astype(float).tolist(),
        instance.tw[:, 0].tolist(),
        instance.tw[:, 1].tolist(),
        instance.service_time.tolist(),
        float(instance.capacity),
        float(instance.duration_limit),
        float(instance.speed),
        v.open,
        v.time_window,
        v.duration_limit,
    )


def exact_solve(instance: Instance, kernel=None) -> tuple[Solution, float]:
    """Optimal solution and its objective (as computed by ``evaluate``)."""
    if instance.n > MAX_EXACT:
        raise TooLargeError(f"exact solver handles at most {MAX_EXACT} customers, got {instance.n}")
    cost, routes = (kernel or _kernel).solve(*kernel_args(instance))
    if math.isinf(cost):
        raise ExactSolveError("no feasible solution exists")
    sol = Solution(routes)
    report = verify(instance, sol)
    if not report.feasible:
        raise ExactSolveError(f"solver output failed verification: {report.violations[:3]}")
    return sol, evaluate(instance, sol)
