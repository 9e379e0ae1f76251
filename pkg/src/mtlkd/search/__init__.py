"""Search: exact small-instance solver, enumeration oracle and the R3C improvement loop."""

from .exact import BACKEND, MAX_EXACT, ExactSolveError, TooLargeError, exact_solve
from .oracle import enumerate_optimum
from .r3c import (
    ExactReoptimizer,
    ModelReoptimizer,
    R3CConfig,
    R3CResult,
    format_trace,
    make_reoptimizer,
    r3c_run,
    r3c_run_many,
    read_trace,
    reoptimize_segment,
    sample_segment,
    write_trace,
)
from .subtours import Segment, accumulate_segment, rejoin, reorder_subtours, reverse_subtours, split_subtours

__all__ = [
    "BACKEND", "MAX_EXACT", "ExactReoptimizer", "ExactSolveError", "ModelReoptimizer", "R3CConfig",
    "R3CResult", "Segment", "TooLargeError", "accumulate_segment", "enumerate_optimum", "exact_solve",
    "format_trace", "make_reoptimizer", "r3c_run", "r3c_run_many", "read_trace", "rejoin",
    "reoptimize_segment", "reorder_subtours", "reverse_subtours", "sample_segment", "split_subtours",
    "write_trace",
]
