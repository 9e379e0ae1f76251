"""Teacher and student policy networks."""

from .base import StepOut, choose
from .features import StepInput, node_features
from .padding import PaddedBatch, pad_batch, pad_unvisited
from .rollout import RolloutResult, as_step_policy, rollout
from .student import StudentConfig, StudentPolicy
from .teacher import TeacherCache, TeacherConfig, TeacherPolicy

__all__ = [
    "PaddedBatch",
    "RolloutResult",
    "StepInput",
    "StepOut",
    "StudentConfig",
    "StudentPolicy",
    "TeacherCache",
    "TeacherConfig",
    "TeacherPolicy",
    "as_step_policy",
    "choose",
    "node_features",
    "pad_batch",
    "pad_unvisited",
    "rollout",
]
