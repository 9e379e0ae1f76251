"""Training: REINFORCE teachers, distilled student, schedule, config and checkpoints."""

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, loads_checkpoint, dumps_checkpoint, save_checkpoint
from .config import PRESETS, ConfigError, TrainConfig, load_config, parse_config_text
from .kd import KDStats, RoutingError, distill, kd_evaluate, kd_student_step, route_teachers
from .reinforce import multi_start_actions, reinforce_teacher_step
from .schedule import lr_schedule
from .trainer import (
    StudentTrainer,
    TeacherTrainer,
    resume_student,
    resume_teacher,
    student_from_checkpoint,
    teacher_from_checkpoint,
)

__all__ = [
    "Checkpoint", "CheckpointError", "ConfigError", "KDStats", "PRESETS", "RoutingError", "StudentTrainer",
    "TeacherTrainer", "TrainConfig", "distill", "dumps_checkpoint", "kd_evaluate", "kd_student_step",
    "load_checkpoint", "load_config", "loads_checkpoint", "lr_schedule", "multi_start_actions",
    "parse_config_text", "reinforce_teacher_step", "resume_student", "resume_teacher", "route_teachers",
    "save_checkpoint", "student_from_checkpoint", "teacher_from_checkpoint",
]
