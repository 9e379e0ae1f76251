"""Multi-task knowledge distillation for vehicle-routing neural solvers."""

__version__ = "0.1.0"
