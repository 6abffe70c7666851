"""Cyclical log-annealing learning-rate schedules with warm restarts, plus
cosine/step/constant baselines, from-scratch optimizers, analytic test
surfaces, a tiny dense network, and a deterministic comparison harness.

The hot kernels (test-surface evaluation and fused optimizer updates) run on
a compiled extension when available and fall back to NumPy otherwise; see
``loganneal.backend()``.
"""
from loganneal._backend import BACKEND
from loganneal.schedule import (
    CycleRange,
    LogBaseRule,
    RestartPolicy,
    ScheduleKind,
    ScheduleSpec,
    ScheduleState,
    WarmupConfig,
    advance,
    cosine_lr,
    dump_schedule,
    log_lr,
    lr_at,
    step_decay_lr,
    warmup_lr,
)

__version__ = "0.1.0"


def backend() -> str:
    """Active kernel backend: ``"compiled"`` or ``"python"``."""
    return BACKEND


__all__ = [
    "BACKEND",
    "CycleRange",
    "LogBaseRule",
    "RestartPolicy",
    "ScheduleKind",
    "ScheduleSpec",
    "ScheduleState",
    "WarmupConfig",
    "advance",
    "backend",
    "cosine_lr",
    "dump_schedule",
    "log_lr",
    "lr_at",
    "step_decay_lr",
    "warmup_lr",
]
