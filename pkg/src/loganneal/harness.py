"""Seeded training loops: schedule -> optimizer -> model, with the
threshold halt rule, per-epoch metrics, and multi-schedule comparisons.

One experiment seed drives model initialization and every epoch's batch
shuffle, so a run is bitwise reproducible and two runs differing only in
their schedule share identical data and initial parameters.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Callable, TextIO

import numpy as np

from loganneal import landscape as ls
from loganneal import micronet, optim, schedule
from loganneal.dataio import Dataset, batch_iter
from loganneal.micronet import MlpSpec
from loganneal.optim import AdamConfig, AdamState, SgdConfig, SgdState
from loganneal.schedule import ScheduleSpec


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss (distinct from a rule-based halt)."""

    def __init__(self, epoch: int, value: float):
        super().__init__(f"non-finite loss {value} at epoch {epoch}")
        self.epoch = epoch
        self.value = value


@dataclass(frozen=True)
class HaltRule:
    """Stop once the mean loss exceeds the threshold, but only after a
    buffer of epochs so a high initial loss never halts immediately."""

    buffer_epochs: int = 2
    loss_threshold: float = 4.5

    def __post_init__(self):
        if self.buffer_epochs < 0:
            raise ValueError("buffer_epochs must be >= 0")
        if not np.isfinite(self.loss_threshold):
            raise ValueError("loss_threshold must be finite")


def check_halt(rule: HaltRule, epoch: int, mean_loss: float) -> bool:
    """True iff ``epoch > buffer_epochs`` and ``mean_loss > loss_threshold``
    (both strict); ``epoch`` is 1-based."""
    if epoch < 1:
        raise ValueError("epoch is 1-based")
    return epoch > rule.buffer_epochs and mean_loss > rule.loss_threshold


@dataclass(frozen=True)
class NewtonConfig:
    """Marker selecting the direct-solve second-order update."""


OptimizerConfig = SgdConfig | AdamConfig | NewtonConfig


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Dataset
    model: MlpSpec
    optimizer: OptimizerConfig
    schedule: ScheduleSpec
    epochs: int
    batch_size: int = 128
    seed: int = 0
    halt: HaltRule = field(default_factory=HaltRule)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if isinstance(self.optimizer, NewtonConfig):
            raise ValueError("second-order updates are for landscape runs only")


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    mean_loss: float
    accuracy: float
    lr_min: float
    lr_mean: float
    lr_max: float


@dataclass
class RunResult:
    metrics: list[EpochMetrics]
    halted: bool
    halt_epoch: int | None
    init_params_checksum: str
    final_params_checksum: str
    schedule_kind: str
    seed: int


def params_checksum(vec: np.ndarray) -> str:
    """64-bit digest of a parameter vector's raw bytes."""
    return hashlib.blake2b(
        np.ascontiguousarray(vec, dtype="<f8").tobytes(), digest_size=8
    ).hexdigest()


def _epoch_seed(seed: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1)[0])


def _make_stepper(
    cfg: OptimizerConfig, n: int
) -> Callable[[np.ndarray, np.ndarray, float], np.ndarray]:
    if isinstance(cfg, SgdConfig):
        state = SgdState.for_params(n)
        return lambda x, g, lr: optim.sgd_step(x, g, lr, cfg, state)[0]
    if isinstance(cfg, AdamConfig):
        state = AdamState.for_params(n)
        return lambda x, g, lr: optim.adam_step(x, g, lr, cfg, state)[0]
    raise ValueError(f"unsupported optimizer config: {cfg!r}")


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    """Train the model for up to ``epochs`` epochs, recording per-epoch mean
    loss, training accuracy, and the lr actually applied. Stops early when
    the halt rule fires; raises :class:`DivergenceError` on non-finite loss.
    """
    model = micronet.init(replace(cfg.model, init_seed=cfg.seed))
    x = model.flat_params()
    init_sum = params_checksum(x)
    step = _make_stepper(cfg.optimizer, x.shape[0])
    n = len(cfg.dataset)
    batch_size = min(cfg.batch_size, n)
    head = model.spec.output_head

    metrics: list[EpochMetrics] = []
    halted = False
    halt_epoch = None
    lrs = schedule.iter_lrs(cfg.schedule, cfg.epochs)
    for epoch, lr in enumerate(lrs):
        loss_sum = 0.0
        hits = 0
        for batch in batch_iter(cfg.dataset, batch_size, _epoch_seed(cfg.seed, epoch)):
            cache, outputs = micronet.forward(model, batch)
            batch_loss = micronet.loss(outputs, batch, head)
            loss_sum += batch_loss * len(batch)
            hits += int((micronet.predict_classes(outputs) == batch.labels).sum())
            w_grads, b_grads = micronet.backward(model, cache, batch)
            g = micronet.flatten_grads(w_grads, b_grads)
            try:
                x = step(x, g, lr)
            except optim.NonFiniteGradientError:
                raise DivergenceError(epoch + 1, float("nan")) from None
            model.set_flat_params(x)
        mean_loss = loss_sum / n
        if not np.isfinite(mean_loss):
            raise DivergenceError(epoch + 1, mean_loss)
        metrics.append(
            EpochMetrics(epoch, mean_loss, hits / n, lr_min=lr, lr_mean=lr, lr_max=lr)
        )
        if check_halt(cfg.halt, epoch + 1, mean_loss):
            halted = True
            halt_epoch = epoch + 1
            break
    return RunResult(
        metrics=metrics,
        halted=halted,
        halt_epoch=halt_epoch,
        init_params_checksum=init_sum,
        final_params_checksum=params_checksum(x),
        schedule_kind=cfg.schedule.kind.value,
        seed=cfg.seed,
    )


@dataclass
class CompareResult:
    """Per-schedule outcomes; diverged runs land in ``failures`` instead of
    aborting their siblings."""

    results: dict[str, RunResult]
    failures: dict[str, DivergenceError]


def compare(base: ExperimentConfig, schedules: list[ScheduleSpec]) -> CompareResult:
    """Run every schedule under the base config (same seed, data, and
    initialization) so the schedule is the only varying factor."""
    if not schedules:
        raise ValueError("need at least one schedule to compare")
    names: list[str] = []
    for spec in schedules:
        name = spec.kind.value
        if name in names:
            name = f"{name}-{sum(n.startswith(name) for n in names) + 1}"
        names.append(name)
    results: dict[str, RunResult] = {}
    failures: dict[str, DivergenceError] = {}
    for name, spec in zip(names, schedules):
        try:
            results[name] = run_experiment(replace(base, schedule=spec))
        except DivergenceError as err:
            failures[name] = err
    return CompareResult(results=results, failures=failures)


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    value: float
    lr: float
    best_value: float


def landscape_run(
    kind,
    start,
    optimizer: OptimizerConfig,
    spec: ScheduleSpec,
    steps: int,
) -> list[TrajectoryPoint]:
    """Descend an analytic surface for ``steps`` updates, recording the
    objective, the lr applied, and the best value seen so far."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.ascontiguousarray(start, dtype=np.float64).copy()
    newton = isinstance(optimizer, NewtonConfig)
    step = None if newton else _make_stepper(optimizer, x.shape[0])
    best = ls.eval(kind, x)
    out: list[TrajectoryPoint] = []
    for i, lr in enumerate(schedule.iter_lrs(spec, steps), start=1):
        g = ls.grad(kind, x)
        if newton:
            x = optim.newton_step(x, g, ls.hessian(kind, x), lr)
        else:
            x = step(x, g, lr)
        f = ls.eval(kind, x)
        if not np.isfinite(f):
            raise DivergenceError(i, f)
        best = min(best, f)
        out.append(TrajectoryPoint(step=i, value=f, lr=lr, best_value=best))
    return out


# -- serialization --------------------------------------------------------------

RUN_CSV_HEADER = "epoch,mean_loss,accuracy,lr_min,lr_mean,lr_max"


def write_run_csv(out: TextIO, result: RunResult) -> None:
    out.write(RUN_CSV_HEADER + "\n")
    for m in result.metrics:
        out.write(
            f"{m.epoch},{m.mean_loss:.10g},{m.accuracy:.10g},"
            f"{m.lr_min:.10g},{m.lr_mean:.10g},{m.lr_max:.10g}\n"
        )


def write_run_metadata(out: TextIO, result: RunResult) -> None:
    out.write(f"schedule={result.schedule_kind}\n")
    out.write(f"seed={result.seed}\n")
    out.write(f"halted={'true' if result.halted else 'false'}\n")
    out.write(f"halt_epoch={'' if result.halt_epoch is None else result.halt_epoch}\n")
    out.write(f"init_params_checksum={result.init_params_checksum}\n")
    out.write(f"final_params_checksum={result.final_params_checksum}\n")


def write_trajectory_csv(out: TextIO, points: list[TrajectoryPoint]) -> None:
    out.write("step,f,lr,best_f\n")
    for p in points:
        out.write(f"{p.step},{p.value:.10g},{p.lr:.10g},{p.best_value:.10g}\n")
