"""Learning-rate schedules with warm restarts.

Four schedule kinds share one per-epoch timeline:

* ``log`` - cyclical log annealing. Within a cycle of length T the rate is

      lr(t) = | eta_min + 0.5*(eta_max - eta_min) * (1 + log_b(pi * T / t)) |

  with the log base ``b`` resolved from a :class:`LogBaseRule`. Because the
  argument never drops below pi for t <= T, the curve spikes above eta_max
  early in the cycle and bottoms out above eta_min - a spike rather than a
  wave.
* ``cosine`` - cyclical cosine annealing:

      lr(t) = eta_min + 0.5*(eta_max - eta_min) * (1 + cos(pi * t / T))

* ``step`` - geometric staircase ``eta0 * gamma**floor(epoch / step_size)``.
* ``constant`` - fixed ``eta0``.

Cycle bookkeeping: cycle 0 lasts ``initial_decay_epochs``; cycle i >= 1 lasts
``round(restart_interval * multiplier**(i-1))`` (floor 1). Every cycle spans
the range (min_decay_lr, restart_lr). Cycles are stepped per epoch with the
in-cycle counter t starting at 1, so the log and cosine timelines align. An
optional linear warmup runs before the first cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Sequence, TextIO


class ScheduleKind(str, Enum):
    LOG = "log"
    COSINE = "cosine"
    STEP = "step"
    CONSTANT = "constant"


@dataclass(frozen=True)
class CycleRange:
    """Learning-rate range (eta_min, eta_max) of one annealing cycle."""

    eta_min: float
    eta_max: float

    def __post_init__(self):
        if not (0.0 < self.eta_min < self.eta_max):
            raise ValueError(
                f"invalid cycle range: need 0 < eta_min < eta_max, "
                f"got eta_min={self.eta_min}, eta_max={self.eta_max}"
            )


@dataclass(frozen=True)
class RestartPolicy:
    """Cycle-length generation rule and the per-cycle restart range."""

    initial_decay_epochs: int
    restart_interval: int
    restart_interval_multiplier: float
    restart_lr: float
    min_decay_lr: float

    def __post_init__(self):
        if self.initial_decay_epochs < 1:
            raise ValueError("initial_decay_epochs must be >= 1")
        if self.restart_interval < 1:
            raise ValueError("restart_interval must be >= 1")
        if self.restart_interval_multiplier < 1.0:
            raise ValueError("restart_interval_multiplier must be >= 1.0")
        if self.restart_lr <= 0.0 or self.min_decay_lr <= 0.0:
            raise ValueError("restart_lr and min_decay_lr must be > 0")
        if not self.min_decay_lr < self.restart_lr:
            raise ValueError("min_decay_lr must be < restart_lr")

    def cycle_range(self) -> CycleRange:
        return CycleRange(self.min_decay_lr, self.restart_lr)

    def cycle_length(self, cycle_index: int) -> int:
        """Length of cycle i: initial_decay_epochs for i=0, then a geometric
        sequence rounded to the nearest integer (half away from zero), min 1.
        """
        if cycle_index == 0:
            return self.initial_decay_epochs
        raw = self.restart_interval * self.restart_interval_multiplier ** (
            cycle_index - 1
        )
        return max(1, int(math.floor(raw + 0.5)))


@dataclass(frozen=True)
class WarmupConfig:
    """Linear ramp from warmup_start_lr toward the schedule's first value."""

    warmup_epochs: int = 0
    warmup_start_lr: float = 1e-4

    def __post_init__(self):
        if self.warmup_epochs < 0:
            raise ValueError("warmup_epochs must be >= 0")
        if self.warmup_start_lr <= 0.0:
            raise ValueError("warmup_start_lr must be > 0")


class LogBaseKind(str, Enum):
    RANGE_RECIPROCAL = "range"  # b = 1 / (eta_max - eta_min)
    MIN_RECIPROCAL = "min"  # b = 1 / eta_min
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class LogBaseRule:
    """How the log-annealing base is derived from the cycle range.

    The default uses the reciprocal of the range width. The reciprocal of
    eta_min and an explicit override are also available; all three must
    resolve to a finite base > 1.
    """

    kind: LogBaseKind = LogBaseKind.RANGE_RECIPROCAL
    value: float | None = None

    @classmethod
    def range_reciprocal(cls) -> "LogBaseRule":
        return cls(LogBaseKind.RANGE_RECIPROCAL)

    @classmethod
    def min_reciprocal(cls) -> "LogBaseRule":
        return cls(LogBaseKind.MIN_RECIPROCAL)

    @classmethod
    def explicit(cls, value: float) -> "LogBaseRule":
        return cls(LogBaseKind.EXPLICIT, value)

    def resolve(self, cycle: CycleRange) -> float:
        if self.kind is LogBaseKind.RANGE_RECIPROCAL:
            base = 1.0 / (cycle.eta_max - cycle.eta_min)
        elif self.kind is LogBaseKind.MIN_RECIPROCAL:
            base = 1.0 / cycle.eta_min
        else:
            if self.value is None:
                raise ValueError("explicit log base rule requires a value")
            base = float(self.value)
        if not math.isfinite(base) or base <= 1.0:
            raise ValueError(
                f"invalid log base: resolved base must be finite and > 1, got {base}"
            )
        return base


@dataclass(frozen=True)
class ScheduleSpec:
    """Full description of one scheduler.

    Fields irrelevant to ``kind`` are ignored; ``validate()`` (run on
    construction) checks the ones the kind requires.
    """

    kind: ScheduleKind
    cycle: CycleRange | None = None
    restart: RestartPolicy | None = None
    warmup: WarmupConfig = field(default_factory=WarmupConfig)
    log_base: LogBaseRule = field(default_factory=LogBaseRule)
    step_gamma: float | None = None
    step_size: int | None = None
    eta0: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.kind in (ScheduleKind.LOG, ScheduleKind.COSINE):
            if self.restart is None:
                raise ValueError(f"{self.kind.value} schedule requires a restart policy")
            if self.cycle is None:
                object.__setattr__(self, "cycle", self.restart.cycle_range())
            if self.warmup.warmup_epochs > 0 and not (
                self.warmup.warmup_start_lr <= self.restart.restart_lr
            ):
                raise ValueError("warmup_start_lr must be <= restart_lr")
            if self.kind is ScheduleKind.LOG:
                self.log_base.resolve(self.cycle)  # fail fast on a bad base
        elif self.kind is ScheduleKind.STEP:
            # eta0 = 0 is allowed as a degenerate frozen-parameters schedule
            if self.eta0 is None or self.eta0 < 0.0 or not math.isfinite(self.eta0):
                raise ValueError("step schedule requires finite eta0 >= 0")
            if self.step_gamma is None or not (0.0 < self.step_gamma < 1.0):
                raise ValueError("step_gamma must lie in (0, 1)")
            if self.step_size is None or self.step_size < 1:
                raise ValueError("step_size must be >= 1")
        elif self.kind is ScheduleKind.CONSTANT:
            if self.eta0 is None or self.eta0 < 0.0 or not math.isfinite(self.eta0):
                raise ValueError("constant schedule requires finite eta0 >= 0")

    # -- convenience constructors -------------------------------------------

    @classmethod
    def log_annealing(
        cls,
        restart: RestartPolicy,
        warmup: WarmupConfig | None = None,
        log_base: LogBaseRule | None = None,
    ) -> "ScheduleSpec":
        return cls(
            ScheduleKind.LOG,
            restart=restart,
            warmup=warmup or WarmupConfig(),
            log_base=log_base or LogBaseRule(),
        )

    @classmethod
    def cosine_annealing(
        cls, restart: RestartPolicy, warmup: WarmupConfig | None = None
    ) -> "ScheduleSpec":
        return cls(ScheduleKind.COSINE, restart=restart, warmup=warmup or WarmupConfig())

    @classmethod
    def step_decay(cls, eta0: float, gamma: float, step_size: int) -> "ScheduleSpec":
        return cls(ScheduleKind.STEP, eta0=eta0, step_gamma=gamma, step_size=step_size)

    @classmethod
    def constant(cls, eta0: float) -> "ScheduleSpec":
        return cls(ScheduleKind.CONSTANT, eta0=eta0)


@dataclass(frozen=True)
class ScheduleState:
    """Cursor over a cyclic schedule: cycle index, 1-based in-cycle epoch
    counter, current cycle length, and the global epoch count."""

    cycle_index: int = 0
    t_cur: int = 1
    t_i: int = 1
    global_epoch: int = 0
    restarted: bool = False

    def __post_init__(self):
        if not (1 <= self.t_cur <= self.t_i):
            raise ValueError(f"t_cur must lie in [1, t_i], got {self.t_cur}/{self.t_i}")


def initial_state(policy: RestartPolicy) -> ScheduleState:
    return ScheduleState(cycle_index=0, t_cur=1, t_i=policy.cycle_length(0))


def advance(state: ScheduleState, policy: RestartPolicy) -> ScheduleState:
    """Step the cycle cursor by one epoch, rolling into the next cycle (and
    flagging the restart) when the current one is exhausted."""
    if state.t_cur < state.t_i:
        return replace(
            state,
            t_cur=state.t_cur + 1,
            global_epoch=state.global_epoch + 1,
            restarted=False,
        )
    nxt = state.cycle_index + 1
    return ScheduleState(
        cycle_index=nxt,
        t_cur=1,
        t_i=policy.cycle_length(nxt),
        global_epoch=state.global_epoch + 1,
        restarted=True,
    )


def cosine_lr(cycle: CycleRange, t_cur: int, t_i: int) -> float:
    """Cosine-annealed rate: eta_max at t_cur=0 down to eta_min at t_cur=t_i."""
    if t_i < 1:
        raise ValueError(f"invalid cycle: t_i must be >= 1, got {t_i}")
    if not (0 <= t_cur <= t_i):
        raise ValueError(f"t_cur must lie in [0, t_i], got {t_cur}/{t_i}")
    return cycle.eta_min + 0.5 * (cycle.eta_max - cycle.eta_min) * (
        1.0 + math.cos(math.pi * t_cur / t_i)
    )


def log_lr(
    cycle: CycleRange, t_cur: int, t_i: int, base_rule: LogBaseRule | None = None
) -> float:
    """Log-annealed rate: spikes above eta_max when t_cur << t_i, then decays
    logarithmically. Strictly decreasing in t_cur for any base > 1."""
    if t_cur == 0:
        raise ZeroDivisionError(
            "log annealing divides by t_cur; the in-cycle counter starts at 1"
        )
    if t_i < 1:
        raise ValueError(f"invalid cycle: t_i must be >= 1, got {t_i}")
    if not (1 <= t_cur <= t_i):
        raise ValueError(f"t_cur must lie in [1, t_i], got {t_cur}/{t_i}")
    base = (base_rule or LogBaseRule()).resolve(cycle)
    ratio = math.log(math.pi * t_i / t_cur) / math.log(base)
    return abs(cycle.eta_min + 0.5 * (cycle.eta_max - cycle.eta_min) * (1.0 + ratio))


def step_decay_lr(eta0: float, gamma: float, step_size: int, epoch: int) -> float:
    """Staircase decay: eta0 * gamma**floor(epoch / step_size)."""
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    if step_size < 1:
        raise ValueError("step_size must be >= 1")
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return eta0 * gamma ** (epoch // step_size)


def warmup_lr(warmup: WarmupConfig, target_lr: float, epoch: int) -> float:
    """Linear interpolation from warmup_start_lr at epoch 0 toward target_lr
    at epoch == warmup_epochs (that endpoint belongs to the schedule proper)."""
    if warmup.warmup_epochs <= 0:
        raise ValueError("warmup is inactive (warmup_epochs is 0)")
    if not (0 <= epoch < warmup.warmup_epochs):
        raise ValueError(
            f"warmup only covers epochs [0, {warmup.warmup_epochs}), got {epoch}"
        )
    frac = epoch / warmup.warmup_epochs
    return warmup.warmup_start_lr + frac * (target_lr - warmup.warmup_start_lr)


def _cycle_lr(spec: ScheduleSpec, state: ScheduleState) -> float:
    if spec.kind is ScheduleKind.LOG:
        return log_lr(spec.cycle, state.t_cur, state.t_i, spec.log_base)
    return cosine_lr(spec.cycle, state.t_cur, state.t_i)


def _proper_lr(spec: ScheduleSpec, state: ScheduleState, schedule_epoch: int) -> float:
    """Rate of the schedule proper at the given post-warmup epoch."""
    if spec.kind is ScheduleKind.CONSTANT:
        return spec.eta0
    if spec.kind is ScheduleKind.STEP:
        return step_decay_lr(spec.eta0, spec.step_gamma, spec.step_size, schedule_epoch)
    return _cycle_lr(spec, state)


def iter_lrs(spec: ScheduleSpec, epochs: int) -> Iterator[float]:
    """Yield the learning rate for epochs 0..epochs-1 in one stateful pass."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    wu = spec.warmup.warmup_epochs
    cyclic = spec.kind in (ScheduleKind.LOG, ScheduleKind.COSINE)
    state = initial_state(spec.restart) if cyclic else ScheduleState()
    if wu > 0:
        target = _proper_lr(spec, state, 0)
        for epoch in range(min(wu, epochs)):
            yield warmup_lr(spec.warmup, target, epoch)
    for epoch in range(wu, epochs):
        yield _proper_lr(spec, state, epoch - wu)
        if cyclic:
            state = advance(state, spec.restart)


def lr_at(spec: ScheduleSpec, epoch: int) -> float:
    """Pure-function view: the rate at ``epoch``, identical to replaying the
    stateful schedule from scratch."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    for lr in iter_lrs(spec, epoch + 1):
        pass
    return lr


def dump_schedule(spec: ScheduleSpec, epochs: int) -> list[tuple[int, float]]:
    """Materialize the schedule as (epoch, lr) pairs for epochs 0..epochs-1."""
    return list(enumerate(iter_lrs(spec, epochs)))


def restart_epochs(spec: ScheduleSpec, epochs: int) -> list[int]:
    """Global epochs at which a warm restart begins within [0, epochs)."""
    if spec.kind not in (ScheduleKind.LOG, ScheduleKind.COSINE):
        return []
    wu = spec.warmup.warmup_epochs
    state = initial_state(spec.restart)
    out = []
    for epoch in range(wu, epochs):
        if state.restarted:
            out.append(epoch)
        state = advance(state, spec.restart)
    return out


def write_schedule_csv(out: TextIO, rows: Sequence[tuple[int, float]]) -> None:
    """CSV dump, header ``epoch,lr``, rates at 10 significant digits."""
    out.write("epoch,lr\n")
    for epoch, lr in rows:
        out.write(f"{epoch},{lr:.10g}\n")
