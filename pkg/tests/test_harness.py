import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loganneal import harness, landscape as ls, micronet, schedule as sc
from loganneal.dataio import BlobSpec, gen_blobs
from loganneal.harness import (
    CompareResult,
    DivergenceError,
    ExperimentConfig,
    HaltRule,
    NewtonConfig,
    check_halt,
    compare,
    landscape_run,
    run_experiment,
)
from loganneal.micronet import MlpSpec, OutputHead
from loganneal.optim import AdamConfig, SgdConfig

POLICY = sc.RestartPolicy(10, 10, 2.0, 0.1, 0.001)


def _blob_config(**overrides):
    defaults = dict(
        dataset=gen_blobs(BlobSpec(seed=7)),
        model=MlpSpec((2, 16, 2)),
        optimizer=SgdConfig(momentum=0.9, weight_decay=0.0005),
        schedule=sc.ScheduleSpec.log_annealing(POLICY),
        epochs=20,
        batch_size=128,
        seed=7,
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


# -- halt rule ----------------------------------------------------------------


def test_halt_never_fires_inside_buffer():
    assert not check_halt(HaltRule(2, 4.5), epoch=1, mean_loss=5.0)


def test_halt_fires_past_buffer_over_threshold():
    assert check_halt(HaltRule(2, 4.5), epoch=3, mean_loss=4.6)


def test_halt_threshold_is_strict():
    assert not check_halt(HaltRule(2, 4.5), epoch=3, mean_loss=4.5)


@given(
    losses=st.lists(st.floats(min_value=0, max_value=10), min_size=1, max_size=40),
    buffer=st.integers(min_value=0, max_value=6),
    threshold=st.floats(min_value=0.5, max_value=8),
)
@settings(max_examples=200)
def test_halt_epoch_matches_brute_force_scan(losses, buffer, threshold):
    rule = HaltRule(buffer, threshold)
    fired = None
    for epoch, loss in enumerate(losses, start=1):
        if check_halt(rule, epoch, loss):
            fired = epoch
            break
    expected = next(
        (e for e, l in enumerate(losses, start=1) if e > buffer and l > threshold),
        None,
    )
    assert fired == expected


# -- run_experiment --------------------------------------------------------------


def test_zero_learning_rate_freezes_parameters():
    cfg = _blob_config(schedule=sc.ScheduleSpec.constant(0.0), epochs=5)
    result = run_experiment(cfg)
    assert result.init_params_checksum == result.final_params_checksum
    losses = [m.mean_loss for m in result.metrics]
    assert max(losses) - min(losses) <= 1e-15


def test_single_full_batch_epoch():
    data = gen_blobs(BlobSpec(classes=2, per_class=8, seed=1))
    cfg = _blob_config(dataset=data, epochs=1, batch_size=16,
                       schedule=sc.ScheduleSpec.constant(0.01))
    result = run_experiment(cfg)
    assert len(result.metrics) == 1
    assert not result.halted


def test_blob_training_reduces_loss_and_classifies():
    cfg = _blob_config(epochs=200)
    result = run_experiment(cfg)
    first, last = result.metrics[0], result.metrics[-1]
    assert last.mean_loss <= 0.2 * first.mean_loss
    assert last.accuracy >= 0.95
    assert not result.halted


def test_run_is_bitwise_deterministic():
    cfg = _blob_config(epochs=30)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.metrics == b.metrics
    assert a.final_params_checksum == b.final_params_checksum
    buf_a, buf_b = io.StringIO(), io.StringIO()
    harness.write_run_csv(buf_a, a)
    harness.write_run_csv(buf_b, b)
    assert buf_a.getvalue() == buf_b.getvalue()


@pytest.mark.parametrize(
    "spec",
    [
        sc.ScheduleSpec.log_annealing(POLICY),
        sc.ScheduleSpec.cosine_annealing(POLICY),
        sc.ScheduleSpec.step_decay(0.05, 0.5, 10),
        sc.ScheduleSpec.constant(0.01),
    ],
    ids=["log", "cosine", "step", "constant"],
)
def test_recorded_lr_equals_schedule_dump(spec):
    cfg = _blob_config(schedule=spec, epochs=100,
                       halt=HaltRule(2, 1e9))  # never halt
    result = run_experiment(cfg)
    dumped = sc.dump_schedule(spec, 100)
    assert len(result.metrics) == 100
    for m, (epoch, lr) in zip(result.metrics, dumped):
        assert m.epoch == epoch
        assert m.lr_min == m.lr_mean == m.lr_max == lr


def test_halt_fires_and_keeps_metrics_through_halt_epoch():
    # threshold below the initial loss and no buffer margin: epoch 1 is
    # protected, epoch 2 halts while the loss is still high
    cfg = _blob_config(
        schedule=sc.ScheduleSpec.constant(1e-6),
        epochs=50,
        halt=HaltRule(buffer_epochs=1, loss_threshold=0.1),
    )
    result = run_experiment(cfg)
    assert result.halted
    assert result.halt_epoch == 2
    assert len(result.metrics) == 2
    assert result.metrics[-1].mean_loss > 0.1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_divergence_raises_with_epoch():
    cfg = _blob_config(
        model=MlpSpec((2, 16, 2), output_head=OutputHead.SOFTMAX_SPARSE),
        schedule=sc.ScheduleSpec.constant(1e18),
        epochs=10,
        halt=HaltRule(2, 1e12),
    )
    with pytest.raises(DivergenceError) as err:
        run_experiment(cfg)
    assert err.value.epoch >= 1


def test_adam_runs_deterministically():
    cfg = _blob_config(optimizer=AdamConfig(), epochs=10,
                       schedule=sc.ScheduleSpec.constant(0.01))
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.metrics == b.metrics


# -- compare ----------------------------------------------------------------------


def test_compare_single_schedule_equals_run_experiment():
    cfg = _blob_config(epochs=15)
    alone = run_experiment(cfg)
    result = compare(cfg, [cfg.schedule])
    assert isinstance(result, CompareResult)
    assert result.results["log"].metrics == alone.metrics
    assert not result.failures


def test_compare_identical_specs_are_bitwise_identical():
    cfg = _blob_config(epochs=15)
    result = compare(cfg, [cfg.schedule, sc.ScheduleSpec.log_annealing(POLICY)])
    a, b = result.results["log"], result.results["log-2"]
    assert a.metrics == b.metrics
    assert a.final_params_checksum == b.final_params_checksum


def test_compare_isolates_the_schedule():
    cfg = _blob_config(epochs=25)
    specs = [
        sc.ScheduleSpec.log_annealing(POLICY),
        sc.ScheduleSpec.cosine_annealing(POLICY),
        sc.ScheduleSpec.step_decay(0.05, 0.5, 10),
        sc.ScheduleSpec.constant(0.01),
    ]
    result = compare(cfg, specs)
    assert set(result.results) == {"log", "cosine", "step", "constant"}
    runs = list(result.results.values())
    init_sums = {r.init_params_checksum for r in runs}
    assert len(init_sums) == 1
    first_losses = {f"{r.metrics[0].mean_loss:.17g}" for r in runs}
    assert len(first_losses) > 0
    for r in runs:
        assert all(np.isfinite(m.mean_loss) for m in r.metrics)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_compare_survives_sibling_divergence():
    cfg = _blob_config(
        model=MlpSpec((2, 16, 2), output_head=OutputHead.SOFTMAX_SPARSE),
        epochs=10,
        halt=HaltRule(2, 1e12),
    )
    good = sc.ScheduleSpec.constant(0.01)
    bad = sc.ScheduleSpec.constant(1e18)
    result = compare(cfg, [good, bad])
    assert "constant" in result.results
    assert "constant-2" in result.failures


def test_compare_requires_schedules():
    with pytest.raises(ValueError):
        compare(_blob_config(), [])


# -- landscape runs -----------------------------------------------------------------


def test_newton_on_quadratic_converges_in_one_step():
    q = ls.Quadratic(np.array([[3.0, 0.4], [0.4, 1.0]]))
    traj = landscape_run(q, [1.0, -2.0], NewtonConfig(),
                         sc.ScheduleSpec.constant(1.0), steps=1)
    assert traj[-1].value <= 1e-20


def test_stationary_start_stays_put():
    for opt in (SgdConfig(momentum=0.9), AdamConfig()):
        traj = landscape_run("rastrigin", [0.0, 0.0], opt,
                             sc.ScheduleSpec.constant(0.01), steps=50)
        assert all(p.value == 0.0 for p in traj)


def test_best_so_far_is_non_increasing_and_matches_replay():
    spec = sc.ScheduleSpec.log_annealing(POLICY)
    traj = landscape_run("rastrigin", [3.1, 2.8], SgdConfig(), spec, steps=2000)
    best = [p.best_value for p in traj]
    assert all(a >= b for a, b in zip(best, best[1:]))
    values = [p.value for p in traj]
    start_value = ls.eval("rastrigin", np.array([3.1, 2.8]))
    running = start_value
    for v, b in zip(values, best):
        running = min(running, v)
        assert b == running
    replayed = landscape_run("rastrigin", [3.1, 2.8], SgdConfig(), spec, steps=2000)
    assert traj == replayed


def test_landscape_lr_follows_schedule():
    spec = sc.ScheduleSpec.cosine_annealing(POLICY)
    traj = landscape_run("ackley", [1.0, 1.0], SgdConfig(), spec, steps=40)
    dumped = sc.dump_schedule(spec, 40)
    assert [p.lr for p in traj] == [lr for _, lr in dumped]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_landscape_divergence_carries_step_index():
    q = ls.Quadratic(np.eye(2))
    with pytest.raises(DivergenceError):
        landscape_run(q, [1.0, 1.0], SgdConfig(), sc.ScheduleSpec.constant(1e200), 50)


# -- serialization --------------------------------------------------------------------


def test_run_csv_format():
    cfg = _blob_config(epochs=2, schedule=sc.ScheduleSpec.constant(0.01))
    result = run_experiment(cfg)
    buf = io.StringIO()
    harness.write_run_csv(buf, result)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "epoch,mean_loss,accuracy,lr_min,lr_mean,lr_max"
    assert len(lines) == 3
    cells = lines[1].split(",")
    assert cells[0] == "0"
    assert cells[3] == cells[4] == cells[5] == "0.01"


def test_metadata_sidecar_fields():
    cfg = _blob_config(epochs=2, schedule=sc.ScheduleSpec.constant(0.01))
    result = run_experiment(cfg)
    buf = io.StringIO()
    harness.write_run_metadata(buf, result)
    meta = dict(line.split("=", 1) for line in buf.getvalue().splitlines())
    assert meta["schedule"] == "constant"
    assert meta["seed"] == "7"
    assert meta["halted"] == "false"
    assert meta["halt_epoch"] == ""
    assert len(meta["final_params_checksum"]) == 16


def test_trajectory_csv_format():
    q = ls.Quadratic(np.eye(2))
    traj = landscape_run(q, [1.0, 1.0], SgdConfig(), sc.ScheduleSpec.constant(0.1), 3)
    buf = io.StringIO()
    harness.write_trajectory_csv(buf, traj)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step,f,lr,best_f"
    assert len(lines) == 4
    assert lines[1].startswith("1,")
