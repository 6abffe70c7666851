"""Command-line surface.

Subcommands::

    loganneal schedule dump   - materialize a schedule as CSV (+ optional SVG)
    loganneal landscape bench - descend a test surface, write the trajectory
    loganneal train           - train the small dense net on a blob/CIFAR task
    loganneal compare         - train one run per schedule, schedule varying only
    loganneal cifar inspect   - summarize a CIFAR-10 binary file

Flag defaults follow the reported training configuration where one exists
(momentum 0.9, weight decay 0.0005, dampening 0, eta0 0.0001, batch 128,
halt threshold 4.5, halt buffer 2) and the reference schedule shape
otherwise (initial decay 1, interval 1, multiplier 1.5, restart lr 0.05,
min decay lr 0.001, warmup 1 epoch from 0.0001). Step-decay has no reported
shape, so ``--gamma``/``--step-size`` must be given explicitly.

Exit codes: 0 success, 2 usage error, 3 data/parse error, 4 divergence.
The ``ANNEAL_SEED`` environment variable overrides the default seed when
``--seed`` is not passed.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from loganneal import dataio, harness, landscape, micronet, schedule, svgplot
from loganneal.optim import AdamConfig, SgdConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

SCHEDULE_KINDS = ("log", "cosine", "step", "constant")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("schedule")
    g.add_argument("--kind", choices=SCHEDULE_KINDS, default="log", help="schedule kind")
    g.add_argument("--eta-min", type=float, default=0.001, help="minimum decay lr")
    g.add_argument("--restart-lr", type=float, default=0.05, help="lr range top at each restart")
    g.add_argument("--initial-decay", type=int, default=1, help="length of cycle 0 in epochs")
    g.add_argument("--interval", type=int, default=1, help="base restart interval in epochs")
    g.add_argument("--mult", type=float, default=1.5, help="restart interval multiplier")
    g.add_argument("--warmup", type=int, default=1, help="warmup epochs before cycle 0")
    g.add_argument("--warmup-start", type=float, default=0.0001, help="warmup starting lr")
    g.add_argument(
        "--log-base",
        default="range",
        help="log base rule: 'range' (1/(max-min)), 'min' (1/min), or a number",
    )
    g.add_argument("--eta0", type=float, default=0.0001, help="lr for constant/step kinds")
    g.add_argument("--gamma", type=float, default=None, help="step-decay factor in (0,1)")
    g.add_argument("--step-size", type=int, default=None, help="epochs between step decays")


def _add_optimizer_flags(p: argparse.ArgumentParser, allow_newton: bool = False) -> None:
    g = p.add_argument_group("optimizer")
    choices = ["sgd", "adam"] + (["newton"] if allow_newton else [])
    g.add_argument("--optimizer", choices=choices, default="sgd", help="update rule")
    g.add_argument("--momentum", type=float, default=0.9, help="SGD momentum")
    g.add_argument("--dampening", type=float, default=0.0, help="SGD dampening")
    g.add_argument("--weight-decay", type=float, default=0.0005, help="coupled weight decay")
    g.add_argument("--beta1", type=float, default=0.9, help="Adam first-moment decay")
    g.add_argument("--beta2", type=float, default=0.999, help="Adam second-moment decay")
    g.add_argument("--eps", type=float, default=1e-8, help="Adam denominator epsilon")


def _add_task_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("task")
    g.add_argument("--cifar", metavar="PATH", default=None, help="train on a CIFAR-10 .bin file instead of blobs")
    g.add_argument("--classes", type=int, default=2, help="blob classes")
    g.add_argument("--per-class", type=int, default=500, help="blob points per class")
    g.add_argument("--dim", type=int, default=2, help="blob feature dimension")
    g.add_argument("--separation", type=float, default=4.0, help="blob center separation")
    g.add_argument("--sigma", type=float, default=1.0, help="blob noise sigma")
    g.add_argument("--data-seed", type=int, default=None, help="blob seed (defaults to --seed)")
    g.add_argument("--hidden", default="16", help="comma-separated hidden layer sizes")
    g.add_argument(
        "--head",
        choices=["sigmoid", "softmax"],
        default="sigmoid",
        help="output head: independent sigmoids + categorical CE, or softmax + sparse CE",
    )
    g.add_argument("--activation", choices=["relu", "leaky_relu"], default="relu",
                   help="hidden activation")
    g.add_argument("--epochs", type=int, default=60, help="training epochs")
    g.add_argument("--batch-size", type=int, default=128, help="minibatch size")
    g.add_argument("--halt-threshold", type=float, default=4.5,
                   help="mean loss above this halts training")
    g.add_argument("--halt-buffer", type=int, default=2,
                   help="epochs exempt from the halt rule")


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ANNEAL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"ANNEAL_SEED must be an integer, got {env!r}") from None
    return 0


def _parse_log_base(text: str) -> schedule.LogBaseRule:
    if text == "range":
        return schedule.LogBaseRule.range_reciprocal()
    if text == "min":
        return schedule.LogBaseRule.min_reciprocal()
    try:
        return schedule.LogBaseRule.explicit(float(text))
    except ValueError:
        raise UsageError(
            f"--log-base must be 'range', 'min', or a number, got {text!r}"
        ) from None


def _schedule_from_args(args, kind: str | None = None) -> schedule.ScheduleSpec:
    kind = kind or args.kind
    try:
        if kind in ("log", "cosine"):
            policy = schedule.RestartPolicy(
                initial_decay_epochs=args.initial_decay,
                restart_interval=args.interval,
                restart_interval_multiplier=args.mult,
                restart_lr=args.restart_lr,
                min_decay_lr=args.eta_min,
            )
            warmup = schedule.WarmupConfig(args.warmup, args.warmup_start)
            if kind == "log":
                return schedule.ScheduleSpec.log_annealing(
                    policy, warmup, _parse_log_base(args.log_base)
                )
            return schedule.ScheduleSpec.cosine_annealing(policy, warmup)
        if kind == "step":
            if args.gamma is None or args.step_size is None:
                raise UsageError("step decay requires explicit --gamma and --step-size")
            return schedule.ScheduleSpec.step_decay(args.eta0, args.gamma, args.step_size)
        return schedule.ScheduleSpec.constant(args.eta0)
    except ValueError as err:
        raise UsageError(str(err)) from None


def _optimizer_from_args(args):
    if args.optimizer == "sgd":
        return SgdConfig(
            momentum=args.momentum,
            dampening=args.dampening,
            weight_decay=args.weight_decay,
        )
    if args.optimizer == "adam":
        return AdamConfig(
            beta1=args.beta1,
            beta2=args.beta2,
            epsilon=args.eps,
            weight_decay=args.weight_decay,
        )
    return harness.NewtonConfig()


def _dataset_from_args(args, seed: int) -> dataio.Dataset:
    if args.cifar is not None:
        try:
            raw = Path(args.cifar).read_bytes()
        except OSError as err:
            raise DataError(str(err)) from None
        try:
            return dataio.cifar_to_dataset(dataio.parse_cifar10(raw))
        except (dataio.CifarFormatError, ValueError) as err:
            raise DataError(str(err)) from None
    spec = dataio.BlobSpec(
        classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        center_separation=args.separation,
        noise_sigma=args.sigma,
        seed=args.data_seed if args.data_seed is not None else seed,
    )
    return dataio.gen_blobs(spec)


def _mlp_spec_from_args(args, data: dataio.Dataset) -> micronet.MlpSpec:
    hidden = [int(h) for h in args.hidden.split(",") if h.strip()]
    head = (
        micronet.OutputHead.SIGMOID_CATEGORICAL
        if args.head == "sigmoid"
        else micronet.OutputHead.SOFTMAX_SPARSE
    )
    return micronet.MlpSpec(
        layer_sizes=(data.features.shape[1], *hidden, data.n_classes),
        hidden_activation=micronet.Activation(args.activation),
        output_head=head,
    )


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# -- subcommands -----------------------------------------------------------------


def cmd_schedule_dump(args) -> int:
    spec = _schedule_from_args(args)
    rows = schedule.dump_schedule(spec, args.epochs)
    out = Path(args.output)
    buf = io.StringIO()
    schedule.write_schedule_csv(buf, rows)
    _write_text(out, buf.getvalue())
    print(f"wrote {len(rows)} epochs to {out}")
    if args.svg:
        epochs = [float(e) for e, _ in rows]
        lrs = [lr for _, lr in rows]
        svg = svgplot.line_chart(
            [(spec.kind.value, epochs, lrs)],
            title="Learning rate schedule",
            xlabel="epoch",
            ylabel="lr",
        )
        svg_path = out.with_suffix(".svg")
        _write_text(svg_path, svg)
        print(f"wrote {svg_path}")
    return EXIT_OK


def cmd_landscape_bench(args) -> int:
    try:
        start = np.array([float(v) for v in args.start.split(",")])
    except ValueError:
        raise UsageError(f"--start must be comma-separated numbers, got {args.start!r}")
    if args.function == "quadratic":
        kind = landscape.Quadratic(np.eye(start.shape[0]))
    else:
        kind = args.function
    spec = _schedule_from_args(args)
    opt = _optimizer_from_args(args)
    try:
        points = harness.landscape_run(kind, start, opt, spec, args.steps)
    except harness.DivergenceError as err:
        print(f"diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    out = Path(args.output)
    buf = io.StringIO()
    harness.write_trajectory_csv(buf, points)
    _write_text(out, buf.getvalue())
    print(f"wrote {len(points)} steps to {out} (final f={points[-1].value:.6g}, "
          f"best f={points[-1].best_value:.6g})")
    if args.svg:
        xs = [float(p.step) for p in points]
        svg = svgplot.line_chart(
            [("f", xs, [p.value for p in points]),
             ("best f", xs, [p.best_value for p in points])],
            title=f"{args.function} descent",
            xlabel="step",
            ylabel="objective",
        )
        svg_path = out.with_suffix(".svg")
        _write_text(svg_path, svg)
        print(f"wrote {svg_path}")
    return EXIT_OK


def _experiment_config(args, seed: int) -> harness.ExperimentConfig:
    data = _dataset_from_args(args, seed)
    return harness.ExperimentConfig(
        dataset=data,
        model=_mlp_spec_from_args(args, data),
        optimizer=_optimizer_from_args(args),
        schedule=_schedule_from_args(args),
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=seed,
        halt=harness.HaltRule(args.halt_buffer, args.halt_threshold),
    )


def _write_run(outdir: Path, name: str, result: harness.RunResult) -> None:
    buf = io.StringIO()
    harness.write_run_csv(buf, result)
    _write_text(outdir / f"{name}.csv", buf.getvalue())
    buf = io.StringIO()
    harness.write_run_metadata(buf, result)
    _write_text(outdir / f"{name}.meta", buf.getvalue())


def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    cfg = _experiment_config(args, seed)
    try:
        result = harness.run_experiment(cfg)
    except harness.DivergenceError as err:
        print(f"diverged: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    outdir = Path(args.outdir)
    name = cfg.schedule.kind.value
    _write_run(outdir, name, result)
    last = result.metrics[-1]
    status = f"halted at epoch {result.halt_epoch}" if result.halted else "completed"
    print(
        f"{status}: {len(result.metrics)} epochs, final loss {last.mean_loss:.6g}, "
        f"accuracy {last.accuracy:.4f} -> {outdir / (name + '.csv')}"
    )
    if args.svg:
        xs = [float(m.epoch) for m in result.metrics]
        svg = svgplot.line_chart(
            [(name, xs, [m.mean_loss for m in result.metrics])],
            title="Training loss",
            xlabel="epoch",
            ylabel="mean loss",
        )
        _write_text(outdir / f"{name}.svg", svg)
        print(f"wrote {outdir / (name + '.svg')}")
    return EXIT_OK


def cmd_compare(args) -> int:
    seed = _resolve_seed(args)
    names = [s.strip() for s in args.schedules.split(",") if s.strip()]
    if not names:
        raise UsageError("--schedules must name at least one schedule")
    for n in names:
        if n not in SCHEDULE_KINDS:
            raise UsageError(
                f"unknown schedule {n!r}; choose from {', '.join(SCHEDULE_KINDS)}"
            )
    specs = [_schedule_from_args(args, kind=n) for n in names]
    cfg = _experiment_config(args, seed)
    outcome = harness.compare(cfg, specs)
    outdir = Path(args.outdir)
    series = []
    for name, result in outcome.results.items():
        _write_run(outdir, name, result)
        xs = [float(m.epoch) for m in result.metrics]
        series.append((name, xs, [m.mean_loss for m in result.metrics]))
        last = result.metrics[-1]
        status = f"halted@{result.halt_epoch}" if result.halted else "ok"
        print(f"{name}: {status}, final loss {last.mean_loss:.6g}, "
              f"accuracy {last.accuracy:.4f}")
    for name, err in outcome.failures.items():
        print(f"{name}: diverged ({err})", file=sys.stderr)
    if series:
        svg = svgplot.line_chart(
            series, title="Mean loss per epoch", xlabel="epoch", ylabel="mean loss"
        )
        _write_text(outdir / "compare.svg", svg)
        print(f"wrote {outdir / 'compare.svg'}")
    if outcome.failures and not outcome.results:
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_cifar_inspect(args) -> int:
    path = Path(args.path)
    try:
        raw = path.read_bytes()
    except OSError as err:
        raise DataError(str(err)) from None
    try:
        records = dataio.parse_cifar10(raw)
    except dataio.CifarFormatError as err:
        raise DataError(str(err)) from None
    print(f"{len(records)} records")
    if records:
        hist = Counter(r.label for r in records)
        for label in sorted(hist):
            print(f"label {label}: {hist[label]}")
        first = records[0]
        digest = hashlib.blake2b(
            bytes([first.label]) + first.pixels, digest_size=8
        ).hexdigest()
        print(f"first record checksum: {digest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loganneal",
        description="Learning-rate schedules with warm restarts: dump, benchmark, train, compare.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = dict(formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    p_sched = sub.add_parser("schedule", help="schedule inspection", **fmt)
    sched_sub = p_sched.add_subparsers(dest="subcommand", required=True)
    p_dump = sched_sub.add_parser("dump", help="write a schedule as CSV", **fmt)
    _add_schedule_flags(p_dump)
    p_dump.add_argument("--epochs", type=int, default=60, help="epochs to dump")
    p_dump.add_argument("-o", "--output", required=True, help="CSV output path")
    p_dump.add_argument("--svg", action="store_true", help="also write a line plot")
    p_dump.set_defaults(func=cmd_schedule_dump)

    p_land = sub.add_parser("landscape", help="test-surface benchmarks", **fmt)
    land_sub = p_land.add_subparsers(dest="subcommand", required=True)
    p_bench = land_sub.add_parser("bench", help="descend an analytic surface", **fmt)
    p_bench.add_argument(
        "--function",
        choices=["ackley", "griewank", "rastrigin", "quadratic"],
        default="rastrigin",
        help="surface to descend (quadratic uses the identity matrix)",
    )
    p_bench.add_argument("--start", default="3.1,2.8", help="comma-separated start point")
    p_bench.add_argument("--steps", type=int, default=2000, help="optimizer steps")
    _add_schedule_flags(p_bench)
    _add_optimizer_flags(p_bench, allow_newton=True)
    p_bench.add_argument("-o", "--output", required=True, help="trajectory CSV path")
    p_bench.add_argument("--svg", action="store_true", help="also write a line plot")
    p_bench.set_defaults(func=cmd_landscape_bench)

    p_train = sub.add_parser("train", help="train the dense net on one schedule", **fmt)
    _add_schedule_flags(p_train)
    _add_optimizer_flags(p_train)
    _add_task_flags(p_train)
    p_train.add_argument("--seed", type=int, default=None,
                         help="experiment seed (ANNEAL_SEED, then 0, when omitted)")
    p_train.add_argument("--outdir", required=True, help="directory for CSV/metadata")
    p_train.add_argument("--svg", action="store_true", help="also write a loss plot")
    p_train.set_defaults(func=cmd_train)

    p_cmp = sub.add_parser("compare", help="one run per schedule, same seed and data", **fmt)
    p_cmp.add_argument(
        "--schedules",
        default="log,cosine,step,constant",
        help="comma-separated schedule kinds to compare",
    )
    _add_schedule_flags(p_cmp)
    _add_optimizer_flags(p_cmp)
    _add_task_flags(p_cmp)
    p_cmp.add_argument("--seed", type=int, default=None,
                       help="experiment seed (ANNEAL_SEED, then 0, when omitted)")
    p_cmp.add_argument("--outdir", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_cifar = sub.add_parser("cifar", help="CIFAR-10 binary utilities", **fmt)
    cifar_sub = p_cifar.add_subparsers(dest="subcommand", required=True)
    p_inspect = cifar_sub.add_parser("inspect", help="summarize a .bin file", **fmt)
    p_inspect.add_argument("path")
    p_inspect.set_defaults(func=cmd_cifar_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
