"""Command line entry point.

Every subcommand reads an optional TOML config (``--config``) whose keys are
the long flag names; flags given on the command line win.  Output is CSV on
stdout or in ``--out``.  Exit status: 0 ok, 2 bad input (any ValueError or
OSError), 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

import numpy as np

from .anytime import expand_instances, speedup_csv, speedup_factors
from .core import ExecutionModel, evaluate, expected_capped_times
from .data import (
    Dataset,
    InputError,
    load_anytime,
    load_features,
    load_runtimes,
    load_schedule,
    runtimes_csv,
    features_csv,
    anytime_csv,
    schedule_csv,
)
from .experiments import METHODS, ExperimentConfig, run_curve
from .experts import features_only_baseline, run_ogse
from .offline import OracleBudgetError, greedy_schedule, optimal_schedule_oracle
from .online import run_online
from .synth import SynthSpec, load_spec, synth_generate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("algoportfolio")


def _models(args, k: int):
    if args.model == "mixed":
        if not args.models:
            raise InputError("--model mixed needs --models, e.g. --models sr,restart")
        names = [m.strip() for m in args.models.split(",")]
        if len(names) != k:
            raise InputError(f"--models lists {len(names)} models for {k} heuristics")
        try:
            return tuple(ExecutionModel.parse(m) for m in names)
        except ValueError as e:
            raise InputError(str(e)) from None
    return ExecutionModel.parse(args.model)


def _dataset(args) -> Dataset:
    if not args.data:
        raise InputError("--data is required")
    ds = load_runtimes(args.data)
    if getattr(args, "features", None):
        ds = load_features(args.features, ds)
    return ds


def _weights(text: str | None) -> dict[str, float] | None:
    if not text:
        return None
    out = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise InputError(f"bad objective weight {part!r}; use name=value") from None
    return out


def _anytime(args):
    if not args.anytime:
        raise InputError("--anytime is required")
    data = load_anytime(args.anytime, _weights(args.objective_weights))
    cap = args.cap or data.limit
    if cap is None:
        cap = max((p.max_solved or 1) for o in data.objectives for p in o.times.values())
    return data, int(cap)


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float) -> str:
    return f"{x:.9f}"


def _split(n: int, m: int, seed: int):
    if not 0 < m < n:
        raise InputError(f"--train-size must lie in [1, {n - 1}]")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:m], perm[m:]


def _stream(ds: Dataset, horizon: int | None, seed: int):
    if horizon is None:
        return list(ds.instances)
    idx = np.random.default_rng([seed, 1]).integers(ds.n, size=horizon)
    return [ds.instances[i] for i in idx]


def cmd_greedy(args) -> None:
    ds = _dataset(args)
    cap = ds.cap(args.cap)
    models = _models(args, ds.k)
    schedule, trace = greedy_schedule(ds.instances, models, cap)
    rows = [
        (i, ds.heuristics[s.segment.heuristic], s.segment.tau, _f(s.density))
        for i, s in enumerate(trace.steps, 1)
    ]
    _emit(args, _csv(["step", "heuristic", "tau", "density"], rows))
    if args.schedule_out:
        with open(args.schedule_out, "w") as fh:
            fh.write(schedule_csv(schedule, ds.heuristics))


def cmd_eval(args) -> None:
    ds = _dataset(args)
    if not args.schedule:
        raise InputError("--schedule is required")
    cap = ds.cap(args.cap)
    schedule = load_schedule(args.schedule, ds.heuristics)
    times = expected_capped_times(schedule, ds.instances, cap)
    w = np.array([x.weight for x in ds.instances])
    rows = [(x.id, _f(t)) for x, t in zip(ds.instances, times)]
    text = _csv(["instance_id", "expected_capped_time"], rows)
    text += f"# weighted_average: {_f(float(np.dot(w, times) / w.sum()))}\n"
    _emit(args, text)


def cmd_oracle(args) -> None:
    ds = _dataset(args)
    cap = ds.cap(args.cap)
    models = _models(args, ds.k)
    try:
        schedule = optimal_schedule_oracle(ds.instances, models, cap, max_segments=args.max_segments)
    except OracleBudgetError as e:
        raise InputError(str(e)) from None
    cost = evaluate(schedule, ds.instances, cap)
    _emit(args, schedule_csv(schedule, ds.heuristics) + f"# total_cost: {_f(cost)}\n")


def cmd_online(args) -> None:
    ds = _dataset(args)
    cap = ds.cap(args.cap)
    stream = _stream(ds, args.horizon, args.seed)
    report = run_online(
        stream, cap, seed=args.seed, gamma=args.gamma, explore_c=args.explore_c, models=_models(args, ds.k)
    )
    _emit(args, report.to_csv())


def cmd_ogse(args) -> None:
    ds = _dataset(args)
    if not args.features:
        raise InputError("--features is required")
    cap = ds.cap(args.cap)
    stream = _stream(ds, args.horizon, args.seed)
    report = run_ogse(
        stream, ds.features(), cap, seed=args.seed, models=_models(args, ds.k),
        gamma=args.gamma, explore_c=args.explore_c,
    )
    _emit(args, report.to_csv())


def cmd_features_only(args) -> None:
    ds = _dataset(args)
    if not args.features:
        raise InputError("--features is required")
    cap = ds.cap(args.cap)
    m = args.train_size if args.train_size is not None else ds.n // 2
    tr, te = _split(ds.n, m, args.seed)
    train = [ds.instances[i] for i in tr]
    test = [ds.instances[i] for i in te]
    out = features_only_baseline(train, test, ds.features(), cap, seed=np.random.default_rng([args.seed, 2]))
    rows = [(iid, ds.heuristics[h], _f(t)) for iid, h, t in out]
    _emit(args, _csv(["instance_id", "heuristic", "expected_capped_time"], rows))


def cmd_anytime_expand(args) -> None:
    data, _ = _anytime(args)
    expanded = expand_instances(data.instances, data.objectives)
    ds = Dataset(expanded, data.heuristics, data.limit)
    _emit(args, runtimes_csv(ds, with_weights=True))


def cmd_speedup(args) -> None:
    data, cap = _anytime(args)
    rows = speedup_factors(data.instances, data.objectives, _models(args, len(data.heuristics)), cap)
    _emit(args, speedup_csv(rows, data.heuristics))


def cmd_synth(args) -> None:
    overrides = {
        "kind": args.kind,
        "n_instances": args.n_instances,
        "n_heuristics": args.n_heuristics,
        "clusters": args.clusters,
    }
    if args.spec:
        spec = load_spec(args.spec, **overrides)
    else:
        spec = SynthSpec(**{k: v for k, v in overrides.items() if v is not None})
    data = synth_generate(spec, args.seed)
    if spec.kind == "anytime":
        _emit(args, anytime_csv(data))
        return
    _emit(args, runtimes_csv(data))
    if args.features_out:
        with open(args.features_out, "w") as fh:
            fh.write(features_csv(data))


def cmd_curve(args) -> None:
    ds = _dataset(args)
    methods = tuple(m.strip() for m in args.methods.split(","))
    m_values = [int(v) for v in args.m_values.split(",")] if args.m_values else None
    cfg = ExperimentConfig(
        methods=methods, m_values=m_values, repetitions=args.reps, cap=args.cap,
        seed=args.seed, quantum=args.quantum, workers=args.workers,
    )
    report = run_curve(ds, cfg)
    _emit(args, report.aggregate_csv() if args.aggregate else report.to_csv())


def _common(p: argparse.ArgumentParser, data=True, model=True) -> None:
    p.add_argument("--config", help="TOML file of flag defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--cap", type=int, help="time cap B (default: censoring limit)")
    if data:
        p.add_argument("--data", help="runtimes CSV")
        p.add_argument("--features", help="features CSV")
    if model:
        p.add_argument("--model", choices=["sr", "restart", "mixed"], default="sr")
        p.add_argument("--models", help="comma separated per-heuristic models for --model mixed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="algoportfolio", description="Schedule a portfolio of heuristics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("greedy", help="fit the greedy schedule and print its trace")
    _common(p)
    p.add_argument("--schedule-out", help="also write the schedule CSV here")
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("eval", help="expected capped time of a schedule on a dataset")
    _common(p, model=False)
    p.add_argument("--schedule", help="schedule CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="exhaustive optimal schedule for tiny inputs")
    _common(p)
    p.add_argument("--max-segments", type=int, default=6)
    p.set_defaults(func=cmd_oracle)

    for name, func in (("online", cmd_online), ("ogse", cmd_ogse)):
        p = sub.add_parser(name, help=f"play the {name} learner over an instance stream")
        _common(p)
        p.add_argument("--horizon", type=int, help="draw this many instances i.i.d. (default: file order)")
        p.add_argument("--gamma", type=float, help="exploration probability")
        p.add_argument("--explore-c", type=float, default=1.0)
        p.set_defaults(func=func)

    p = sub.add_parser("features-only", help="single heuristic chosen from features")
    _common(p, model=False)
    p.add_argument("--train-size", type=int, help="training instances (default n/2)")
    p.set_defaults(func=cmd_features_only)

    for name, func in (("anytime-expand", cmd_anytime_expand), ("speedup", cmd_speedup)):
        p = sub.add_parser(name, help="anytime objectives as weighted instances" if name == "anytime-expand"
                           else "per-objective speedup over the best single heuristic")
        _common(p, data=False, model=name == "speedup")
        p.add_argument("--anytime", help="anytime CSV")
        p.add_argument("--objective-weights", help="e.g. feasible=0.5,optimal=0.25,proof=0.25")
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="generate synthetic data")
    _common(p, data=False, model=False)
    p.add_argument("--spec", help="TOML generator spec")
    p.add_argument("--kind", choices=["decision", "anytime"])
    p.add_argument("--n-instances", type=int)
    p.add_argument("--n-heuristics", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--features-out", help="write the features CSV here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("curve", help="average test time as a function of training size")
    _common(p, model=False)
    p.add_argument("--methods", default="greedy-sr,greedy-restart,best-single,parallel",
                   help=f"comma separated subset of {','.join(METHODS)}")
    p.add_argument("--m-values", help="comma separated training sizes (default: powers of 2 below n)")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--quantum", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--aggregate", action="store_true", help="print per-(method, m) means only")
    p.set_defaults(func=cmd_curve)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise InputError(f"{args.config}: {e}") from None
    cfg = {k.replace("-", "_"): v for k, v in raw.items()}
    unknown = sorted(set(cfg) - set(vars(args)))
    if unknown:
        raise InputError(f"{args.config}: unknown keys {unknown}")
    for v in ("methods", "m_values", "models"):
        if isinstance(cfg.get(v), list):
            cfg[v] = ",".join(str(x) for x in cfg[v])
    # re-parse so that explicit flags override the file
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as e:
        return int(e.code or 0)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
