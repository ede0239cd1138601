"""Command-line front end.

One binary with subcommands (split / tune / calibrate / evaluate / attention
/ simulate) wiring the library into the standard experimental protocol. All
randomness is seed-controlled through flags, so every command is
deterministic given its arguments, and JSON outputs are byte-stable across
runs. Exit codes: 0 success, 1 I/O failure, 2 validation failure.

Defaults follow the replication protocol: alpha 0.1, the 8-point penalty
grid, the 6-range size strata, k_reg fixed at 1.

The ``STRATACONF_THREADS`` environment variable sets the worker count for
per-grid-point tuning evaluations (default 1).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .conformal import METHODS, MethodParams, calibrate, predict_all
from .data import (
    COARSE_STRATA,
    DEFAULT_STRATA,
    FINE_STRATA,
    LogitDataset,
    PredictionSet,
    SplitSpec,
    StrataSpec,
    _atomic_write_text,
    _split_indices,
    load_logit_csv,
    read_prediction_sets,
    write_logit_csv,
    write_prediction_sets,
)
from .errors import SplitError
from .metrics import METHOD_LABELS, ProtocolConfig, ablate, compare_methods, evaluate, format_table
from .attention import attention_report, read_gcam
from .scoring import fit_temperature
from .synthetic import GeneratorConfig, coverage_trial, generate
from .tuning import (
    COARSE_LAMBDA_GRID,
    DEFAULT_LAMBDA_GRID,
    FINE_LAMBDA_GRID,
    LambdaGrid,
    select_k_reg,
    tune_lambda_adaptive,
    tune_lambda_size,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2

_STRATA_PRESETS = {"default": DEFAULT_STRATA, "coarse": COARSE_STRATA, "fine": FINE_STRATA}
_GRID_PRESETS = {"default": DEFAULT_LAMBDA_GRID, "coarse": COARSE_LAMBDA_GRID,
                 "fine": FINE_LAMBDA_GRID}


# ---------------------------------------------------------------------------
# Flag parsing helpers
# ---------------------------------------------------------------------------

def parse_fractions(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--fractions needs three comma-separated values, got {text!r}")
    return tuple(Fraction(p.strip()) if "/" in p else Fraction(str(float(p))) for p in parts)


def parse_strata(text: str) -> StrataSpec:
    preset = _STRATA_PRESETS.get(text)
    if preset is not None:
        return preset
    ranges = []
    for segment in text.split(","):
        segment = segment.strip()
        if segment.endswith("+"):
            ranges.append((int(segment[:-1]), None))
        elif "-" in segment:
            lo, hi = segment.split("-")
            ranges.append((int(lo), int(hi)))
        else:
            ranges.append((int(segment), int(segment)))
    return StrataSpec(tuple(ranges))


def parse_grid(text: str) -> LambdaGrid:
    preset = _GRID_PRESETS.get(text)
    if preset is not None:
        return preset
    return LambdaGrid(tuple(float(v) for v in text.split(",")))


def parse_k_reg(text: str):
    return "auto" if text == "auto" else int(text)


def resolve_temperature(text: str, data: LogitDataset | None) -> float:
    """--temp accepts 'fit', 'fixed:T', or a bare number."""
    if text == "fit":
        if data is None:
            raise ValueError("--temp fit requires a dataset to fit on")
        return fit_temperature(data)
    if text.startswith("fixed:"):
        text = text[len("fixed:"):]
    value = float(text)
    if value <= 0:
        raise ValueError(f"temperature must be > 0, got {value}")
    return value


def _dump_json(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        _atomic_write_text(out_path, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_split(args) -> int:
    fractions = parse_fractions(args.fractions)
    spec = SplitSpec(fractions, args.seed)
    data = load_logit_csv(args.input)
    parts = _split_indices(data.n_samples, spec)
    names = ("tune", "cal", "test")
    outputs = {}
    for name, frac, idx in zip(names, spec.fractions, parts):
        if frac == 0:
            continue  # zero-fraction partitions are omitted, not errors
        if idx.size == 0:
            raise SplitError(f"empty {name} partition for fractions {spec.fractions}")
        path = f"{args.out_dir}/{args.prefix}{name}.csv"
        write_logit_csv(data.take(idx), path)
        outputs[name] = {"path": path, "n": int(idx.size)}
    manifest = {
        "input": args.input,
        "seed": args.seed,
        "fractions": [str(f) for f in spec.fractions],
        "n_samples": data.n_samples,
        "n_classes": data.n_classes,
        "shuffle": "pcg64-permutation",
        "outputs": outputs,
    }
    _atomic_write_text(f"{args.out_dir}/{args.prefix}manifest.json",
                       json.dumps(manifest, indent=2) + "\n")
    sys.stdout.write(json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def cmd_tune(args) -> int:
    tune = load_logit_csv(args.input)
    grid = parse_grid(args.grid)
    strata = parse_strata(args.strata)
    temperature = resolve_temperature(args.temp, tune)
    k_reg = select_k_reg(tune, parse_k_reg(args.k_reg), args.alpha)
    params = MethodParams("raps", alpha=args.alpha, temperature=temperature)
    if args.criterion == "size":
        report = tune_lambda_size(tune, grid, k_reg, params, args.inner_seed,
                                  strata, args.min_count)
    else:
        report = tune_lambda_adaptive(tune, grid, k_reg, params, strata,
                                      args.min_count, args.inner_seed)
    _dump_json(report.to_jsonable(), args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cal = load_logit_csv(args.input)
    temperature = resolve_temperature(args.temp, cal)
    params = MethodParams(args.method, alpha=args.alpha, lam=args.lam,
                          k_reg=args.k_reg, temperature=temperature)
    artifact = calibrate(cal, params, parse_strata(args.strata))
    _dump_json(artifact.to_jsonable(), args.out)
    return EXIT_OK


def _force_top1(sets, logits):
    out = []
    for s, row in zip(sets, logits):
        if s.size == 0:
            out.append(PredictionSet.from_classes(s.sample_index,
                                                  [int(np.argmax(row))], s.label))
        else:
            out.append(s)
    return out


def cmd_evaluate(args) -> int:
    strata = parse_strata(args.strata)
    config = ProtocolConfig(
        alpha=args.alpha,
        grid=parse_grid(args.grid),
        strata=strata,
        k_reg=parse_k_reg(args.k_reg),
        min_count=args.min_count,
        inner_split_seed=args.inner_seed,
    )
    cal = load_logit_csv(args.cal)
    test = load_logit_csv(args.test)

    if (args.all or args.ablate) and not args.tune:
        raise ValueError("--tune is required with --all or --ablate")

    if args.ablate:
        tune = load_logit_csv(args.tune)
        if args.ablate == "strata":
            variants = [("coarse", COARSE_STRATA), ("default", DEFAULT_STRATA),
                        ("fine", FINE_STRATA)]
        else:
            variants = [("coarse", COARSE_LAMBDA_GRID), ("default", DEFAULT_LAMBDA_GRID),
                        ("fine", FINE_LAMBDA_GRID)]
        rows = ablate(tune, cal, test, args.ablate, variants, config)
        payload = {"axis": args.ablate, "alpha": args.alpha,
                   "rows": [r.to_jsonable() for r in rows]}
        header = f"{'Variant':<12}{'Lambda':>10}{'Coverage':>10}{'Avg Size':>10}{'Strat. Min.':>13}"
        lines = [header, "-" * len(header)]
        for r in rows:
            strat = f"{r.strat_min:.3f}" if r.strat_min is not None else "n/a"
            lines.append(f"{r.variant:<12}{r.chosen_lambda:>10.5f}{r.coverage:>10.4f}"
                         f"{r.avg_size:>10.3f}{strat:>13}")
        sys.stdout.write("\n".join(lines) + "\n")
        if args.out:
            _dump_json(payload, args.out)
        return EXIT_OK

    if args.all:
        tune = load_logit_csv(args.tune)
        rows = compare_methods(tune, cal, test, config)
        payload = {"alpha": args.alpha, "n_tune": tune.n_samples,
                   "n_cal": cal.n_samples, "n_test": test.n_samples,
                   "rows": [report.to_jsonable(name) for name, report in rows]}
        sys.stdout.write(format_table(rows) + "\n")
        if args.out:
            _dump_json(payload, args.out)
        return EXIT_OK

    if not args.method:
        raise ValueError("choose --all, --ablate, or --method")
    k_reg = parse_k_reg(args.k_reg)
    if k_reg == "auto":
        if not args.tune:
            raise ValueError("--k-reg auto requires --tune")
        k_reg = select_k_reg(load_logit_csv(args.tune), "auto", args.alpha)
    temperature = resolve_temperature(args.temp, cal)
    params = MethodParams(args.method, alpha=args.alpha, lam=args.lam,
                          k_reg=k_reg, temperature=temperature)
    artifact = calibrate(cal, params, strata)
    sets = predict_all(test, artifact)
    if args.force_top1:
        sets = _force_top1(sets, test.logits)
    if args.sets_out:
        write_prediction_sets(sets, args.sets_out)
    report = evaluate(sets, test.labels, strata, args.min_count)
    label = METHOD_LABELS.get(args.method, args.method)
    sys.stdout.write(format_table([(label, report)]) + "\n")
    if args.out:
        _dump_json(report.to_jsonable(label), args.out)
    return EXIT_OK


def cmd_attention(args) -> int:
    maps = read_gcam(args.maps)
    sets = read_prediction_sets(args.sets)
    report = attention_report(maps, sets)
    _dump_json(report.to_jsonable(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    pairs = []
    for text in args.confuse or []:
        a, b, strength = text.split(":")
        pairs.append((int(a), int(b), float(strength)))
    config = GeneratorConfig(
        n_classes=args.classes,
        n_samples=args.samples,
        seed=args.seed,
        sharpness=args.sharpness,
        confusion_pairs=tuple(pairs),
        noise_sd=args.noise_sd,
        ambiguous_fraction=args.ambiguous_fraction,
    )
    if args.trials:
        params = MethodParams(args.method, alpha=args.alpha, lam=args.lam,
                              k_reg=args.k_reg)
        mean, per_trial = coverage_trial(config, params, args.n_cal, args.n_test,
                                         args.trials)
        payload = {
            "method": args.method,
            "alpha": args.alpha,
            "n_cal": args.n_cal,
            "n_test": args.n_test,
            "n_trials": args.trials,
            "mean_coverage": mean,
            "min_coverage": min(per_trial),
            "max_coverage": max(per_trial),
            "sd_coverage": float(np.std(per_trial)),
        }
        sys.stdout.write(
            f"mean coverage {mean:.4f} over {args.trials} trials "
            f"(sd {payload['sd_coverage']:.4f}, "
            f"min {payload['min_coverage']:.4f}, max {payload['max_coverage']:.4f})\n"
        )
        if args.out:
            _dump_json(payload, args.out)
        return EXIT_OK
    if not args.out:
        raise ValueError("dataset generation requires --out")
    write_logit_csv(generate(config), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common_tuning_flags(parser, with_criterion=False):
    parser.add_argument("--alpha", type=float, default=0.1)
    parser.add_argument("--strata", default="default",
                        help="default|coarse|fine or ranges like 0-1,2-3,4+")
    parser.add_argument("--grid", default="default",
                        help="default|coarse|fine or comma-separated values")
    parser.add_argument("--k-reg", dest="k_reg", default="1",
                        help="integer or 'auto'")
    parser.add_argument("--min-count", dest="min_count", type=int, default=1)
    parser.add_argument("--inner-seed", dest="inner_seed", type=int, default=0)
    if with_criterion:
        parser.add_argument("--criterion", choices=("size", "adaptive"),
                            default="adaptive")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strataconf",
        description="Conformal prediction sets with stratified-coverage tuning",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="shuffle and split a logit CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", dest="out_dir", default=".")
    p.add_argument("--prefix", default="")
    p.add_argument("--fractions", required=True, help="tune,cal,test summing to 1")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("tune", help="select the RAPS penalty on a tuning set")
    p.add_argument("--in", dest="input", required=True)
    _add_common_tuning_flags(p, with_criterion=True)
    p.add_argument("--temp", default="fixed:1", help="'fit', 'fixed:T', or a number")
    p.add_argument("--out")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("calibrate", help="freeze a calibration artifact")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--k-reg", dest="k_reg", type=int, default=1)
    p.add_argument("--temp", default="fixed:1")
    p.add_argument("--strata", default="default")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="calibrate, predict, and report metrics")
    p.add_argument("--tune", help="tuning CSV (required with --all / --ablate)")
    p.add_argument("--cal", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--all", action="store_true", help="run the five-method protocol")
    p.add_argument("--ablate", choices=("strata", "grid"))
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--temp", default="fixed:1")
    p.add_argument("--force-top1", dest="force_top1", action="store_true",
                   help="replace empty sets with the argmax class")
    p.add_argument("--sets-out", dest="sets_out")
    p.add_argument("--out")
    _add_common_tuning_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("attention", help="entropy statistics for GCAM heatmaps")
    p.add_argument("--maps", required=True, help="GCAM binary file")
    p.add_argument("--sets", required=True, help="prediction-set JSON-lines file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_attention)

    p = sub.add_parser("simulate", help="generate synthetic logits or run coverage trials")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sharpness", type=float, default=5.0)
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=1.0)
    p.add_argument("--confuse", action="append", metavar="A:B:STRENGTH")
    p.add_argument("--ambiguous-fraction", dest="ambiguous_fraction",
                   type=float, default=0.0)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--method", choices=METHODS, default="lac")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--k-reg", dest="k_reg", type=int, default=1)
    p.add_argument("--n-cal", dest="n_cal", type=int, default=500)
    p.add_argument("--n-test", dest="n_test", type=int, default=500)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # covers all package validation errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
