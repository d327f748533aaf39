"""Command-line harness: single runs, parameter sweeps and the full comparison."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .als import AlsConfig, als_train
from .anneal import AnnealConfig, anneal, linear_cooling_for
from .dataio import (
    BenchRow,
    dataset_checksum,
    format_params,
    make_synthetic,
    parse_movielens_1m,
    parse_movielens_100k,
    write_bench_csv,
    write_manifest,
    write_split,
)
from .evaluation import baseline_rmse, rmse, split_holdout
from .sampling import RNG_ALGORITHM, make_walk
from .sgd import SgdConfig, sgd_train
from .wnmf import WnmfConfig, wnmf_train

log = logging.getLogger("annealmf")

SOLVERS = ("sa-levy", "sa-gaussian", "sgd", "als", "wnmf")
TABLE4 = ("sa-levy", "sa-gaussian")
TABLE5 = ("sa-levy", "sgd", "wnmf", "als")
SWEEP_AXES = ("iterations", "rank", "step-size")

# Small hyperparameter grids for the baselines; chosen on a validation split of train.
BASELINE_GRID = {
    "sgd": [{"learning_rate": lr, "regularization": reg} for lr in (0.005, 0.01) for reg in (0.02, 0.05)],
    "als": [{"regularization": reg} for reg in (0.05, 1.0, 5.0, 20.0)],
    "wnmf": [{"iterations": it} for it in (25, 50, 100)],
}

# Manifest keys that describe where output goes, not what was computed.
_NOT_REPLAYED = {"out", "config", "command", "timing", "verbose"}


class CliError(Exception):
    pass


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.replace(";", ",").split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(s) for s in text.replace(";", ",").split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"values must be comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("at least one value is required")
    return vals


def _add_common(p: argparse.ArgumentParser) -> None:
    data = p.add_argument_group("data")
    data.add_argument("--data", help="ratings file, or M,N,K,NOISE for --format synthetic")
    data.add_argument("--format", choices=["ml1m", "ml100k", "synthetic"], default=None)
    data.add_argument("--synthetic", nargs=4, metavar=("M", "N", "K", "NOISE"),
                      help="generate a seeded low-rank-plus-noise dataset")
    data.add_argument("--density", type=float, default=0.3, help="observed fraction for synthetic data")
    data.add_argument("--data-seed", type=int, default=0, help="seed of the synthetic generator")
    data.add_argument("--test-fraction", type=float, default=0.2)
    data.add_argument("--stratify", action="store_true", help="split each user's ratings separately")
    data.add_argument("--seeds", type=_seed_list, default=[1, 2, 3])

    sa = p.add_argument_group("annealing")
    sa.add_argument("--iters", type=int, help="SA steps (default 10) or WNMF rounds (default 50)")
    sa.add_argument("--rank", type=int, default=20)
    sa.add_argument("--step-size", type=float, default=0.01)
    sa.add_argument("--t0", type=float, default=25000.0)
    sa.add_argument("--tf", type=float, default=2.5)
    sa.add_argument("--cooling", choices=["linear", "exp"], default="exp")
    sa.add_argument("--walk", choices=["levy", "gaussian"],
                    help="must agree with the sa-* solver name when given")
    sa.add_argument("--levy-index", type=float, default=1.5)
    sa.add_argument("--gaussian-stddev", type=float, default=1.0)
    sa.add_argument("--move", choices=["row", "full"], default="row")

    base = p.add_argument_group("baselines")
    base.add_argument("--lr", type=float, help="SGD learning rate (default 0.005)")
    base.add_argument("--reg", type=float, help="SGD/ALS regularization (defaults 0.02/0.05)")
    base.add_argument("--epochs", type=int, help="SGD epochs (default 30)")
    base.add_argument("--sweeps", type=int, help="ALS sweeps (default 15)")

    out = p.add_argument_group("output")
    out.add_argument("--out", default="results.csv")
    out.add_argument("--timing", action="store_true",
                     help="fill the wall_ms column (makes the CSV run-dependent)")
    out.add_argument("--config", help="key=value file or a JSON run manifest; flags on the command line win")
    out.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annealmf",
        description="Matrix-factorization benchmarks: Levy-flight annealing vs SGD, ALS and WNMF.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train and evaluate one solver over several seeds")
    p.add_argument("--solver", choices=SOLVERS, default="sa-levy")
    _add_common(p)

    p = sub.add_parser("sweep", help="vary one parameter, one row per value")
    p.add_argument("--solver", choices=SOLVERS, default="sa-levy")
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", type=_float_list, required=True)
    _add_common(p)

    p = sub.add_parser("bench", help="all five solvers on one split per seed")
    p.add_argument("--grid", action="store_true",
                   help="pick baseline hyperparameters from a small grid on a validation split")
    _add_common(p)

    p = sub.add_parser("split", help="write train/test files for external tools")
    _add_common(p)
    return parser


# -- configuration files ---------------------------------------------------

def _config_argv(path: str, parser_for_cmd: argparse.ArgumentParser) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        items = json.loads(text)["flags"].items()
    else:
        items = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            items.append((key, value))

    known = {a.dest: a for a in parser_for_cmd._actions}
    argv = []
    for key, value in items:
        dest = key.lstrip("-").replace("-", "_")
        if dest in _NOT_REPLAYED:
            continue
        action = known.get(dest)
        if action is None:
            raise CliError(f"{path}: unknown setting {key!r}")
        flag = action.option_strings[-1]
        if action.nargs == 0:
            if _truthy(value):
                argv.append(flag)
            continue
        if value is None:
            continue
        if isinstance(value, list):
            if action.nargs is None:
                value = ",".join(str(v) for v in value)
            else:
                argv += [flag, *(str(v) for v in value)]
                continue
        if action.nargs not in (None, "?"):
            argv += [flag, *str(value).split()]
        else:
            argv += [flag, str(value)]
    return argv


def _truthy(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # find --config before enforcing required flags, which the file may supply
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    commands = parser._subparsers._group_actions[0].choices
    if known.config and argv and argv[0] in commands:
        from_file = _config_argv(known.config, commands[argv[0]])
        argv = [argv[0], *from_file, *argv[1:]]
    return parser.parse_args(argv)


# -- data and solvers ------------------------------------------------------

def load_data(args):
    if args.synthetic is not None:
        spec = args.synthetic
        fmt = "synthetic"
    else:
        fmt = args.format or "ml1m"
        spec = args.data.split(",") if (fmt == "synthetic" and args.data) else None
    if fmt == "synthetic":
        if not spec or len(spec) != 4:
            raise CliError("synthetic data needs M N K NOISE (--synthetic or --data M,N,K,NOISE)")
        M, N, K, noise = int(spec[0]), int(spec[1]), int(spec[2]), float(spec[3])
        data = make_synthetic(M, N, K, noise, density=args.density, seed=args.data_seed)
        return data, {"format": "synthetic", "M": M, "N": N, "K": K, "noise": noise,
                      "density": args.density, "data_seed": args.data_seed}
    if not args.data:
        raise CliError("--data is required for MovieLens formats")
    if not Path(args.data).is_file():
        raise CliError(f"dataset not found: {args.data}")
    parse = parse_movielens_1m if fmt == "ml1m" else parse_movielens_100k
    data, _, _ = parse(args.data)
    return data, {"format": fmt, "path": str(args.data)}


def solver_config(solver: str, args, seed: int):
    if solver.startswith("sa-"):
        walk_name = solver[3:]
        if args.walk is not None and args.walk != walk_name:
            raise CliError(f"--walk {args.walk} contradicts --solver {solver}")
        iters = 10 if args.iters is None else args.iters
        cooling = linear_cooling_for(args.t0, args.tf, iters) if args.cooling == "linear" else None
        return AnnealConfig(
            t0=args.t0, tf=args.tf, max_iters=iters, step_size=args.step_size,
            walk=make_walk(walk_name, args.levy_index, args.gaussian_stddev),
            cooling=cooling, rank=args.rank, seed=seed, move=args.move,
        )
    if solver == "sgd":
        return SgdConfig(
            learning_rate=0.005 if args.lr is None else args.lr,
            regularization=0.02 if args.reg is None else args.reg,
            epochs=30 if args.epochs is None else args.epochs,
            rank=args.rank, seed=seed,
        )
    if solver == "als":
        return AlsConfig(
            regularization=0.05 if args.reg is None else args.reg,
            sweeps=15 if args.sweeps is None else args.sweeps,
            rank=args.rank, seed=seed,
        )
    if solver == "wnmf":
        return WnmfConfig(iterations=50 if args.iters is None else args.iters, rank=args.rank, seed=seed)
    raise CliError(f"unknown solver {solver!r}")


def train(cfg, data):
    if isinstance(cfg, AnnealConfig):
        return anneal(data, cfg)
    if isinstance(cfg, SgdConfig):
        return sgd_train(data, cfg)
    if isinstance(cfg, AlsConfig):
        return als_train(data, cfg)
    return wnmf_train(data, cfg)


def _params(cfg) -> str:
    d = {k: v for k, v in cfg.describe().items() if k != "seed"}
    for k, v in d.items():
        if isinstance(v, (list, tuple)):
            d[k] = ":".join(str(x) for x in v)
    return format_params(d)


def _grid_select(solver, cfg, train_data, seed):
    """Best grid point by validation RMSE on a holdout carved from train."""
    inner = split_holdout(train_data, 0.2, seed=10_000 + seed)
    best = None
    for point in BASELINE_GRID[solver]:
        trial = replace(cfg, **point)
        model, _ = train(trial, inner.train)
        score = rmse(model, inner.test)
        if best is None or score < best[0]:
            best = (score, point)
    return replace(cfg, **best[1]), best[1]


def _evaluate(solver, args, split, seed, grid=False):
    cfg = solver_config(solver, args, seed)
    chosen = None
    if grid and solver in BASELINE_GRID:
        cfg, chosen = _grid_select(solver, cfg, split.train, seed)
    model, report = train(cfg, split.train)
    report.test_rmse = rmse(model, split.test)
    record = {
        "seed": seed,
        "test_rmse": report.test_rmse,
        "train_rmse": report.train_rmse,
        "iterations": report.iterations,
        "wall_time_s": report.wall_time,
        "cold_start_test": split.cold_start_count(),
        "config": cfg.describe(),
    }
    if chosen is not None:
        record["grid_choice"] = chosen
    return cfg, record


def _summarise(system, params, records, timing) -> BenchRow:
    scores = np.array([r["test_rmse"] for r in records])
    spread = float(np.std(scores, ddof=1)) if len(scores) > 1 else 0.0
    wall = 1000.0 * float(np.mean([r["wall_time_s"] for r in records])) if timing else None
    return BenchRow(system, params, float(scores.mean()), spread,
                    tuple(r["seed"] for r in records), wall)


def _manifest(args, dataset_info, data, results):
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_REPLAYED}
    return {
        "command": args.command,
        "flags": flags,
        "dataset": {**dataset_info, "checksum": dataset_checksum(data),
                    "n_ratings": len(data), "num_users": data.num_users,
                    "num_items": data.num_items},
        "rng_algorithm": RNG_ALGORITHM,
        "annealmf_version": __version__,
        "numpy_version": np.__version__,
        "timing": bool(args.timing),
        "results": results,
    }


def _manifest_path(out: str) -> Path:
    p = Path(out)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p.with_name(p.stem + ".manifest.json")


def _print_rows(rows, file=None):
    file = file or sys.stdout
    for r in rows:
        print(f"{r.system:12s} rmse={r.rmse_mean:.4f} +/- {r.rmse_spread:.4f} "
              f"(seeds {','.join(map(str, r.seeds))}) {r.params}", file=file)


# -- commands --------------------------------------------------------------

def cmd_run(args) -> int:
    data, info = load_data(args)
    records, cfg = [], None
    for seed in args.seeds:
        split = split_holdout(data, args.test_fraction, seed, stratify=args.stratify)
        cfg, rec = _evaluate(args.solver, args, split, seed)
        rec["baseline_rmse"] = baseline_rmse(split.train, split.test)
        records.append(rec)
        log.info("seed %d: test rmse %.4f", seed, rec["test_rmse"])
    row = _summarise(args.solver, _params(cfg), records, args.timing)
    manifest_path = _manifest_path(args.out)
    write_bench_csv([row], args.out)
    write_manifest(manifest_path, _manifest(args, info, data, {args.solver: records}))
    _print_rows([row])
    return 0


_ITERATION_FIELD = {AnnealConfig: "max_iters", SgdConfig: "epochs", AlsConfig: "sweeps",
                    WnmfConfig: "iterations"}


def _with_axis(cfg, axis, value):
    if axis == "rank":
        return replace(cfg, rank=int(value))
    if axis == "step-size":
        if not isinstance(cfg, AnnealConfig):
            raise CliError("the step-size axis only applies to sa-* solvers")
        return replace(cfg, step_size=float(value))
    cfg = replace(cfg, **{_ITERATION_FIELD[type(cfg)]: int(value)})
    if isinstance(cfg, AnnealConfig) and cfg.cooling is not None:
        # linear schedules are tied to the step budget
        cfg = replace(cfg, cooling=linear_cooling_for(cfg.t0, cfg.tf, cfg.max_iters))
    return cfg


def cmd_sweep(args) -> int:
    data, info = load_data(args)
    splits = {s: split_holdout(data, args.test_fraction, s, stratify=args.stratify) for s in args.seeds}
    rows, results = [], {}
    for value in args.values:
        records, cfg = [], None
        for seed, split in splits.items():
            cfg = _with_axis(solver_config(args.solver, args, seed), args.axis, value)
            model, report = train(cfg, split.train)
            records.append({
                "seed": seed, "test_rmse": rmse(model, split.test),
                "train_rmse": report.train_rmse, "iterations": report.iterations,
                "wall_time_s": report.wall_time, "config": cfg.describe(),
            })
        rows.append(_summarise(args.solver, _params(cfg), records, args.timing))
        results[f"{args.axis}={value:g}"] = records

    manifest_path = _manifest_path(args.out)
    write_bench_csv(rows, args.out)
    write_manifest(manifest_path, _manifest(args, info, data, results))

    label = {"iterations": "Iterations", "rank": "Latent features", "step-size": "Step size"}[args.axis]
    print(" | ".join([label] + [f"{v:g}" for v in args.values]))
    print(" | ".join(["RMSE"] + [f"{r.rmse_mean:.3f}" for r in rows]))
    best = min(range(len(rows)), key=lambda i: rows[i].rmse_mean)
    print(f"best {label.lower()}: {args.values[best]:g}")
    if args.axis == "iterations":
        if args.solver.startswith("sa-"):
            print("note: one iteration is one proposal/acceptance step")
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                if rows[i].rmse_mean < rows[j].rmse_mean and args.values[i] < args.values[j]:
                    print(f"note: {args.values[i]:g} iterations beat {args.values[j]:g} "
                          f"({rows[i].rmse_mean:.4f} < {rows[j].rmse_mean:.4f})")
    return 0


def cmd_bench(args) -> int:
    data, info = load_data(args)
    records = {s: [] for s in SOLVERS}
    params = {}
    for seed in args.seeds:
        split = split_holdout(data, args.test_fraction, seed, stratify=args.stratify)
        for solver in SOLVERS:
            cfg, rec = _evaluate(solver, args, split, seed, grid=args.grid)
            records[solver].append(rec)
            params[solver] = _params(cfg)
            log.info("seed %d %s: %.4f", seed, solver, rec["test_rmse"])
        records.setdefault("mean-baseline", []).append(
            {"seed": seed, "test_rmse": baseline_rmse(split.train, split.test)}
        )
    if args.grid:
        for solver in BASELINE_GRID:
            params[solver] = "grid-selected per seed (see manifest)"

    rows = {s: _summarise(s, params[s], records[s], args.timing) for s in SOLVERS}
    manifest_path = _manifest_path(args.out)
    out = Path(args.out)
    t4 = out.with_name(out.stem + ".table4.csv")
    t5 = out.with_name(out.stem + ".table5.csv")
    write_bench_csv([rows[s] for s in TABLE4], t4)
    write_bench_csv([rows[s] for s in TABLE5], t5)
    write_manifest(manifest_path, _manifest(args, info, data, records))

    print("Random walk (Levy vs Gaussian):")
    _print_rows([rows[s] for s in TABLE4])
    print("Methods:")
    _print_rows([rows[s] for s in TABLE5])
    base = np.mean([r["test_rmse"] for r in records["mean-baseline"]])
    print(f"global-mean predictor rmse={base:.4f}")
    print("note: one SA iteration is one proposal/acceptance step")
    return 0


def cmd_split(args) -> int:
    data, info = load_data(args)
    out = Path(args.out)
    results = {}
    for seed in args.seeds:
        split = split_holdout(data, args.test_fraction, seed, stratify=args.stratify)
        target = out if len(args.seeds) == 1 else out / f"seed-{seed}"
        train_path, test_path = write_split(split, target)
        results[str(seed)] = {"train": str(train_path), "test": str(test_path),
                              "n_train": len(split.train), "n_test": len(split.test)}
        print(f"seed {seed}: {len(split.train)} train -> {train_path}, "
              f"{len(split.test)} test -> {test_path}")
    write_manifest(out / "split.manifest.json", _manifest(args, info, data, results))
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "bench": cmd_bench, "split": cmd_split}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (CliError, OSError, ValueError, KeyError) as exc:
        print(f"annealmf: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # every module error becomes a non-zero exit
        log.debug("failure", exc_info=True)
        print(f"annealmf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
