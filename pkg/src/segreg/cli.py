import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, config
from .core.manifest import RunManifest
from .core.model import DetectorConfig
from .data.loaders import file_digest, load_data_from_csv
from .data.transforms import dataset_to_frame
from .data.writers import atomic_write_text, frame_to_csv, to_json, write_json
from .detection import DETECTORS
from .detection.cache import FitCache
from .exceptions import ConfigError, DataFormatError, InfeasibleError, SegregError, SolverError
from .simulation.models import CovarianceSpec, load_model, sparse_vector
from .simulation.sampler import sample_dataset
from .tuning.cv import cv_grid
from .tuning.metrics import tuning_rule

logger = logging.getLogger("segreg")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4


def parse_grid(text: str) -> List[float]:
    """
    A lambda grid: comma list ("0.01,0.1,1"), "geom:lo:hi:num" or "lin:lo:hi:num".
    """
    text = text.strip()
    try:
        if text.startswith(("geom:", "lin:")):
            kind, lo, hi, num = text.split(":")
            lo, hi, num = float(lo), float(hi), int(num)
            if num < 1:
                raise ValueError("num must be >= 1")
            if kind == "geom":
                if lo <= 0 or hi <= 0:
                    raise ValueError("geometric grid needs positive ends")
                values = np.geomspace(lo, hi, num)
            else:
                values = np.linspace(lo, hi, num)
            grid = [float(v) for v in values]
        else:
            grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid lambda grid {text!r}: {exc}")
    if not grid or any(not np.isfinite(v) or v < 0 for v in grid):
        raise ConfigError(f"lambda grid {text!r} must hold finite nonnegative values")
    return grid


def parse_int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid integer list {text!r}: {exc}")
    if not values or any(v < 1 for v in values):
        raise ConfigError(f"list {text!r} must hold positive integers")
    return values


def _threads(args) -> int:
    threads = args.threads if args.threads is not None else config.default_threads()
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    return threads


def _manifest(args, argv: Sequence[str]) -> RunManifest:
    settings = {k: v for k, v in vars(args).items() if k != "handler"}
    settings["argv"] = list(argv)
    return RunManifest(command=args.command, config=settings, version=__version__)


def _sidecar(path: str) -> str:
    return f"{path}.manifest.json"


def cmd_detect(args, manifest: RunManifest) -> int:
    with manifest.phase("load"):
        data = load_data_from_csv(args.input, order_by=args.order_by, center=args.center)
        manifest.input_digest = file_digest(args.input)
    lam, gamma = args.lam, args.gamma
    if lam is None or gamma is None:
        rule_lam, _ = tuning_rule(data.n, data.p, args.delta)
        lam = rule_lam if lam is None else lam
        gamma = args.gamma_ratio * lam if gamma is None else gamma
    cfg = DetectorConfig(
        lam=lam,
        gamma=gamma,
        delta=args.delta,
        solver_tol=args.tol,
        solver_max_sweeps=args.max_sweeps,
        n_jobs=_threads(args),
    )
    manifest.config.update({"lam": lam, "gamma": gamma})
    cache = FitCache.for_config(data, cfg, enabled=not args.no_cache)
    with manifest.phase("detect"):
        model = DETECTORS[args.method](cfg).detect(data, cache)
    payload = {
        "method": args.method,
        "n": data.n,
        "p": data.p,
        "k_hat": model.k,
        "alpha_hat": {"fractions": list(model.alpha.points), "rows": list(model.alpha.breaks)},
        "betas": [sparse_vector(beta) for beta in model.betas],
        "supports": [(fit.support + 1).tolist() for fit in model.fits],
        "objective": model.objective,
        "per_segment_loss": list(model.per_segment_loss),
        "kkt_gaps": list(model.kkt_gaps),
        "cache_stats": cache.stats,
        "manifest": manifest.to_dict(),
    }
    write_json(args.output, payload)
    logger.info(f"detect: k_hat={model.k}, alpha={model.alpha.points}")
    return EXIT_OK


def cmd_simulate(args, manifest: RunManifest) -> int:
    if args.n < 2:
        raise ConfigError(f"--n must be >= 2, got {args.n}")
    p = args.p if args.p is not None else 2 * args.n
    cov = CovarianceSpec.parse(args.cov)
    truth = load_model(args.model, p, cov, args.sigma)
    manifest.seeds = [args.seed]
    with manifest.phase("sample"):
        data = sample_dataset(truth, args.n, args.seed)
    truth_payload = dict(truth.to_dict())
    truth_payload.update(
        {"n": args.n, "seed": args.seed, "breaks": list(truth.breaks(args.n)), "manifest": manifest.to_dict()}
    )
    dataset_text = frame_to_csv(dataset_to_frame(data))
    truth_text = to_json(truth_payload)
    truth_path = args.truth_output or f"{args.output}.truth.json"
    atomic_write_text(args.output, dataset_text)
    atomic_write_text(truth_path, truth_text)
    return EXIT_OK


def cmd_cv(args, manifest: RunManifest) -> int:
    lambdas = parse_grid(args.lambdas)
    if args.k_max < 1:
        raise ConfigError(f"--k-max must be >= 1, got {args.k_max}")
    with manifest.phase("load"):
        data = load_data_from_csv(args.input, order_by=args.order_by, center=args.center)
        manifest.input_digest = file_digest(args.input)
    with manifest.phase("cv"):
        result = cv_grid(
            data,
            lambdas,
            list(range(1, args.k_max + 1)),
            args.delta,
            method=args.method,
            tol=args.tol,
            max_sweeps=args.max_sweeps,
            n_jobs=_threads(args),
        )
    table = result.table[["lam", "k", "test_rss"]]
    argmin = result.argmin
    if argmin is None:
        raise InfeasibleError(f"no feasible (lambda, k) cell for n={data.n}, delta={args.delta}")
    summary = {
        "method": args.method,
        "argmin": {"lam": argmin[0], "k": argmin[1]},
        "test_rss": result.best_rss,
        "alpha_hat": list(result.alphas[argmin].points),
        "infeasible_cells": int(result.table["test_rss"].isna().sum()),
        "manifest": manifest.to_dict(),
    }
    csv_text = frame_to_csv(table)
    summary_text = to_json(summary)
    atomic_write_text(args.output, csv_text)
    atomic_write_text(args.summary_output or f"{args.output}.summary.json", summary_text)
    return EXIT_OK


def _truth_factory(args):
    cov = CovarianceSpec.parse(args.cov)
    # fail early on a bad model spec
    load_model(args.model, args.p if args.p is not None else 4, cov, args.sigma)

    def make_truth(n: int):
        p = args.p if args.p is not None else 2 * n
        return load_model(args.model, p, cov, args.sigma)

    return make_truth


def cmd_bench(args, manifest: RunManifest) -> int:
    from .benchmark.engine import run_benchmark

    n_list = parse_int_list(args.n_list)
    if args.reps < 1:
        raise ConfigError(f"--reps must be >= 1, got {args.reps}")
    make_truth = _truth_factory(args)
    manifest.seeds = [args.seed + rep for rep in range(args.reps)]
    with manifest.phase("bench"):
        runs, summary = run_benchmark(
            make_truth, n_list, args.reps, args.seed, args.delta, args.gamma_ratio, n_jobs=_threads(args)
        )
    outputs = [(args.output, frame_to_csv(summary))]
    if args.runs_output:
        outputs.append((args.runs_output, frame_to_csv(runs)))
    outputs.append((_sidecar(args.output), to_json(manifest.to_dict())))
    for path, text in outputs:
        atomic_write_text(path, text)
    return EXIT_OK


def cmd_study(args, manifest: RunManifest) -> int:
    from .benchmark.study import run_study

    n_list = parse_int_list(args.n_list)
    if args.reps < 1:
        raise ConfigError(f"--reps must be >= 1, got {args.reps}")
    make_truth = _truth_factory(args)
    manifest.seeds = [args.seed + rep for rep in range(args.reps)]
    with manifest.phase("study"):
        reps, summary = run_study(
            make_truth, n_list, args.reps, args.seed, args.delta, args.gamma_ratio, n_jobs=_threads(args)
        )
    outputs = [
        (args.output, frame_to_csv(reps)),
        (args.summary_output or f"{args.output}.summary.csv", frame_to_csv(summary)),
        (_sidecar(args.output), to_json(manifest.to_dict())),
    ]
    for path, text in outputs:
        atomic_write_text(path, text)
    return EXIT_OK


def cmd_replay(args, manifest: RunManifest) -> int:
    try:
        with open(args.manifest, encoding="utf-8") as fh:
            recorded = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {args.manifest!r}: {exc}")
    recorded = recorded.get("manifest", recorded)
    try:
        argv = list(recorded["config"]["argv"])
    except (KeyError, TypeError):
        raise ConfigError(f"{args.manifest!r} holds no recorded command line")
    if args.output:
        if "--output" not in argv:
            raise ConfigError("recorded command has no --output to redirect")
        argv[argv.index("--output") + 1] = args.output
    logger.info(f"replaying: segreg {' '.join(argv)}")
    return run(argv)


def _add_solver_args(parser):
    parser.add_argument("--tol", type=float, default=config.DEFAULT_SOLVER_TOL, help="Lasso convergence tolerance")
    parser.add_argument("--max-sweeps", type=int, default=config.DEFAULT_MAX_SWEEPS, help="Lasso sweep budget")


def _add_input_args(parser):
    parser.add_argument("--input", required=True, help="dataset CSV: header, y first, covariates after")
    parser.add_argument("--order-by", default=None, help="sort rows by this column, then drop it")
    parser.add_argument("--center", action="store_true", help="subtract column means before fitting")


def _add_model_args(parser):
    parser.add_argument("--model", default="two", help="'two', 'three' or a JSON model spec path")
    parser.add_argument("--cov", default="identity", help="identity | toeplitz:RHO | equicorr:C")
    parser.add_argument("--sigma", type=float, default=1.0, help="noise standard deviation")
    parser.add_argument("--p", type=int, default=None, help="number of covariates (default 2n)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segreg",
        description="Change points and sparse per-segment regression in high-dimensional linear models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("-v", "--verbose", action="store_true", help="shorthand for --log-level INFO")
    parser.add_argument("--threads", type=int, default=None, help="worker count (default SEGREG_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="estimate change points and coefficients")
    _add_input_args(detect)
    detect.add_argument("--method", choices=sorted(DETECTORS), default="dp")
    detect.add_argument("--lambda", dest="lam", type=float, default=None, help="sparsity penalty (default: tuning rule)")
    detect.add_argument("--gamma", type=float, default=None, help="per-segment penalty (default: gamma-ratio * lambda)")
    detect.add_argument("--gamma-ratio", type=float, default=config.DEFAULT_GAMMA_RATIO)
    detect.add_argument("--delta", type=float, default=config.DEFAULT_DELTA, help="minimal segment fraction")
    detect.add_argument("--no-cache", action="store_true", help="recompute every interval fit")
    detect.add_argument("--output", required=True)
    _add_solver_args(detect)
    detect.set_defaults(handler=cmd_detect)

    simulate = sub.add_parser("simulate", help="draw a dataset from a ground-truth model")
    _add_model_args(simulate)
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--output", required=True, help="dataset CSV path")
    simulate.add_argument("--truth-output", default=None, help="truth JSON path (default OUTPUT.truth.json)")
    simulate.set_defaults(handler=cmd_simulate)

    cv = sub.add_parser("cv", help="ordered-split cross-validation over (lambda, k)")
    _add_input_args(cv)
    cv.add_argument("--method", choices=sorted(DETECTORS), default="dp")
    cv.add_argument("--delta", type=float, default=0.1)
    cv.add_argument("--lambdas", default="geom:0.001:2:20", help="comma list, geom:lo:hi:num or lin:lo:hi:num")
    cv.add_argument("--k-max", type=int, default=10)
    cv.add_argument("--output", required=True, help="CSV of (lam, k, test_rss)")
    cv.add_argument("--summary-output", default=None, help="argmin JSON (default OUTPUT.summary.json)")
    _add_solver_args(cv)
    cv.set_defaults(handler=cmd_cv)

    for name, handler, help_text in (
        ("bench", cmd_bench, "time DP against BS over sample sizes"),
        ("study", cmd_study, "seeded simulation study of both detectors"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_model_args(p)
        p.add_argument("--n-list", default="100,200,400")
        p.add_argument("--reps", type=int, default=5 if name == "bench" else 100)
        p.add_argument("--seed", type=int, default=0, help="master seed; rep r uses seed + r")
        p.add_argument("--delta", type=float, default=config.DEFAULT_DELTA)
        p.add_argument("--gamma-ratio", type=float, default=config.DEFAULT_GAMMA_RATIO)
        p.add_argument("--output", required=True)
        if name == "bench":
            p.add_argument("--runs-output", default=None, help="optional per-run CSV")
        else:
            p.add_argument("--summary-output", default=None, help="default OUTPUT.summary.csv")
        p.set_defaults(handler=handler)

    replay = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    replay.add_argument("manifest", help="output JSON with an embedded manifest, or a .manifest.json sidecar")
    replay.add_argument("--output", default=None, help="write the primary output here instead")
    replay.set_defaults(handler=cmd_replay)
    return parser


def run(argv: Sequence[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    manifest = _manifest(args, argv)
    try:
        return args.handler(args, manifest)
    except DataFormatError as exc:
        logger.error(f"input error: {exc}")
        return EXIT_PARSE
    except ConfigError as exc:
        logger.error(f"configuration error: {exc}")
        return EXIT_CONFIG
    except SolverError as exc:
        logger.error(f"solver failure: {exc}")
        return EXIT_SOLVER
    except SegregError as exc:
        logger.error(f"{exc}")
        return EXIT_CONFIG


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = build_parser().parse_known_args(argv)[0] if argv else None
    level = "INFO" if pre is not None and pre.verbose else (pre.log_level if pre is not None else config.LOG_LEVEL)
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
