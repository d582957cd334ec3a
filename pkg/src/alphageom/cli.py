"""Command-line entry point: train, sample, geodesic, eval-kde, verify.

Every run validates its flags, seeds all randomness explicitly, writes its
artifacts (CSV point sets and curves, JSON models and reports), and drops a
JSON manifest next to the primary output. Exit codes: 0 success, 1 invalid
arguments or inputs, 2 numerical failure.
"""

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, flow, verify
from .alpha_geometry import AlphaParam, to_alpha_rep
from .evaluation import (
    DEFAULT_BANDWIDTH,
    DEFAULT_RESOLUTION,
    kde_density,
    kde_kl,
    load_points_csv,
    make_density_grid,
    save_points_csv,
    swiss_roll_simplex,
)
from .geodesics import GeodesicCurve, geodesic
from .manifold import (
    InvariantViolationError,
    NumericalError,
    SimplexPoint,
    clamp_normalize,
    make_rng,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


@dataclass
class RunManifest:
    """Reproducibility record written alongside every artifact."""

    command: str
    config: dict
    seed: int
    library_version: str
    inputs: list
    outputs: list
    duration_s: float


def _write_manifest(manifest: RunManifest, out_path: str):
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(asdict(manifest), fh, indent=2)


def _parse_alpha(value: str) -> AlphaParam:
    try:
        return AlphaParam(float(value))
    except (TypeError, ValueError, InvariantViolationError) as exc:
        raise argparse.ArgumentTypeError(f"alpha must be a real in [-1, 1]: {exc}")


def _parse_point(value: str) -> SimplexPoint:
    try:
        raw = np.array([float(v) for v in value.split(",")])
        return clamp_normalize(raw, 1e-9)
    except (ValueError, InvariantViolationError) as exc:
        raise argparse.ArgumentTypeError(f"bad point {value!r}: {exc}")


def emit_curve_table(curve: GeodesicCurve, points: int, path):
    """CSV sampling of a geodesic: header t,mu_1..mu_n, rows at uniform t."""
    if points < 2:
        raise InvariantViolationError("need at least 2 sample points")
    n = curve.x0.n
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(f"mu_{i + 1}" for i in range(n)) + "\n")
        for t in np.linspace(0.0, 1.0, points):
            mu = curve.point_simplex(float(t)).probs
            fh.write(format(t, ".17g") + "," + ",".join(format(v, ".17g") for v in mu) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alphageom",
        description="alpha-geometry on the simplex: geodesic flow matching toolkit",
    )
    parser.add_argument("--config", help="JSON file with default flag values", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a flow-matching model")
    src = p_train.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV of training points (mu_1..mu_n header)")
    src.add_argument("--swiss-roll", type=int, metavar="N", help="generate N Swiss-roll points")
    p_train.add_argument("--alpha", type=_parse_alpha, required=True)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--epochs", type=int, default=2000)
    p_train.add_argument("--lr", type=float, default=1e-2)
    p_train.add_argument("--tau-steps", type=int, default=100)
    p_train.add_argument("--width", type=int, default=256)
    p_train.add_argument("--baseline", choices=flow.BASELINES, default="alpha_flow")
    p_train.add_argument("--out", required=True, help="model JSON path")

    p_sample = sub.add_parser("sample", help="sample from a trained model")
    p_sample.add_argument("--model", required=True)
    p_sample.add_argument("--count", type=int, default=10000)
    p_sample.add_argument("--steps", type=int, default=1000, help="Euler steps")
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", required=True, help="samples CSV path")

    p_geo = sub.add_parser("geodesic", help="emit a geodesic curve table")
    p_geo.add_argument("--alpha", type=_parse_alpha, required=True)
    p_geo.add_argument("--mu0", type=_parse_point, required=True)
    p_geo.add_argument("--mu1", type=_parse_point, required=True)
    p_geo.add_argument("--points", type=int, default=101)
    p_geo.add_argument("--tau-steps", type=int, default=100)
    p_geo.add_argument("--seed", type=int, default=0)
    p_geo.add_argument("--out", required=True, help="curve CSV path")

    p_kde = sub.add_parser("eval-kde", help="KDE KL divergence between two point sets")
    p_kde.add_argument("--data", required=True, help="reference points CSV")
    p_kde.add_argument("--gen", required=True, help="generated points CSV")
    p_kde.add_argument("--bandwidth", type=float, default=DEFAULT_BANDWIDTH)
    p_kde.add_argument("--grid", type=int, default=DEFAULT_RESOLUTION)
    p_kde.add_argument("--seed", type=int, default=0)
    p_kde.add_argument("--out", required=True, help="report JSON path")

    p_verify = sub.add_parser("verify", help="run the numerical verification suites")
    p_verify.add_argument("--suite", choices=("core", "all"), default="core")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--out", default="verify_report.json")
    return parser


def _cmd_train(args) -> tuple:
    if args.data is not None:
        points = load_points_csv(args.data)
        inputs = [args.data]
    else:
        if args.swiss_roll < 1:
            raise InvariantViolationError("--swiss-roll needs a positive count")
        points = swiss_roll_simplex(args.swiss_roll, make_rng(args.seed))
        inputs = []
    cfg = flow.FlowConfig(
        alpha=args.alpha,
        epochs=args.epochs,
        learning_rate=args.lr,
        tau_steps=args.tau_steps,
        seed=args.seed,
        baseline=args.baseline,
        hidden=(args.width, args.width),
    )
    model = flow.train(points, cfg)
    flow.save_model(model, args.out)
    print(f"trained {len(points)} points for {cfg.epochs} epochs; "
          f"final loss {model.loss_history[-1]:.6f} -> {args.out}")
    return cfg.to_dict(), inputs, [args.out]


def _cmd_sample(args) -> tuple:
    model = flow.load_model(args.model)
    cfg = flow.FlowConfig(
        **{**model.config.to_dict(), "euler_steps_sample": args.steps, "seed": args.seed}
    )
    points = flow.sample(model, cfg, args.count, make_rng(args.seed))
    save_points_csv(points, args.out)
    print(f"sampled {args.count} points with {args.steps} Euler steps -> {args.out}")
    return cfg.to_dict(), [args.model], [args.out]


def _cmd_geodesic(args) -> tuple:
    if args.mu0.n != args.mu1.n:
        raise InvariantViolationError("mu0 and mu1 have different dimensions")
    curve = geodesic(args.mu0, args.mu1, args.alpha, tau_steps=args.tau_steps)
    emit_curve_table(curve, args.points, args.out)
    config = {
        "alpha": args.alpha.alpha,
        "mu0": args.mu0.probs.tolist(),
        "mu1": args.mu1.probs.tolist(),
        "points": args.points,
        "tau_steps": args.tau_steps,
    }
    print(f"geodesic table with {args.points} rows -> {args.out}")
    return config, [], [args.out]


def _cmd_eval_kde(args) -> tuple:
    data = load_points_csv(args.data)
    gen = load_points_csv(args.gen)
    grid = make_density_grid(args.grid)
    kl = kde_kl(
        kde_density(data, args.bandwidth, grid), kde_density(gen, args.bandwidth, grid)
    )
    report = {
        "kl_data_vs_gen": kl,
        "bandwidth": args.bandwidth,
        "grid_resolution": args.grid,
        "n_data": len(data),
        "n_gen": len(gen),
        "seed": args.seed,
    }
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"KDE KL(data||gen) = {kl:.6f} -> {args.out}")
    return report, [args.data, args.gen], [args.out]


def _cmd_verify(args) -> tuple:
    report = verify.run_suite(args.suite, args.seed)
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
    for check in report["checks"]:
        mark = "PASS" if check["passed"] else "FAIL"
        print(f"[{mark}] {check['name']}: {check['detail']}")
    if not report["all_passed"]:
        raise NumericalError("verification suite failed")
    print(f"all {len(report['checks'])} checks passed -> {args.out}")
    return {"suite": args.suite}, [], [args.out]


COMMANDS = {
    "train": _cmd_train,
    "sample": _cmd_sample,
    "geodesic": _cmd_geodesic,
    "eval-kde": _cmd_eval_kde,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        if argv is None:
            argv = sys.argv[1:]
        # --config supplies defaults; explicit flags win
        if "--config" in argv:
            at = argv.index("--config")
            with open(argv[at + 1]) as fh:
                defaults = json.load(fh)
            parser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    start = time.perf_counter()
    try:
        config, inputs, outputs = COMMANDS[args.command](args)
    except (InvariantViolationError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = RunManifest(
        command=args.command,
        config=config,
        seed=getattr(args, "seed", 0),
        library_version=__version__,
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        duration_s=time.perf_counter() - start,
    )
    _write_manifest(manifest, outputs[-1])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
