"""Command-line entry point.

Subcommands: generate, solve-sa, estimate, validate, shot-sweep, sample-size.
Configuration comes from an optional JSON file (--config) with per-command
flag overrides; every command takes --seed and --out-dir.  Exit codes are
part of the contract:

    0  success
    2  configuration error
    3  breakdown: degenerate outputs (no variability in the extreme samples)
    4  breakdown: unreachable target (zero success probability)
    5  I/O error
    6  output directory locked by another invocation
    1  anything unexpected
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .errors import (
    ConfigError,
    DegenerateSamplesError,
    EstimationImpossibleError,
    InstanceFormatError,
    OutputLockedError,
    QevtError,
)
from .pipeline import (
    STATUS_DEGENERATE,
    STATUS_UNREACHABLE,
    ExperimentConfig,
    SyntheticSpec,
    run_estimate,
    run_generate,
    run_sample_size,
    run_shot_sweep,
    run_solve_sa,
    run_validate,
)
from .sample_size import SampleSizeConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_UNREACHABLE = 4
EXIT_IO = 5
EXIT_LOCKED = 6

LOCK_NAME = ".qevt.lock"


class _Lock:
    """Exclusive marker file; concurrent runs on one output directory are
    unsupported and fail fast instead of corrupting artifacts."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / LOCK_NAME

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OutputLockedError(
                f"output directory is locked by another invocation ({self.path}); "
                "remove the lock file if that run is gone"
            ) from None
        os.write(fd, f"pid={os.getpid()}\n".encode())
        os.close(fd)
        return self

    def __exit__(self, *exc_info):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False


def _add_common(parser):
    parser.add_argument("--config", type=Path, help="JSON experiment config file")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")


def _add_instance_flags(parser):
    parser.add_argument("--instance", type=Path, help="instance file (.json or .csv)")
    parser.add_argument("--n", type=int, help="synthetic instance size")
    parser.add_argument("--k", type=int, help="synthetic cardinality target")
    parser.add_argument("--instance-seed", type=int, default=0, help="synthetic generator seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qevt",
        description="Estimate quantum run counts against a simulated-annealing baseline",
    )
    parser.add_argument("--version", action="version", version=f"qevt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--style", default="perf-delta")
    p.add_argument("--magnitude", type=float, default=0.05)
    p.add_argument("--signal-to-noise", type=float, default=3.0)
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("solve-sa", help="run the simulated-annealing baseline")
    _add_common(p)
    _add_instance_flags(p)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("estimate", help="full pipeline: baseline, QAOA, fits, run counts")
    _add_common(p)
    _add_instance_flags(p)
    p.add_argument("--shots", type=int, nargs="+", help="shots grid override")
    p.add_argument("--runs", type=int, help="extreme samples per shots setting")
    p.add_argument("--alpha", type=float, nargs="+", help="confidence levels")
    p.add_argument("--noise", type=float, help="readout flip probability")
    p.add_argument("--depth", type=int, help="circuit depth")
    p.add_argument("--y-ideal", type=float, help="override the baseline energy")

    p = sub.add_parser("validate", help="empirical check of an estimated run count")
    _add_common(p)
    p.add_argument("--shots", type=int, required=True, help="shots setting to validate")
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument("--n-evt", type=int, help="run count to probe (default: from the report)")
    p.add_argument("--delta-min", type=int, default=-3)
    p.add_argument("--delta-max", type=int, default=3)
    p.add_argument("--trials", type=int, default=500)

    p = sub.add_parser("shot-sweep", help="average best energy across a shots grid")
    _add_common(p)
    _add_instance_flags(p)
    p.add_argument("--shots", type=int, nargs="+", help="grid override")
    p.add_argument("--reps", type=int, default=20)

    p = sub.add_parser("sample-size", help="estimate how many extreme samples a fit needs")
    _add_common(p)
    _add_instance_flags(p)
    p.add_argument("--pool", type=Path, help="extreme-sample CSV (min_energy column)")
    p.add_argument("--shots", type=int, help="shots setting for pool lookup/collection")
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--inner-draws", type=int)
    p.add_argument("--outer-reps", type=int)
    p.add_argument("--stride", type=int)
    return parser


def _load_config(args) -> ExperimentConfig:
    payload = {}
    if getattr(args, "config", None):
        try:
            payload = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc

    if getattr(args, "instance", None):
        payload["instance_path"] = str(args.instance)
        payload.pop("synthetic", None)
    elif getattr(args, "n", None):
        payload["synthetic"] = {
            "n": args.n,
            "k": getattr(args, "k", None),
            "seed": getattr(args, "instance_seed", 0),
        }
        payload.pop("instance_path", None)
    elif not payload.get("instance_path") and not payload.get("synthetic"):
        # commands operating on a populated output directory reuse its instance
        persisted = Path(args.out_dir) / "instance.json"
        if persisted.exists():
            payload["instance_path"] = str(persisted)

    if getattr(args, "seed", None) is not None:
        payload["seed"] = args.seed
    for flag, key in (
        ("runs", "runs"),
        ("noise", "readout_flip_prob"),
        ("depth", "qaoa_depth"),
        ("y_ideal", "y_ideal_override"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            payload[key] = value
    if getattr(args, "alpha", None) is not None and isinstance(args.alpha, list):
        payload["alphas"] = args.alpha
    if args.command == "estimate" and getattr(args, "shots", None):
        payload["shots_grid"] = args.shots
    if args.command == "solve-sa":
        sa = dict(payload.get("sa") or {})
        if args.sweeps is not None:
            sa["sweeps"] = args.sweeps
        if args.restarts is not None:
            sa["restarts"] = args.restarts
        if sa:
            payload["sa"] = sa
    if args.command == "sample-size":
        ss = dict(payload.get("sample_size") or {})
        for flag, key in (
            ("n_min", "n_min"),
            ("n_max", "n_max"),
            ("inner_draws", "inner_draws"),
            ("outer_reps", "outer_reps"),
            ("stride", "stride"),
        ):
            value = getattr(args, flag, None)
            if value is not None:
                ss[key] = value
        if ss:
            ss.setdefault("seed", payload.get("seed", 0))
            payload["sample_size"] = ss
    return ExperimentConfig.from_dict(payload)


def _dispatch(args) -> int:
    if args.command == "generate":
        spec = SyntheticSpec(
            n=args.n,
            k=args.k,
            style=args.style,
            seed=args.seed,
            magnitude=args.magnitude,
            signal_to_noise=args.signal_to_noise,
        )
        info = run_generate(spec, args.output)
        print(f"wrote {info['path']} (n={info['n']}, k={info['k']})")
        if "optimum" in info:
            print(f"brute-force optimum: energy={info['optimum']['energy']:.6g} "
                  f"bits={''.join(map(str, info['optimum']['bits']))}")
        return EXIT_OK

    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    with _Lock(out_dir):
        if args.command == "solve-sa":
            payload = run_solve_sa(cfg, out_dir)
            print(f"SA baseline energy: {payload['energy']:.6g}")
            return EXIT_OK
        if args.command == "estimate":
            report = run_estimate(cfg, out_dir)
            for entry in report["per_shots"]:
                if "breakdown" in entry:
                    print(f"shots={entry['shots_s']}: breakdown ({entry['breakdown']})")
                    continue
                for est in entry["estimates"]:
                    n_evt = est["n_evt"]
                    shown = "inf" if not isinstance(n_evt, int) and not math.isfinite(n_evt) else n_evt
                    print(
                        f"shots={entry['shots_s']} alpha={est['alpha']:g}: "
                        f"p={est['success_prob']:.4g} n_evt={shown}"
                    )
            print(f"status: {report['status']}")
            if report["status"] == STATUS_DEGENERATE:
                return EXIT_DEGENERATE
            if report["status"] == STATUS_UNREACHABLE:
                return EXIT_UNREACHABLE
            return EXIT_OK
        if args.command == "validate":
            payload = run_validate(
                cfg,
                out_dir,
                shots_s=args.shots,
                alpha=args.alpha,
                delta_range=(args.delta_min, args.delta_max),
                trials=args.trials,
                n_evt=args.n_evt,
            )
            for point in payload["curve"]:
                print(f"delta={point['delta']:+d} runs={point['runs']}: ratio={point['ratio']:.3f}")
            return EXIT_OK
        if args.command == "shot-sweep":
            payload = run_shot_sweep(cfg, out_dir, grid=args.shots, reps=args.reps)
            for point in payload["points"]:
                print(f"shots={point['shots_s']}: mean min energy {point['mean_min_energy']:.6g}")
            if payload["high_variance"]:
                print("warning: single repetition per point, curve is high-variance")
            return EXIT_OK
        if args.command == "sample-size":
            payload = run_sample_size(cfg, out_dir, pool_path=args.pool, shots_s=args.shots)
            result = payload["result"]
            print(
                f"n_estimate={result['n_estimate']} "
                f"(n_ht2={result['n_ht2']}, n_mst={result['n_mst']}, "
                f"flags={result['flags'] or 'none'})"
            )
            return EXIT_OK
    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except OutputLockedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOCKED
    except (ConfigError, InstanceFormatError, ValueError) as exc:
        if isinstance(exc, DegenerateSamplesError):
            print(f"breakdown: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationImpossibleError as exc:
        print(f"estimation impossible: {exc}", file=sys.stderr)
        for n, (failed, attempted) in sorted(exc.failure_table.items()):
            print(f"  n={n}: {failed}/{attempted} fits failed", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QevtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
