"""Command-line front end: plan, fuse, simulate, degrade, calibrate-q.

Exit codes: 0 success, 1 statistical disagreement (simulate), 2 usage or
parameter error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import fuse as fuse_mod
from .errors import GridFuseError, InfeasibleRounds
from .grid import GroundTruthMap, ObservationMap, read_map, serialize_map, to_pgm
from .plan import ConfidenceParams, achievable_confidence, make_plan
from .sensor import Neighborhood, PatternKnowledge, QMode, SensorModel, q_floor
from .sim import ScenarioConfig, run_monte_carlo

EXIT_OK, EXIT_DISAGREE, EXIT_USAGE = 0, 1, 2

# hard defaults applied after config-file values; flags always win
DEFAULTS = {
    "pattern": None,
    "qmode": "additive",
    "nh": "square3",
    "trials": 100,
    "seed": 0,
    "width": 20,
    "height": 20,
    "density": 0.2,
    "spacing": 3,
    "workers": 1,
    "rounds": "auto",
    "ml": False,
    "json": False,
}


class UsageError(Exception):
    pass


def probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a decimal probability like 0.99, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"probability must lie strictly between 0 and 1, got {text}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def rounds_arg(text: str):
    return "auto" if text == "auto" else positive_int(text)


def unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return value


# key -> converter used for both flags and config files
_TYPES = {
    "p": probability, "qprime": probability, "q": probability, "d": probability,
    "c": probability, "n": positive_int, "rounds": rounds_arg, "trials": positive_int,
    "seed": int, "width": positive_int, "height": positive_int, "spacing": positive_int,
    "density": unit_interval, "workers": positive_int, "pattern": str, "qmode": str,
    "nh": str, "map": str, "out": str,
    "ml": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "json": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def load_config(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in _TYPES:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _TYPES[key](val)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}:{lineno}: {exc}")
    return values


def _add_common(sub: argparse.ArgumentParser, *names: str) -> None:
    helps = {
        "p": "obstacle detection probability",
        "qprime": "free-cell confidence floor q'",
        "q": "free-cell probability for the ML rule",
        "d": "target per-cell confidence",
        "n": "number of rounds available",
        "rounds": "rounds per trial, or 'auto' for the planned count",
        "trials": "Monte Carlo trials",
        "seed": "master seed",
        "width": "grid width (cells)",
        "height": "grid height (cells)",
        "density": "obstacle density for the random pattern",
        "spacing": "column spacing for the lines pattern",
        "c": "fusion threshold on the mean observation",
        "qmode": "how overlapping neighbourhoods combine",
        "nh": "neighbourhood keyword (square3, square5, ...)",
        "map": "ground-truth map file",
        "out": "output path (default: stdout)",
        "workers": "processes used for trials",
    }
    for name in names:
        kw = {"default": None, "help": helps.get(name)}
        if name == "pattern":
            sub.add_argument("--pattern", choices=("none", "lines", "random", "empty"), **kw)
        elif name == "qmode":
            sub.add_argument("--qmode", choices=("additive", "product"), **kw)
        elif name in ("ml", "json"):
            sub.add_argument(f"--{name}", action="store_const", const=True, default=None)
        else:
            sub.add_argument(f"--{name}", type=_TYPES[name], metavar=name.upper(), **kw)
    sub.add_argument("--config", default=None, help="key=value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridfuse", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("plan", help="rounds N(d) and threshold interval")
    _add_common(sp, "p", "qprime", "d", "n", "pattern", "map", "qmode", "nh", "json")

    sp = subs.add_parser("fuse", help="fuse observation map files")
    sp.add_argument("maps", nargs="*", help="observation map files")
    _add_common(sp, "c", "ml", "p", "q", "out")
    sp.add_argument("--pgm", default=None, help="also write a P2 PGM rendering here")

    sp = subs.add_parser("simulate", help="Monte Carlo check against the binomial oracle")
    _add_common(sp, "p", "qprime", "d", "rounds", "trials", "seed", "pattern", "density",
                "spacing", "width", "height", "ml", "qmode", "nh", "out", "workers")

    sp = subs.add_parser("degrade", help="best confidence d' for a fixed round count")
    _add_common(sp, "p", "qprime", "n", "pattern", "map", "qmode", "nh", "json")

    sp = subs.add_parser("calibrate-q", help="compute the free-cell floor q'")
    _add_common(sp, "p", "pattern", "map", "qmode", "nh", "json")
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(load_config(args.config))
    for key, value in vars(args).items():
        if value is not None or key not in merged:
            merged[key] = value
    return argparse.Namespace(**merged)


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def _sensor(args) -> SensorModel:
    _need(args, "p")
    return SensorModel.uniform(args.p, Neighborhood.from_keyword(args.nh), QMode(args.qmode))


def _q_prime(args) -> float:
    """q' from --qprime, else from --map, else from --pattern."""
    if getattr(args, "qprime", None) is not None:
        return args.qprime
    sensor = _sensor(args)
    if getattr(args, "map", None):
        knowledge = PatternKnowledge.explicit(read_map(args.map, GroundTruthMap))
    elif args.pattern == "lines":
        knowledge = PatternKnowledge.SEPARATED_LINES
    elif args.pattern is not None:
        knowledge = PatternKnowledge.NOTHING
    else:
        raise UsageError("give --qprime, --pattern or --map")
    return q_floor(sensor.de, knowledge, sensor.qmode)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args) -> int:
    _need(args, "p", "d")
    params = ConfidenceParams(args.p, _q_prime(args), args.d)
    try:
        result = make_plan(params, args.n)
    except InfeasibleRounds as exc:
        print(f"error: {exc}; see `gridfuse degrade`", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(result.as_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    r = result.as_dict()
    print(f"p={r['p']:.6g}  q'={r['q_prime']:.6g}  d={r['d']:.6g}")
    print(f"a={r['a']:.6f}  b={r['b']:.6f}")
    print(f"N(d)={r['n_required']}  (planning for N={r['n']})")
    print(f"C in [{r['c_low']:.6f}, {r['c_high']:.6f}]  chosen C={r['c_chosen']:.6f}"
          f"  (fuse 1 when count >= {r['count_threshold']})")
    print(f"exact binomial confidence: obstacle={r['exact_confidence_obstacle']:.6f}"
          f"  free={r['exact_confidence_free']:.6f}")
    if min(r["exact_confidence_obstacle"], r["exact_confidence_free"]) < r["d"]:
        print("note: exact binomial confidence falls below d at this N (Gaussian approximation gap)")
    return EXIT_OK


def cmd_fuse(args) -> int:
    if not args.maps:
        raise UsageError("no observation map files given")
    observations = [read_map(path, ObservationMap) for path in args.maps]
    mean = fuse_mod.mean_map(observations)
    if args.ml:
        _need(args, "p", "q")
        if args.p + args.q <= 1.0:
            raise UsageError(f"p+q must exceed 1 for the ML rule (got p={args.p}, q={args.q})")
        fused = fuse_mod.fuse_max_likelihood(observations, args.p, args.q)
    else:
        _need(args, "c")
        fused = fuse_mod.fuse_threshold(mean, args.c)
    _emit(serialize_map(fused), args.out)
    if args.pgm:
        with open(args.pgm, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_pgm(fused))
    report = sys.stdout if args.out else sys.stderr
    print(f"fused {mean.n} maps ({mean.height}x{mean.width}); count histogram:", file=report)
    for count, cells in fuse_mod.count_histogram(mean).items():
        print(f"  {count}/{mean.n}: {cells} cells", file=report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _need(args, "p", "d")
    if args.pattern == "none":
        raise UsageError("simulate needs a concrete pattern: random, lines or empty")
    config = ScenarioConfig(
        width=args.width,
        height=args.height,
        sensor=_sensor(args),
        d=args.d,
        pattern=args.pattern or "random",
        density=args.density,
        spacing=args.spacing,
        rounds=None if args.rounds == "auto" else args.rounds,
        trials=args.trials,
        master_seed=args.seed,
        ml=bool(args.ml),
        q_prime=args.qprime,
        workers=args.workers,
    )
    stats = run_monte_carlo(config)
    _emit(stats.to_json(), args.out)
    for name, rec in stats.classes.items():
        flag = "ok" if rec.within_3sigma else "DISAGREE"
        print(f"{name:22s} empirical={rec.empirical:.6f} predicted={rec.predicted:.6f} "
              f"z={rec.z:+.2f} {flag}", file=sys.stderr)
    print(f"runtime {stats.runtime_s:.2f}s", file=sys.stderr)
    return EXIT_OK if stats.agreement else EXIT_DISAGREE


def cmd_degrade(args) -> int:
    _need(args, "p", "n")
    d_prime, c = achievable_confidence(args.p, _q_prime(args), args.n)
    if args.json:
        print(json.dumps({"d_prime": d_prime, "c": c, "n": args.n}, indent=2, sort_keys=True))
    else:
        print(f"N={args.n}  d'={d_prime:.6f}  C={c:.6f}")
    return EXIT_OK


def cmd_calibrate_q(args) -> int:
    if not args.map and args.pattern is None:
        raise UsageError("give --pattern or --map")
    args.qprime = None
    q = _q_prime(args)
    if args.json:
        print(json.dumps({"q_prime": q}))
    else:
        print(f"q'={q:.12g}")
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "fuse": cmd_fuse,
    "simulate": cmd_simulate,
    "degrade": cmd_degrade,
    "calibrate-q": cmd_calibrate_q,
}


def main(argv=None) -> int:
    parser = build_parser()
    raw = parser.parse_args(argv)
    try:
        args = _resolve(raw)
        return COMMANDS[args.command](args)
    except (GridFuseError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
