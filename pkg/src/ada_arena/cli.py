"""``ada-arena`` command line.

Examples::

    ada-arena attack natural --n 50 --c 20 --trials 200 --seed 1
    ada-arena attack balanced --n 50 --c 20 --lambda 16 --ibe compact --trials 100
    ada-arena ka --n 50 --alpha 0.01 --beta 1 --trials 20
    ada-arena gl --mb 8 --n 200 --oracle-error 0.24
    ada-arena calibrate --n 50 --c 20

Exit codes: 0 success, 2 configuration error, 3 ``--assert`` threshold missed.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import ExperimentConfig, check_threshold, run_experiment, sweep, sweep_csv, write_text
from .mechanisms import ConfigError

log = logging.getLogger("ada_arena")

EXIT_CONFIG = 2
EXIT_ASSERT = 3

# CLI dest -> ExperimentConfig field
FIELDS = {
    "n": "n", "rounds": "rounds", "ell": "ell", "c": "c", "lam": "lam", "ibe": "scheme",
    "mechanism": "mechanism", "sigma": "sigma", "tau": "tau", "trials": "trials", "seed": "seed",
    "alpha": "alpha", "beta": "beta", "mb": "mb", "oracle_error": "oracle_error", "m": "m",
    "workers": "workers", "out": "output",
}
TYPES = {"n": int, "rounds": int, "ell": int, "c": int, "lam": int, "trials": int, "seed": int,
         "mb": int, "m": int, "workers": int, "sigma": float, "tau": float, "alpha": float,
         "beta": float, "oracle_error": float}

COMMAND_KINDS = {
    "natural": "natural_attack", "natural_attack": "natural_attack",
    "balanced": "balanced_attack", "balanced_attack": "balanced_attack",
    "dp": "dp_baseline", "dp_baseline": "dp_baseline",
    "approx": "approx_agreement", "approx_agreement": "approx_agreement",
    "ka": "weak_ka", "weak_ka": "weak_ka",
    "gl": "gl_decode", "gl_decode": "gl_decode",
    "ibe": "ibe_selftest", "ibe_selftest": "ibe_selftest",
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment. Keys mirror the long flags."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            key = "lam" if key == "lambda" else key
            if key not in FIELDS and key != "kind":
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = TYPES.get(key, str)(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def _common(p: argparse.ArgumentParser):
    # defaults stay None so config-file values are only overridden by explicit flags
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--rounds", type=int, help="fingerprinting budget (default: calibrated)")
    p.add_argument("--ell", type=int, help="game length for dp (default n)")
    p.add_argument("--c", type=int, help="domain multiplier, m = c*n")
    p.add_argument("--lambda", dest="lam", type=int, help="IBE security parameter")
    p.add_argument("--ibe", choices=["trivial", "compact"])
    p.add_argument("--mechanism", help="empirical|gaussian|oracle|zero|natural:<inner>|decrypt-everything")
    p.add_argument("--sigma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--mb", type=int)
    p.add_argument("--oracle-error", dest="oracle_error", type=float)
    p.add_argument("--m", type=int, help="identity count for the IBE self-test")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV path (default $ADA_ARENA_OUT/<kind>.csv)")
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit 3 if the rate misses the kind's acceptance threshold")
    p.add_argument("--threshold", type=float, help="override the --assert threshold")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ada-arena", description="Balanced-adversary ADA experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    attack = sub.add_parser("attack", help="run the natural or balanced attack")
    attack.add_argument("target", choices=["natural", "balanced"])
    _common(attack)
    for name, aliases, text in [
        ("natural", ["natural_attack"], "fingerprinting attack on natural mechanisms"),
        ("balanced", ["balanced_attack"], "IBE-wrapped balanced attack"),
        ("dp", ["dp_baseline"], "Gaussian baseline against the fingerprinting attack"),
        ("approx", ["approx_agreement"], "approximate agreement from the balanced adversary"),
        ("ka", ["weak_ka"], "weak key agreement via bucketing"),
        ("gl", ["gl_decode"], "Goldreich-Levin decoding with a noisy oracle"),
        ("ibe", ["ibe_selftest"], "IBE completeness self-test"),
    ]:
        _common(sub.add_parser(name, aliases=aliases, help=text))

    sw = sub.add_parser("sweep", help="grid over n, rounds, c, sigma")
    _common(sw)
    sw.add_argument("--kind", default="natural_attack")
    sw.add_argument("--grid-n", type=int, nargs="+")
    sw.add_argument("--grid-rounds", type=int, nargs="+")
    sw.add_argument("--grid-c", type=int, nargs="+")
    sw.add_argument("--grid-sigma", type=float, nargs="+")

    cal = sub.add_parser("calibrate", help="recommend tau and the round budget per (n, c)")
    cal.add_argument("--n", type=int, nargs="+", default=[20, 50, 200])
    cal.add_argument("--c", type=int, default=20)
    cal.add_argument("--taus", type=float, nargs="+", default=[3.5, 4.0, 4.5, 5.0])
    cal.add_argument("--trials", type=int, default=50)
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--out", help="write the table as CSV")
    return parser


def config_from_args(kind: str, args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    values.pop("kind", None)
    for dest, name in FIELDS.items():
        flag = getattr(args, dest, None)
        if flag is not None:
            values[dest] = flag
    return ExperimentConfig(kind, **{FIELDS[k]: v for k, v in values.items()})


def _calibrate(args) -> int:
    from .fingerprint import calibrate

    lines = ["n,c,tau,rounds,full_quantile,full_median,false_mean,max_nonmember_z"]
    for n in args.n:
        res = calibrate(n, args.c, taus=tuple(args.taus), trials=args.trials, seed=args.seed)
        for tau, row in res["table"].items():
            lines.append(f"{n},{args.c},{tau},{res['rounds'] if tau == res['tau'] else ''},"
                         f"{row['full_quantile']},{row['full_median']},{row['false_mean']},{row['max_nonmember_z']}")
        print(f"n={n} c={args.c}: recommended tau={res['tau']} rounds={res['rounds']}")
    text = "\n".join(lines) + "\n"
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "calibrate":
            return _calibrate(args)
        if args.command == "sweep":
            cfg = config_from_args(args.kind, args)
            grid = {"n": args.grid_n, "rounds": args.grid_rounds, "c": args.grid_c, "sigma": args.grid_sigma}
            text = sweep_csv(sweep(cfg, grid))
            if args.out:
                write_text(args.out, text)
            else:
                sys.stdout.write(text)
            return 0
        kind = COMMAND_KINDS[args.target if args.command == "attack" else args.command]
        cfg = config_from_args(kind, args)
    except (ConfigError, OSError) as exc:
        print(f"ada-arena: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    summary = run_experiment(cfg)
    summary.extra.pop("csv", None)
    if kind == "balanced_attack":
        from .balanced import balanced_domain
        from .ibe import make_scheme

        k = balanced_domain(make_scheme(cfg.scheme), cfg.n, cfg.lam, cfg.c).key_bits
        summary.extra["ell"] = f"{summary.rows[0].get('ell', '?')} (k={k} + rounds)"
    print(summary.line())
    if args.check and not check_threshold(summary, args.threshold):
        print("ada-arena: acceptance threshold missed", file=sys.stderr)
        return EXIT_ASSERT
    return 0


if __name__ == "__main__":
    sys.exit(main())
