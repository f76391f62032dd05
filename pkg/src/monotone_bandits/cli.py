"""Command-line interface.

Exit statuses: 0 success, 1 runtime failure, 2 usage or configuration error.
The default output directory is the working directory unless
``MONOTONE_BANDITS_OUTPUT_DIR`` is set.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .env import (
    NoiseModel,
    check_lipschitz,
    check_quasiconcave,
    make_lower_bound_instance,
    make_prop1_pair,
    make_random_peak_instance,
    max_value,
    parse_instance,
    lipschitz_constant,
)
from .experiments import (
    AnalysisError,
    CsvFormatError,
    ExperimentConfig,
    fit_scaling_exponent,
    monte_carlo,
    read_csv,
    write_csv,
    write_log,
)
from .harness import MonotonicityViolation, run_episode
from .policies import ConfigurationError, EscalationPolicy, make_policy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("monotone_bandits")

OUTPUT_DIR_ENV = "MONOTONE_BANDITS_OUTPUT_DIR"


class UsageError(Exception):
    pass


def output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None


_CONFIG_KEYS = {"horizons", "replications", "sigma", "seed", "policies", "instance",
                "breakpoints", "policy_sigma", "overrides", "output", "parallelism"}


def build_config(raw: dict, args) -> tuple[ExperimentConfig, dict]:
    """Merge a config-file mapping with command-line overrides."""
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    defaults = ExperimentConfig()

    def pick(flag, key, default):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        return raw.get(key, default)

    try:
        instance = parse_instance(pick("instance", "instance", "random-peak"),
                                  raw.get("breakpoints"))
        overrides = raw.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ValueError("overrides must be a table")
        for name in ("K", "m"):
            value = getattr(args, name, None)
            target = getattr(args, "override_policy", None) or "alg1"
            if value is not None:
                overrides.setdefault(target, {})[name] = value
        config = ExperimentConfig(
            horizons=tuple(pick("horizons", "horizons", defaults.horizons)),
            replications=int(pick("replications", "replications", defaults.replications)),
            sigma=float(pick("sigma", "sigma", defaults.sigma)),
            master_seed=int(pick("seed", "seed", defaults.master_seed)),
            policies=tuple(pick("policies", "policies", defaults.policies)),
            instance=instance,
            policy_sigma=pick("policy_sigma", "policy_sigma", None),
            overrides=overrides,
        )
        config.validate()
    except (ValueError, TypeError) as exc:
        raise UsageError(f"configuration error: {exc}") from None
    extras = {"output": pick("output", "output", None),
              "parallelism": int(pick("parallelism", "parallelism", os.cpu_count() or 1))}
    return config, extras


def _progress(T):
    log.info("finished T=%d", T)


def cmd_run(args) -> int:
    raw = load_config_file(args.config) if args.config else {}
    config, extras = build_config(raw, args)
    out = Path(extras["output"]) if extras["output"] else output_dir() / "regret.csv"
    table = monte_carlo(config, parallelism=extras["parallelism"], progress=_progress)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, out)
    if args.log:
        write_log(table.records, args.log)
    print(table.summary())
    print(f"wrote {out}")
    return 0


def cmd_reproduce(args) -> int:
    config, extras = build_config({}, args)
    out = Path(extras["output"]) if extras["output"] else output_dir() / "data.csv"
    ckpt = None if args.no_checkpoint else Path(args.checkpoint_dir or str(out) + ".ckpt")
    table = monte_carlo(config, parallelism=extras["parallelism"], checkpoint_dir=ckpt,
                        progress=_progress)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, out)
    print(table.summary())
    print(f"wrote {out}")
    return 0


def cmd_validate(args) -> int:
    rng = np.random.default_rng(args.seed)
    grid = np.linspace(0.0, 1.0, 10001)
    failures = 0
    n_quasi = n_range = n_lip = 0
    for _ in range(args.count):
        f = make_random_peak_instance(rng)
        vals = f.evaluate_many(grid)
        n_quasi += check_quasiconcave(f)
        n_range += bool(np.all((vals >= 0.0) & (vals <= 1.0)))
        n_lip += check_lipschitz(f, lipschitz_constant(f))
    for label, n in (("quasiconcave", n_quasi), ("range [0,1]", n_range), ("lipschitz", n_lip)):
        pct = 100.0 * n / args.count
        print(f"random-peak {label}: {n}/{args.count} ({pct:.1f}%)")
        failures += args.count - n

    lb_ok = lb_total = 0
    for K in range(1, args.max_K + 1):
        for k in range(1, K + 1):
            f = make_lower_bound_instance(K, k)
            peak = (k - 0.5) / K
            ok = (check_lipschitz(f, 1.0) and check_quasiconcave(f)
                  and max_value(f) == (peak, peak))
            lb_ok += ok
            lb_total += 1
    print(f"lower-bound K<={args.max_K}: {lb_ok}/{lb_total} pass")
    failures += lb_total - lb_ok

    f1, f2 = make_prop1_pair()
    half = grid[grid <= 0.5]
    pair = [
        ("f1 lipschitz(2)", check_lipschitz(f1, 2.0)),
        ("f1 quasiconcave", check_quasiconcave(f1)),
        ("f2 not quasiconcave", not check_quasiconcave(f2)),
        ("f1 == f2 on [0, 0.5]", bool(np.array_equal(f1.evaluate_many(half), f2.evaluate_many(half)))),
    ]
    for label, ok in pair:
        print(f"prop1 {label}: {'pass' if ok else 'FAIL'}")
        failures += not ok
    return 0 if failures == 0 else 1


def cmd_scaling(args) -> int:
    try:
        table = read_csv(args.csv)
    except FileNotFoundError:
        raise UsageError(f"csv not found: {args.csv}") from None
    names = args.policies or table.policies
    for name in names:
        if name not in table.mean:
            raise UsageError(f"policy {name} not in {args.csv}")
        try:
            slope = fit_scaling_exponent(table, name)
        except AnalysisError as exc:
            print(f"{name}: {exc}", file=sys.stderr)
            return 1
        print(f"{name}: slope {slope:.4f}")
    return 0


def cmd_trace(args) -> int:
    try:
        spec = parse_instance(args.instance)
        f = spec.build(np.random.default_rng(args.seed))
        policy = make_policy(args.policy, instance=f, K=args.K, m=args.m)
        noise = NoiseModel(args.sigma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = sys.stdout
    print(f"# policy={policy.name} instance={f.name} T={args.T} seed={args.seed} "
          f"sigma={args.sigma}", file=out)
    seen = [0]

    def on_period(t, arm, reward):
        print(f"t={t} arm={arm:.6f} reward={reward:.6f}", file=out)
        if isinstance(policy, EscalationPolicy):
            for ev in policy.events[seen[0]:]:
                print(f"  batch k={ev['k']} arm={ev['arm']:.6f} mean={ev['mean']:.6f} "
                      f"LB={ev['lb']:.6f} UB={ev['ub']:.6f}", file=out)
                if ev["stop"]:
                    print(f"  STOP: UB_{ev['k']} < LB_i for some i < {ev['k']}; "
                          f"freeze at {ev['arm']:.6f}", file=out)
                elif ev["exhausted"]:
                    print(f"  grid exhausted; freeze at {ev['arm']:.6f}", file=out)
            seen[0] = len(policy.events)

    rec = run_episode(policy, f, noise, args.T, args.seed, policy_sigma=args.policy_sigma,
                      on_period=on_period)
    print(f"# regret={rec.regret!r} monotone={rec.monotone}", file=out)
    return 0


def _add_experiment_flags(p, with_config=True):
    if with_config:
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--policies", type=_str_list, help="comma-separated roster")
        p.add_argument("--instance", help="random-peak | lower-bound:K:k | prop1:1 | prop1:2")
        p.add_argument("--log", help="write per-episode JSON-lines log here")
    p.add_argument("--horizons", type=_int_list, help="comma-separated horizons")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--sigma", type=float, help="reward noise standard deviation")
    p.add_argument("--policy-sigma", type=float, help="noise scale given to policies")
    p.add_argument("--output", "-o", help="CSV output path")
    p.add_argument("--parallelism", "-j", type=int, help="worker processes")
    p.add_argument("--K", type=int, help="grid size override")
    p.add_argument("--m", type=int, help="batch size override (alg1)")
    p.add_argument("--override-policy", default=None,
                   help="policy that receives --K/--m (default alg1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monotone-bandits", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a Monte-Carlo experiment and write a regret CSV")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce-figure3", help="full numerical experiment, writes data.csv")
    _add_experiment_flags(p, with_config=False)
    p.add_argument("--checkpoint-dir", help="per-horizon checkpoints (default <output>.ckpt)")
    p.add_argument("--no-checkpoint", action="store_true")
    p.set_defaults(func=cmd_reproduce, policies=None, instance=None)

    p = sub.add_parser("validate-instances", help="check instance families against their assumptions")
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-K", type=int, default=20)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scaling", help="log-log regret slope per policy from a CSV")
    p.add_argument("csv")
    p.add_argument("--policies", type=_str_list)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("trace", help="print one episode period by period")
    p.add_argument("--policy", default="alg1")
    p.add_argument("--instance", default="prop1:1")
    p.add_argument("-T", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=0.1, help="reward noise")
    p.add_argument("--policy-sigma", type=float, default=None)
    p.add_argument("--K", type=int)
    p.add_argument("--m", type=int)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.debug("kernel backend: %s", kernels.BACKEND)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CsvFormatError, MonotonicityViolation, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
