"""Command-line front end: ``sourcedelay {analytic,simulate,compare,sweep}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import delay, simulator
from .compare import DEFAULT_KS_THRESHOLD, compare, empirical_cdf, sweep
from .io import canonical_key, coerce, config_record, load_config, write_csv, write_json
from .params import ConfigError, NetworkConfig, validate_config
from .steady import acceptance_probability, solve_pi_omega

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


# -- argument helpers ---------------------------------------------------------

def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--f", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--slots", type=int, help="slots per replica (default: sized from --min-samples)")
    p.add_argument("--warmup", type=int, help="warm-up slots (default: 20 x analytic mean delay)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--min-samples", type=int, default=10_000)


def _config(args) -> NetworkConfig:
    overrides = {k: getattr(args, k) for k in ("n", "m", "delta", "q", "lam", "f", "M")}
    try:
        cfg = load_config(args.config, overrides)
    except (KeyError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    return validate_config(cfg)


def parse_axis(text: str) -> tuple[str, list]:
    """``name=a:b:step`` (inclusive range) or ``name=v1,v2,...``."""
    if "=" not in text:
        raise CliError(f"bad axis {text!r}; expected name=values")
    name, spec = text.split("=", 1)
    try:
        name = canonical_key(name)
        if ":" in spec:
            lo, hi, step = (float(x) for x in spec.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError("range needs lo <= hi and step > 0")
            count = int(round((hi - lo) / step)) + 1
            values = [float(f"{lo + k * step:.12g}") for k in range(count)]
        else:
            values = [v for v in spec.split(",") if v.strip()]
        values = [coerce(name, v) for v in values]
    except (KeyError, ValueError) as exc:
        raise CliError(f"bad axis {text!r}: {exc}") from exc
    if not values:
        raise CliError(f"bad axis {text!r}: no values")
    return name, values


def _default_warmup(cfg: NetworkConfig) -> int:
    try:
        return int(np.ceil(20 * delay.mean(delay.phase_type(cfg))))
    except Exception:  # analytic mean unavailable (e.g. λ = 0)
        return 0


def _simulate(cfg: NetworkConfig, args) -> simulator.EmpiricalDelay:
    warmup = args.warmup if args.warmup is not None else _default_warmup(cfg)
    if args.slots is not None:
        return simulator.run(cfg, slots=args.slots, warmup=warmup, seed=args.seed,
                             replicas=args.replicas)
    if cfg.lam <= 0:
        raise CliError("no samples: λ = 0 generates no packets")
    rate = acceptance_probability(cfg, solve_pi_omega(cfg))
    return simulator.run_until(cfg, args.min_samples, warmup=warmup, seed=args.seed,
                               replicas=args.replicas, acceptance_rate=rate)


# -- subcommands ---------------------------------------------------------------

def cmd_analytic(args) -> int:
    cfg = _config(args)
    if cfg.lam <= 0:
        raise CliError("λ > 0 required for conditional distribution")
    rep = delay.phase_type(cfg)
    u_max = args.u_max if args.u_max is not None else delay.adaptive_horizon(rep)
    F = delay.cdf_array(rep, u_max)
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(args.out / "cdf.csv", ["u", "cdf"], zip(range(u_max + 1), F), cfg)
    stats = delay.delay_stats(rep)
    payload = stats.as_dict()
    payload["config"] = config_record(cfg)
    payload["horizon"] = u_max
    write_json(args.out / "stats.json", payload)
    print(f"mean={stats.mean:.6g} variance={stats.variance:.6g} std_dev={stats.std_dev:.6g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    emp = _simulate(cfg, args)
    if emp.samples.size == 0:
        raise CliError("no samples: nothing was inserted and removed after warm-up")
    args.out.mkdir(parents=True, exist_ok=True)
    u_max = int(emp.samples.max())
    write_csv(args.out / "empirical_cdf.csv", ["u", "cdf"],
              zip(range(u_max + 1), empirical_cdf(emp.samples, u_max)), cfg)
    if args.write_samples:
        write_csv(args.out / "samples.csv", ["delay"], ((int(s),) for s in emp.samples), cfg)
    summary = emp.summary()
    summary["replicas"] = args.replicas
    summary["config"] = config_record(cfg)
    write_json(args.out / "summary.json", summary)
    print(f"samples={summary['samples']} mean={summary['mean']:.6g} "
          f"(se {summary['mean_se']:.3g}) accepted={emp.accepted} dropped={emp.dropped}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    if cfg.lam <= 0:
        raise CliError("λ > 0 required for conditional distribution")
    sim_cfg = cfg
    for item in args.sim_set or []:
        key, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError("expected KEY=VALUE")
            sim_cfg = sim_cfg.replace(**{canonical_key(key): coerce(key, value)})
        except (KeyError, ValueError) as exc:
            raise CliError(f"bad --sim-set {item!r}: {exc}") from exc
    validate_config(sim_cfg)
    rep = delay.phase_type(cfg)
    emp = _simulate(sim_cfg, args)
    if emp.samples.size == 0:
        raise CliError("no samples")
    result = compare(rep, emp, threshold=args.threshold)
    args.out.mkdir(parents=True, exist_ok=True)
    payload = result.as_dict()
    payload.update(seed=emp.seed, accepted=emp.accepted, dropped=emp.dropped,
                   config=config_record(cfg), simulated_config=config_record(sim_cfg))
    write_json(args.out / "compare.json", payload)
    verdict = "PASS" if result.passed else "FAIL"
    print(f"{verdict} ks_distance={result.ks_distance:.5f} threshold={result.threshold} "
          f"samples={result.samples} analytic_mean={result.analytic_mean:.6g} "
          f"empirical_mean={result.empirical_mean:.6g}")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _config(args)
    axes = dict(parse_axis(a) for a in args.axis)
    if not 1 <= len(axes) <= 2:
        raise CliError("sweep needs one or two --axis options")
    try:
        rows = sweep(cfg, axes, workers=args.workers)
    except ConfigError as exc:
        raise CliError(f"grid point violates bounds: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    args.out.mkdir(parents=True, exist_ok=True)
    names = list(axes)
    columns = [("lambda" if k == "lam" else k) for k in names] + ["mean", "variance", "std_dev"]
    if args.format == "csv":
        write_csv(args.out / "sweep.csv", columns,
                  ([r[k] for k in names] + [r["mean"], r["variance"], r["std_dev"]] for r in rows),
                  cfg)
    else:
        write_json(args.out / "sweep.json",
                   {"config": config_record(cfg),
                    "axes": [("lambda" if k == "lam" else k) for k in names],
                    "rows": [{("lambda" if k == "lam" else k): v for k, v in r.items()}
                             for r in rows]})
    print(f"wrote {len(rows)} grid points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sourcedelay", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="CDF and moments from the QBD model")
    _add_config_args(p)
    p.add_argument("--u-max", type=int, help="last u in the CDF table (default: adaptive horizon)")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="slot-level simulation")
    _add_config_args(p)
    _add_sim_args(p)
    p.add_argument("--write-samples", action="store_true", help="also write samples.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="KS distance between analytic and simulated CDFs")
    _add_config_args(p)
    _add_sim_args(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_KS_THRESHOLD)
    p.add_argument("--sim-set", action="append", metavar="KEY=VALUE",
                   help="override a parameter on the simulated side only")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="analytic mean/variance over a parameter grid")
    _add_config_args(p)
    p.add_argument("--axis", action="append", required=True, metavar="NAME=SPEC",
                   help="lambda=0.0005:0.005:0.0005 or M=3,5,7 (one or two axes)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, help="worker processes (default: QBD_MANET_THREADS or CPU count)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
