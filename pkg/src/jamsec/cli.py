"""Command-line entry point: ``jamsec {run,fig1,optimize,validate}``.

Exit codes: 0 ok, 1 usage, 2 configuration or I/O error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import validation
from .attacker_opt import OBJECTIVES, GridSpec, grid_search
from .experiments import MODES, POLICY_SOURCES, SweepSpec, csv_columns, sweep, write_rows, write_svg
from .params import AttackerPolicy, ConfigError, SystemConfig, load_config
from .sensing import DETECTOR_METHODS, SAMPLE_RULES
from .sim import SimFlags, run

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2, 3

log = logging.getLogger("jamsec")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _float_or_auto(text: str):
    if text.lower() == "auto":
        return None
    return float(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file ([system], [attacker] sections)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--slots", type=int, default=100_000, help="slots per simulation")
    p.add_argument("--burn-in", type=float, default=0.1, help="fraction of slots discarded")
    p.add_argument("--sense", dest="sense", action="store_true", default=None,
                   help="Eve senses Alice's activity before decoding")
    p.add_argument("--no-sense", dest="sense", action="store_false")
    p.add_argument("--eve-starved-secrecy", choices=("as-written", "link-based"),
                   default="as-written")
    p.add_argument("--jam-departs", action="store_true",
                   help="a packet that survives jamming leaves the queue")
    p.add_argument("--detector", choices=DETECTOR_METHODS, default="gaussian")
    p.add_argument("--sample-rule", choices=SAMPLE_RULES, default="nyquist")
    p.add_argument("--out", help="output path")
    p.add_argument("-v", "--verbose", action="store_true")
    sysgrp = p.add_argument_group("system overrides")
    for f in fields(SystemConfig):
        conv = _float_or_auto if f.name == "alpha_A" else float
        sysgrp.add_argument(_flag(f.name), dest=f"sys_{f.name}", type=conv, default=argparse.SUPPRESS,
                            metavar="X")
    polgrp = p.add_argument_group("attacker overrides")
    for name in ("alpha_E", "rho", "tau", "P_FA_target"):
        polgrp.add_argument(_flag(name), dest=f"pol_{name}", type=float,
                            default=argparse.SUPPRESS, metavar="X")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-M", type=int, default=11, help="grid points per axis")
    p.add_argument("--optimize-tau", action="store_true", help="also search the sensing window")
    p.add_argument("--objective", choices=OBJECTIVES, default="simulation")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jamsec", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", allow_abbrev=False, help="simulate one configuration and write a JSON report")
    _add_common(p)
    p.add_argument("--no-eve", action="store_true", help="simulate without the attacker")

    p = sub.add_parser("fig1", allow_abbrev=False, help="secure throughput versus arrival rate, CSV output")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--lambdas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
                   help="comma-separated arrival probabilities")
    p.add_argument("--modes", default=",".join(MODES))
    p.add_argument("--policy-source", choices=POLICY_SOURCES, default="optimized")
    p.add_argument("--svg", help="also write a line plot here")

    p = sub.add_parser("optimize", allow_abbrev=False, help="grid-search Eve's policy, CSV surface output")
    _add_common(p)
    _add_grid(p)

    p = sub.add_parser("validate", allow_abbrev=False, help="closed forms and accounting against oracles")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--quick", action="store_true", help="smaller samples for a fast check")
    return parser


def _load(args) -> tuple[SystemConfig, AttackerPolicy, SimFlags]:
    if args.config:
        config, policy = load_config(args.config)
    else:
        config, policy = SystemConfig(), AttackerPolicy()
    sys_over = {k[4:]: v for k, v in vars(args).items() if k.startswith("sys_")}
    pol_over = {k[4:]: v for k, v in vars(args).items() if k.startswith("pol_")}
    if sys_over:
        config = config.with_overrides(**sys_over)
    if args.sense is not None:
        pol_over["sensing_enabled"] = args.sense
    if pol_over:
        policy = replace(policy, **pol_over)
    config.validate()
    policy.validate(config)
    flags = SimFlags(
        eve_starved_secrecy=args.eve_starved_secrecy,
        jam_success_departs=args.jam_departs,
        eve_present=not getattr(args, "no_eve", False),
        burn_in=args.burn_in,
        detector=args.detector,
        sample_rule=args.sample_rule,
    )
    flags.validate()
    if args.slots < 1:
        raise ConfigError("--slots must be positive")
    return config, policy, flags


def _json_default(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    raise TypeError(type(obj).__name__)


def cmd_run(args) -> int:
    config, policy, flags = _load(args)
    report = run(config, policy, seed=args.seed, n_slots=args.slots, flags=flags)
    out = Path(args.out or "report.json")
    payload = {"config": {f.name: getattr(config, f.name) for f in fields(config)},
               "policy": {f.name: getattr(policy, f.name) for f in fields(policy)},
               "flags": {f.name: getattr(flags, f.name) for f in fields(flags)},
               "report": report.to_dict()}
    out.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n",
                   encoding="utf-8")
    ci = report.ci_halfwidths
    print(f"mu_A={report.mu_A_hat:.4f}±{ci['mu_A']:.4f} "
          f"mu_sec={report.mu_sec_hat:.4f}±{ci['mu_sec']:.4f} "
          f"alpha_A={report.alpha_A:.4f} queue_mean={report.queue_mean:.2f} -> {out}")
    return EXIT_OK


def _grid_spec(args) -> GridSpec:
    return GridSpec(M=args.grid_M, optimize_tau=args.optimize_tau, objective=args.objective,
                    n_slots=args.slots, workers=args.workers)


def cmd_fig1(args) -> int:
    config, policy, flags = _load(args)
    try:
        lambdas = tuple(float(x) for x in args.lambdas.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"--lambdas: not a number list: {args.lambdas!r}") from None
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    grid = _grid_spec(args)
    grid.validate()
    spec = SweepSpec("lambda_A", lambdas, args.policy_source, args.out)
    rows = sweep(config, spec, modes, policy=policy, seed=args.seed, n_slots=args.slots,
                 flags=flags, grid=grid)
    out = Path(args.out or "fig1.csv")
    write_rows(rows, out, csv_columns("lambda_A"))
    if args.svg:
        write_svg(rows, args.svg)
    for row in rows:
        print(f"lambda_A={row['lambda_A']:.3g} {row['mode']:<15} "
              f"mu_sec={row['mu_sec']:.4f}±{row['ci']:.4f}")
    print(f"{len(rows)} rows -> {out}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    config, policy, flags = _load(args)
    spec = _grid_spec(args)
    result = grid_search(config, spec, base_seed=args.seed, base_policy=policy, flags=flags)
    out = Path(args.out or "surface.csv")
    result.write_csv(out)
    point = " ".join(f"{k}={v:.4g}" for k, v in result.best_point.items())
    print(f"best {point} mu_sec={result.best_value:.4f}±{result.best_ci:.4f} "
          f"({result.n_cells} cells, {len(result.failed)} failed) -> {out}")
    for cell in result.failed:
        print(f"failed cell {cell['index']}: {cell['error']}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    checks = validation.run_all(args.seed, quick=args.quick)
    for c in checks:
        print(c.line())
    passed, total = validation.summarize(checks)
    print(f"{passed}/{total} checks passed")
    return EXIT_OK if passed == total else EXIT_VALIDATION


COMMANDS = {"run": cmd_run, "fig1": cmd_fig1, "optimize": cmd_optimize,
            "validate": cmd_validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"jamsec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"jamsec: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
