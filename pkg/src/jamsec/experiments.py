"""Parameter sweeps (secure throughput versus arrival rate) and a tiny SVG plotter."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .attacker_opt import GridSpec, grid_search
from .params import AttackerPolicy, ConfigError, InfeasibleError, SystemConfig, derive
from .sim import RandomStreams, SimFlags, run

log = logging.getLogger(__name__)

MODES = ("no_attack", "attack_nosense", "attack_sense")
POLICY_SOURCES = ("optimized", "fixed")
RESULT_COLUMNS = ["mode", "mu_sec", "ci", "alpha_A", "rho", "alpha_E", "tau",
                  "mu_A", "queue_mean"]


def csv_columns(parameter: str = "lambda_A") -> list[str]:
    return [parameter] + RESULT_COLUMNS


@dataclass(frozen=True)
class SweepSpec:
    parameter: str = "lambda_A"
    values: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    policy_source: str = "optimized"
    output: Optional[str] = None

    def validate(self) -> None:
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.parameter not in {f.name for f in fields(SystemConfig)}:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}")
        if self.policy_source not in POLICY_SOURCES:
            raise ConfigError(f"policy source must be one of {POLICY_SOURCES}")


def _point_config(config: SystemConfig, parameter: str, value: float) -> SystemConfig:
    cfg = config.with_overrides(**{parameter: value})
    try:
        derive(cfg)
    except InfeasibleError as exc:
        # the access rule has no stabilising choice: Alice transmits whenever she can
        log.warning("%s=%g: %s; using alpha_A = 1", parameter, value, exc)
        cfg = cfg.with_overrides(alpha_A=1.0)
    return cfg


def sweep(config: SystemConfig, spec: SweepSpec, modes: Sequence[str] = MODES,
          policy: AttackerPolicy = AttackerPolicy(), seed: int = 0, n_slots: int = 100_000,
          flags: SimFlags = SimFlags(), grid: GridSpec = GridSpec()) -> list[dict]:
    """One row per (value, mode). Every mode at a point shares the point's random streams."""
    spec.validate()
    bad = set(modes) - set(MODES)
    if bad:
        raise ConfigError(f"unknown mode(s) {sorted(bad)}")
    grid = replace(grid, n_slots=n_slots)
    rows = []
    for i, value in enumerate(spec.values):
        cfg = _point_config(config, spec.parameter, float(value))
        streams = RandomStreams.draw((seed, i), n_slots)
        for mode in modes:
            if mode == "no_attack":
                pol = replace(policy, alpha_E=0.0, rho=0.0, sensing_enabled=False)
                report = run(cfg, pol, n_slots=n_slots, streams=streams,
                             flags=replace(flags, eve_present=False))
            else:
                base = replace(policy, sensing_enabled=(mode == "attack_sense"))
                if spec.policy_source == "optimized":
                    g = grid if mode == "attack_sense" else replace(grid, optimize_tau=False)
                    result = grid_search(cfg, g, base_seed=(seed, i), base_policy=base,
                                         flags=flags, streams=streams)
                    pol = result.best_policy(base)
                else:
                    pol = base
                report = run(cfg, pol, n_slots=n_slots, streams=streams, flags=flags)
            rows.append({
                spec.parameter: float(value),
                "mode": mode,
                "mu_sec": report.mu_sec_hat,
                "ci": report.ci_halfwidths["mu_sec"],
                "alpha_A": report.alpha_A,
                "rho": pol.rho,
                "alpha_E": pol.alpha_E,
                "tau": pol.tau if pol.sensing_enabled else "",
                "mu_A": report.mu_A_hat,
                "queue_mean": report.queue_mean,
            })
            log.info("%s=%g %s mu_sec=%.4f", spec.parameter, value, mode, report.mu_sec_hat)
    return rows


def write_rows(rows: Iterable[dict], path: str | Path, columns: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_svg(rows: Sequence[dict], path: str | Path, x_key: str = "lambda_A",
              y_key: str = "mu_sec", width: int = 480, height: int = 320) -> None:
    """Line plot of y against x, one polyline per mode."""
    pad = 40
    xs = [float(r[x_key]) for r in rows]
    ys = [float(r[y_key]) for r in rows]
    x0, x1 = min(xs), max(xs)
    y1 = max(max(ys), 1e-12)
    sx = lambda x: pad + (x - x0) / ((x1 - x0) or 1.0) * (width - 2 * pad)  # noqa: E731
    sy = lambda y: height - pad - y / y1 * (height - 2 * pad)  # noqa: E731
    colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    modes = list(dict.fromkeys(r["mode"] for r in rows))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
             'stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" '
             f'font-size="12">{x_key}</text>',
             f'<text x="12" y="{pad - 12}" font-size="12">{y_key} (max {y1:.3g})</text>']
    for k, mode in enumerate(modes):
        pts = sorted((float(r[x_key]), float(r[y_key])) for r in rows if r["mode"] == mode)
        colour = colours[k % len(colours)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" '
                     f'points="{coords}"/>')
        parts.append(f'<text x="{width - pad - 110}" y="{pad + 14 * k}" font-size="11" '
                     f'fill="{colour}">{mode}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
