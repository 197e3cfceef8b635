"""Offline grid search for Eve's split ratio, jam probability and sensing window."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import analytics
from .params import AttackerPolicy, ConfigError, SystemConfig, derive
from .sensing import detector_spec
from .sim import RandomStreams, SimFlags, run, seed_key

OBJECTIVES = ("simulation", "semi_analytic")

# (rho, alpha_E, tau or None) -> (value, ci half-width)
Evaluator = Callable[[float, float, Optional[float]], "tuple[float, float]"]


@dataclass(frozen=True)
class GridSpec:
    M: int = 11
    optimize_tau: bool = False
    objective: str = "simulation"
    n_slots: int = 100_000
    workers: int = 1

    def validate(self) -> None:
        if self.M < 2:
            raise ConfigError("grid needs at least two points per axis")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}")
        if self.n_slots < 1 or self.workers < 1:
            raise ConfigError("n_slots and workers must be positive")


@dataclass
class GridResult:
    rho_axis: np.ndarray
    alpha_E_axis: np.ndarray
    tau_axis: Optional[np.ndarray]
    surface: np.ndarray            # indexed [rho, alpha_E(, tau)]
    ci: np.ndarray
    best_index: tuple
    best_value: float
    best_ci: float
    seeds: dict = field(default_factory=dict)
    failed: list = field(default_factory=list)

    @property
    def best_point(self) -> dict:
        point = {"rho": float(self.rho_axis[self.best_index[0]]),
                 "alpha_E": float(self.alpha_E_axis[self.best_index[1]])}
        if self.tau_axis is not None:
            point["tau"] = float(self.tau_axis[self.best_index[2]])
        return point

    @property
    def n_cells(self) -> int:
        return int(self.surface.size)

    def best_policy(self, base: AttackerPolicy) -> AttackerPolicy:
        return replace(base, **self.best_point)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            header = ["rho", "alpha_E"] + (["tau"] if self.tau_axis is not None else [])
            w.writerow(header + ["mu_sec", "ci"])
            for idx in np.ndindex(self.surface.shape):
                row = [repr(float(self.rho_axis[idx[0]])), repr(float(self.alpha_E_axis[idx[1]]))]
                if self.tau_axis is not None:
                    row.append(repr(float(self.tau_axis[idx[2]])))
                row += [repr(float(self.surface[idx])), repr(float(self.ci[idx]))]
                w.writerow(row)


def grid_axes(spec: GridSpec, T_slot: float):
    unit = np.linspace(0.0, 1.0, spec.M)
    tau = T_slot * np.arange(1, spec.M + 1) / spec.M if spec.optimize_tau else None
    return unit, unit.copy(), tau


def search(evaluate: Evaluator, rho_axis, alpha_axis, tau_axis=None, workers: int = 1
           ) -> GridResult:
    """Evaluate every cell and return the argmin.

    Ties go to the smallest rho, then alpha_E, then tau. A cell whose
    evaluation raises is recorded in ``failed`` and left as NaN.
    """
    shape = (len(rho_axis), len(alpha_axis)) + ((len(tau_axis),) if tau_axis is not None else ())
    surface = np.full(shape, np.nan)
    ci = np.full(shape, np.nan)
    cells = list(np.ndindex(shape))

    def job(idx):
        tau = float(tau_axis[idx[2]]) if tau_axis is not None else None
        try:
            return idx, evaluate(float(rho_axis[idx[0]]), float(alpha_axis[idx[1]]), tau), None
        except Exception as exc:  # recorded per cell, never silently skipped
            return idx, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, cells))
    else:
        results = [job(idx) for idx in cells]

    failed = []
    for idx, res, err in results:
        if err is not None:
            failed.append({"index": [int(i) for i in idx], "error": err})
            continue
        surface[idx], ci[idx] = res

    best_idx, best_val = None, math.inf
    for idx in cells:  # np.ndindex order is the tie-break order
        v = surface[idx]
        if not np.isnan(v) and v < best_val:
            best_idx, best_val = idx, float(v)
    if best_idx is None:
        raise RuntimeError("every grid cell failed")
    return GridResult(np.asarray(rho_axis, float), np.asarray(alpha_axis, float),
                      None if tau_axis is None else np.asarray(tau_axis, float),
                      surface, ci, best_idx, best_val, float(ci[best_idx]), failed=failed)


def grid_search(config: SystemConfig, spec: GridSpec, base_seed=0,
                base_policy: AttackerPolicy = AttackerPolicy(), flags: SimFlags = SimFlags(),
                streams: Optional[RandomStreams] = None) -> GridResult:
    """Minimise Eve's objective (secure throughput) over the grid.

    Every cell is simulated on the same random streams (common random numbers).
    """
    spec.validate()
    if spec.optimize_tau and not base_policy.sensing_enabled:
        raise ConfigError("optimising tau requires a sensing policy")
    derived = derive(config)
    if streams is None:
        streams = RandomStreams.draw(base_seed, spec.n_slots)

    def evaluate(rho: float, alpha_E: float, tau: Optional[float]):
        policy = replace(base_policy, rho=rho, alpha_E=alpha_E,
                         **({"tau": tau} if tau is not None else {}))
        report = run(config, policy, n_slots=spec.n_slots, flags=flags, streams=streams)
        if spec.objective == "simulation":
            return report.mu_sec_hat, report.ci_halfwidths["mu_sec"]
        det = (detector_spec(config, policy, derived, flags.detector, flags.sample_rule)
               if policy.sensing_enabled else None)
        credit = analytics.slot_credit_probs(config, derived, policy,
                                             flags.eve_starved_secrecy, det)
        value = analytics.slot_secure_throughput(derived.alpha_A, alpha_E,
                                                 report.state_probs, credit)
        return value, report.ci_halfwidths["mu_sec"]

    rho_axis, alpha_axis, tau_axis = grid_axes(spec, config.T_slot)
    result = search(evaluate, rho_axis, alpha_axis, tau_axis, workers=spec.workers)
    result.seeds = {"base_seed": seed_key(base_seed), "streams_seed": seed_key(streams.seed),
                    "common_random_numbers": True, "n_slots": spec.n_slots}
    return result
