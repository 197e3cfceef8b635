"""Oracle checks: closed forms against brute-force sampling, the missed-detection
integral against a simulated detector, and exact accounting over random runs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from . import channel
from .params import AttackerPolicy, SystemConfig
from .sensing import DetectorSpec, decide, noise_factors, p_md_analytic
from .sim import SimFlags, SlotTrace, run


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    reference: float
    tolerance: float

    @property
    def delta(self) -> float:
        return self.value - self.reference

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: got {self.value:.6g}, expected {self.reference:.6g}, "
                f"delta {self.delta:+.3g} (tol {self.tolerance:.3g})")


CHANNEL_GRID = {"R": (0.5, 1.0, 2.0), "gamma": (1.0, 10.0), "rho": (0.0, 0.5, 1.0)}


def channel_checks(seed: int = 0, n: int = 1_000_000, n_se: float = 3.0,
                   grid: dict = CHANNEL_GRID) -> list[Check]:
    """Each closed form against the empirical frequency of its event.

    The jamming power is taken equal to Alice's SNR at each grid point; all
    variances are 1. Tolerance is ``n_se`` binomial standard errors.
    """
    rng = np.random.default_rng(seed)
    g_ab = channel.exponential_gains(rng, 1.0, n)
    g_ae = channel.exponential_gains(rng, 1.0, n)
    g_eb = channel.exponential_gains(rng, 1.0, n)
    checks = []
    for R, gamma, rho in itertools.product(grid["R"], grid["gamma"], grid["rho"]):
        tag = f"R={R:g},gamma={gamma:g},rho={rho:g}"
        cases = {
            "p1_connection": (channel.p1_connection(R, gamma, 1.0),
                              channel.rate_ab(g_ab, gamma) >= R),
            "p_secrecy_nojam": (channel.p_secrecy_nojam(R, gamma, rho, 1.0, 1.0),
                                channel.secrecy_rate_nojam(g_ab, g_ae, gamma, rho) >= R),
            "p2_jammed": (channel.p2_jammed(R, gamma, gamma, 1.0, 1.0),
                          channel.jammed_rate(g_ab, g_eb, gamma, gamma) >= R),
            "p3_eve_link": (channel.p3_eve_link(R, gamma, 1.0),
                            channel.rate_ab(g_ae, gamma) >= R),
        }
        for name, (closed, event) in cases.items():
            mc = float(np.count_nonzero(event)) / n
            tol = n_se * channel.binomial_se(closed, n)
            checks.append(Check(f"{name}[{tag}]", abs(mc - closed) <= tol, mc, closed, tol))
    return checks


DETECTOR_GRID = {"N": (10, 100), "P_FA": (0.05, 0.1), "gamma_tilde": (1.0, 10.0)}


def detector_checks(seed: int = 0, n: int = 1_000_000, tol: float = 0.01,
                    grid: dict = DETECTOR_GRID, method: str = "gaussian") -> list[Check]:
    """Missed-detection integral against a detector simulated over Rayleigh gains,
    plus false-alarm calibration (3 binomial SE) with Alice silent."""
    checks = []
    for k, (N, pfa, g) in enumerate(itertools.product(grid["N"], grid["P_FA"],
                                                      grid["gamma_tilde"])):
        spec = DetectorSpec(N_samples=N, P_FA=pfa, gamma_tilde_A=g, gamma_A=1.0, method=method)
        rng = np.random.default_rng([seed, k])
        snr = channel.exponential_gains(rng, g, n)
        declared = decide(True, snr, noise_factors(rng, spec, n), spec.threshold)
        p_md_hat = 1.0 - float(np.count_nonzero(declared)) / n
        tag = f"N={N},P_FA={pfa:g},gamma_tilde={g:g}"
        analytic = p_md_analytic(spec)
        checks.append(Check(f"p_md[{tag}]", abs(p_md_hat - analytic) <= tol,
                            p_md_hat, analytic, tol))
        idle = decide(False, 0.0, noise_factors(rng, spec, n), spec.threshold)
        fa_hat = float(np.count_nonzero(idle)) / n
        fa_tol = 3.0 * channel.binomial_se(pfa, n)
        checks.append(Check(f"p_fa[{tag}]", abs(fa_hat - pfa) <= fa_tol, fa_hat, pfa, fa_tol))
    return checks


def trace_violations(tr: SlotTrace, E_const: float, initial_queue: int = 0) -> dict:
    """Count slots breaking the battery recursion, nonnegativity, affordability
    or queue balance. The recursion is recomputed with the engine's arithmetic."""
    b = tr.battery
    recomputed = b[:-1] - tr.e_out + tr.e_h + E_const
    q_prev = np.concatenate(([initial_queue], tr.queue[:-1]))
    q_expected = q_prev + tr.arrivals.astype(np.int64) - tr.delivered.astype(np.int64)
    return {
        "recursion": int(np.count_nonzero(recomputed != b[1:])),
        "negative_battery": int(np.count_nonzero(b < 0)),
        "unaffordable": int(np.count_nonzero(tr.e_out > b[:-1])),
        "negative_inflow": int(np.count_nonzero(tr.e_h < 0)),
        "queue_step": int(np.count_nonzero(q_expected != tr.queue)),
        "negative_queue": int(np.count_nonzero(tr.queue < 0)),
        "queue_balance": int(initial_queue + int(tr.arrivals.sum())
                             - int(tr.delivered.sum()) != int(tr.queue[-1])),
    }


def random_case(rng: np.random.Generator) -> tuple[SystemConfig, AttackerPolicy, SimFlags]:
    """A random valid (config, policy, flags) triple that exercises every battery regime."""
    T = float(rng.choice([1e-4, 1e-3, 1e-2]))
    P_J = float(rng.uniform(0.5, 20.0))
    config = SystemConfig(
        P_A=float(rng.uniform(0.5, 30.0)),
        P_J=P_J,
        P_d=float(rng.uniform(0.0, P_J)),
        lambda_A=float(rng.uniform(0.0, 1.0)),
        alpha_A=float(rng.uniform(0.0, 1.0)),
        eta=float(rng.uniform(0.0, 1.0)),
        T_slot=T,
        b_bits=float(rng.uniform(0.2, 3.0)) * 1e6 * T,
        E_const=float(rng.choice([0.0, rng.uniform(0.0, 1e-3)])),
        sigma2_AB=float(rng.uniform(0.2, 3.0)),
        sigma2_AE=float(rng.uniform(0.2, 3.0)),
        sigma2_EB=float(rng.uniform(0.2, 3.0)),
    )
    policy = AttackerPolicy(
        alpha_E=float(rng.uniform()),
        rho=float(rng.uniform()),
        sensing_enabled=bool(rng.integers(2)),
        tau=float(rng.uniform(1e-6, 1.0)) * T,
        P_FA_target=float(rng.uniform(0.01, 0.5)),
    )
    policy = replace(policy, tau=max(policy.tau, 1e-6))
    flags = SimFlags(
        eve_starved_secrecy=str(rng.choice(["as-written", "link-based"])),
        jam_success_departs=bool(rng.integers(2)),
        detector=str(rng.choice(["gaussian", "exact"])),
        initial_queue=int(rng.integers(0, 5)),
        initial_battery=float(rng.choice([0.0, rng.uniform(0.0, 0.05)])),
    )
    return config, policy, flags


def conservation_fuzz(seed: int = 0, n_cases: int = 10_000, n_slots: int = 1_000) -> dict:
    """Total violations of each accounting identity over random runs."""
    rng = np.random.default_rng(seed)
    totals: dict = {}
    slots = 0
    for case in range(n_cases):
        config, policy, flags = random_case(rng)
        report = run(config, policy, seed=(seed, case), n_slots=n_slots, flags=flags,
                     keep_trace=True)
        for key, v in trace_violations(report.trace, config.E_const,
                                       flags.initial_queue).items():
            totals[key] = totals.get(key, 0) + v
        slots += n_slots
    totals["slots"] = slots
    return totals


def run_all(seed: int = 0, quick: bool = False) -> list[Check]:
    n = 200_000 if quick else 1_000_000
    checks = channel_checks(seed, n) + detector_checks(seed, n)
    fuzz = conservation_fuzz(seed, 500 if quick else 10_000, 1_000)
    bad = sum(v for k, v in fuzz.items() if k != "slots")
    checks.append(Check(f"conservation[{fuzz['slots']} slots]", bad == 0, float(bad), 0.0, 0.0))
    return checks


def summarize(checks: Iterable[Check]) -> tuple[int, int]:
    checks = list(checks)
    return sum(c.passed for c in checks), len(checks)
