"""Slot engine: arrivals, fading, Alice/Eve decisions, sensing, accounting.

Each slot runs, in order: Bernoulli arrival into Alice's queue, channel
draws, Alice's activity decision, Eve's action from her battery level,
energy detection (sensing mode, decode action only), delivery and secrecy
adjudication, Eve's energy update, and the queue departure.

All randomness for a run is drawn up front into :class:`RandomStreams`, one
independent child stream per variable. Reusing the same streams across runs
with different policies gives common random numbers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from numba import njit
from scipy import stats

from .actors import (ABSENT, JAM, SPLIT_DECODE, AliceState, EveAction, EveBattery,
                     InvariantBreach, SlotOutcome, alice_active_core, battery_step_core,
                     energy_depleted_core, energy_harvested_core, eve_action_core)
from .analytics import STARVED_SEMANTICS, StateProbs
from .params import AttackerPolicy, ConfigError, DerivedParams, SystemConfig, derive
from .sensing import DETECTOR_METHODS, SAMPLE_RULES, DetectorSpec, detector_spec


@dataclass(frozen=True)
class SimFlags:
    eve_starved_secrecy: str = "as-written"   # or "link-based"
    jam_success_departs: bool = False
    eve_present: bool = True
    burn_in: float = 0.1                      # fraction of slots excluded from estimates
    n_batches: int = 20
    detector: str = "gaussian"
    sample_rule: str = "nyquist"
    initial_queue: int = 0
    initial_battery: float = 0.0

    def validate(self) -> None:
        if self.eve_starved_secrecy not in STARVED_SEMANTICS:
            raise ConfigError(f"eve_starved_secrecy must be one of {STARVED_SEMANTICS}")
        if self.detector not in DETECTOR_METHODS:
            raise ConfigError(f"detector must be one of {DETECTOR_METHODS}")
        if self.sample_rule not in SAMPLE_RULES:
            raise ConfigError(f"sample_rule must be one of {SAMPLE_RULES}")
        if not 0.0 <= self.burn_in < 1.0:
            raise ConfigError("burn_in must be a fraction in [0, 1)")
        if self.n_batches < 2:
            raise ConfigError("need at least two batches for batch means")
        if self.initial_queue < 0 or self.initial_battery < 0:
            raise ConfigError("initial queue and battery must be nonnegative")


# --- random streams ---------------------------------------------------------

def seed_key(seed):
    """JSON-friendly form of an int or (base, index...) seed."""
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return int(seed)


_STREAM_NAMES = ("arrival", "access", "jam", "g_AB", "g_AE", "g_EB", "detector")


@dataclass
class RandomStreams:
    """Per-slot uniforms, unit-mean exponential gains and detector normals."""

    seed: object       # int, or a sequence of ints such as (base_seed, cell)
    u_arrival: np.ndarray
    u_access: np.ndarray
    u_jam: np.ndarray
    e_AB: np.ndarray
    e_AE: np.ndarray
    e_EB: np.ndarray
    z_detector: np.ndarray

    @property
    def n_slots(self) -> int:
        return len(self.u_arrival)

    @classmethod
    def draw(cls, seed, n_slots: int) -> "RandomStreams":
        children = np.random.SeedSequence(seed).spawn(len(_STREAM_NAMES))
        gens = {name: np.random.default_rng(ss) for name, ss in zip(_STREAM_NAMES, children)}

        def expo(g: np.random.Generator) -> np.ndarray:
            return -np.log1p(-g.random(n_slots))

        return cls(
            seed=seed,
            u_arrival=gens["arrival"].random(n_slots),
            u_access=gens["access"].random(n_slots),
            u_jam=gens["jam"].random(n_slots),
            e_AB=expo(gens["g_AB"]),
            e_AE=expo(gens["g_AE"]),
            e_EB=expo(gens["g_EB"]),
            # standard normals, mapped to the detector's noise factor per run
            z_detector=gens["detector"].standard_normal(n_slots),
        )


def detector_factors(z: np.ndarray, spec: DetectorSpec) -> np.ndarray:
    """Map standard normals to the detector's unit-mean noise factor."""
    N = spec.N_samples
    if spec.method == "gaussian":
        return 1.0 + z / math.sqrt(N)
    # Gamma(N, 1/N) by inversion keeps one normal per slot, preserving CRN
    return stats.gamma.ppf(stats.norm.cdf(z), N, scale=1.0 / N)


# --- compiled slot ----------------------------------------------------------

# float parameter vector layout
(P_LAMBDA, P_ALPHA_A, P_ALPHA_E, P_RHO, P_GAMMA_A, P_GAMMA_E, P_R, P_E_D, P_E_J,
 P_ETA, P_POWER_A, P_T, P_E_CONST, P_THRESHOLD, P_TAU_FRAC,
 P_S_AB, P_S_AE, P_S_EB) = range(18)
# int flag vector layout
F_SENSING, F_EVE_PRESENT, F_JAM_DEPARTS, F_LINK_BASED = range(4)


@njit(cache=True)
def _slot_core(q, level, u_arr, u_acc, u_jam, g_AB, g_AE, g_EB, det_factor, par, flg):
    gA = par[P_GAMMA_A]
    R = par[P_R]
    arrival = 1 if u_arr < par[P_LAMBDA] else 0
    q = q + arrival

    accessing = u_acc < par[P_ALPHA_A]
    link_up = math.log2(1.0 + gA * g_AB) >= R
    I_A = 1 if alice_active_core(q, u_acc, par[P_ALPHA_A], g_AB, gA, R) else 0

    if flg[F_EVE_PRESENT]:
        action = eve_action_core(level, u_jam, par[P_ALPHA_E], par[P_E_D], par[P_E_J])
    else:
        action = ABSENT

    sensing = flg[F_SENSING] != 0
    I_MD = 0
    I_D = 0
    I_FA = 0
    if sensing and action == SPLIT_DECODE:
        energy = (1.0 + gA * g_AE if I_A else 1.0) * det_factor
        declared = 1 if energy > par[P_THRESHOLD] else 0
        if I_A:
            I_D = declared
            I_MD = 1 - declared
        else:
            I_FA = declared

    jam_ok = math.log2(1.0 + gA * g_AB / (1.0 + par[P_GAMMA_E] * g_EB)) >= R
    if action == JAM:
        passes = flg[F_JAM_DEPARTS] != 0 and jam_ok
        service = accessing and passes
        delivered = I_A == 1 and passes
        credit = I_A == 1 and jam_ok
    else:
        service = accessing and link_up
        delivered = I_A == 1
        listening = action == SPLIT_DECODE and (not sensing or I_D == 1)
        if action == ABSENT:
            credit = delivered
        elif listening:
            eve_rate = math.log2(1.0 + par[P_RHO] * gA * g_AE)
            credit = delivered and math.log2(1.0 + gA * g_AB) - eve_rate >= R
        elif flg[F_LINK_BASED]:
            credit = delivered
        else:
            credit = delivered and math.log2(1.0 + gA * g_AE) >= R

    E_H = energy_harvested_core(action, I_A, g_AE, par[P_ETA], par[P_POWER_A], par[P_T],
                                par[P_RHO], sensing, I_MD, I_D, par[P_TAU_FRAC])
    E_out = energy_depleted_core(action, I_A, par[P_E_D], par[P_E_J], sensing,
                                 I_MD, I_D, I_FA, par[P_TAU_FRAC])
    breach = E_out > level
    new_level = battery_step_core(level, E_out, E_H, par[P_E_CONST])
    if delivered:
        q -= 1
    return (arrival, I_A, action, I_MD, I_D, I_FA, delivered, service, credit,
            E_H, E_out, new_level, q, breach)


@njit(cache=True, nogil=True)
def _run_kernel(q0, b0, u_arr, u_acc, u_jam, e_AB, e_AE, e_EB, det_factor, par, flg,
                arrivals, active, actions, md, det, fa, delivered, service, credit,
                e_h, e_out, battery, queue_busy, queue):
    n = u_arr.shape[0]
    q = q0
    level = b0
    for t in range(n):
        battery[t] = level
        out = _slot_core(q, level, u_arr[t], u_acc[t], u_jam[t],
                         par[P_S_AB] * e_AB[t], par[P_S_AE] * e_AE[t], par[P_S_EB] * e_EB[t],
                         det_factor[t], par, flg)
        if out[13]:
            return t
        arrivals[t] = out[0]
        active[t] = out[1]
        actions[t] = out[2]
        md[t] = out[3]
        det[t] = out[4]
        fa[t] = out[5]
        delivered[t] = out[6]
        service[t] = out[7]
        credit[t] = out[8]
        e_h[t] = out[9]
        e_out[t] = out[10]
        queue_busy[t] = 1 if q + out[0] > 0 else 0
        level = out[11]
        q = out[12]
        queue[t] = q
    battery[n] = level
    return -1


def _param_vectors(config: SystemConfig, derived: DerivedParams, policy: AttackerPolicy,
                   flags: SimFlags, spec: Optional[DetectorSpec]):
    par = np.zeros(18)
    par[P_LAMBDA] = config.lambda_A
    par[P_ALPHA_A] = derived.alpha_A
    par[P_ALPHA_E] = policy.alpha_E
    par[P_RHO] = policy.rho
    par[P_GAMMA_A] = derived.gamma_A
    par[P_GAMMA_E] = derived.gamma_E
    par[P_R] = derived.R_target
    par[P_E_D] = derived.E_d
    par[P_E_J] = derived.E_J
    par[P_ETA] = config.eta
    par[P_POWER_A] = config.P_A
    par[P_T] = config.T_slot
    par[P_E_CONST] = config.E_const
    par[P_THRESHOLD] = spec.threshold if spec is not None else math.inf
    par[P_TAU_FRAC] = policy.tau / config.T_slot
    par[P_S_AB] = config.sigma2_AB
    par[P_S_AE] = config.sigma2_AE
    par[P_S_EB] = config.sigma2_EB
    flg = np.zeros(4, dtype=np.int64)
    flg[F_SENSING] = int(policy.sensing_enabled and flags.eve_present)
    flg[F_EVE_PRESENT] = int(flags.eve_present)
    flg[F_JAM_DEPARTS] = int(flags.jam_success_departs)
    flg[F_LINK_BASED] = int(flags.eve_starved_secrecy == "link-based")
    return par, flg


# --- single-slot API --------------------------------------------------------

@dataclass
class SimState:
    alice: AliceState
    battery: EveBattery


def slot_step(state: SimState, rng: np.random.Generator, config: SystemConfig,
              policy: AttackerPolicy, flags: SimFlags = SimFlags(),
              derived: Optional[DerivedParams] = None) -> SlotOutcome:
    """Advance one slot in place and return what happened."""
    derived = derived or derive(config)
    spec = (detector_spec(config, policy, derived, flags.detector, flags.sample_rule)
            if policy.sensing_enabled else None)
    par, flg = _param_vectors(config, derived, policy, flags, spec)
    par[P_ALPHA_A] = state.alice.alpha_A
    u = rng.random(3)
    g = -np.log1p(-rng.random(3)) * np.array([config.sigma2_AB, config.sigma2_AE,
                                                config.sigma2_EB])
    factor = 1.0
    if spec is not None:
        factor = float(detector_factors(np.array([rng.standard_normal()]), spec)[0])
    out = _slot_core(state.alice.queue_len, state.battery.level, u[0], u[1], u[2],
                     g[0], g[1], g[2], factor, par, flg)
    (arrival, I_A, action, I_MD, I_D, I_FA, delivered, service, credit,
     E_H, E_out, new_level, q, breach) = out
    if breach:
        raise InvariantBreach(f"Eve spends {E_out!r} J with {state.battery.level!r} J stored")
    state.battery = EveBattery(float(new_level))
    state.alice.queue_len = int(q)
    return SlotOutcome(
        I_A=int(I_A), I_E=int(action == JAM), I_MD=int(I_MD), I_FA=int(I_FA), I_D=int(I_D),
        E_H=float(E_H), E_out=float(E_out), delivered=bool(delivered), secure=bool(credit),
        action=EveAction(int(action)), arrival=int(arrival), service=bool(service),
    )


# --- full runs --------------------------------------------------------------

@dataclass
class SlotTrace:
    arrivals: np.ndarray
    active: np.ndarray
    actions: np.ndarray
    missed: np.ndarray
    detected: np.ndarray
    false_alarm: np.ndarray
    delivered: np.ndarray
    service: np.ndarray
    credit: np.ndarray
    e_h: np.ndarray
    e_out: np.ndarray
    battery: np.ndarray        # n + 1 entries: level at the start of each slot, then final
    queue_busy: np.ndarray     # Q > 0 after the slot's arrival
    queue: np.ndarray          # queue length at the end of each slot

    @classmethod
    def empty(cls, n: int) -> "SlotTrace":
        i8 = lambda: np.zeros(n, dtype=np.int8)  # noqa: E731
        return cls(i8(), i8(), i8(), i8(), i8(), i8(), i8(), i8(), i8(),
                   np.zeros(n), np.zeros(n), np.zeros(n + 1), i8(), np.zeros(n, dtype=np.int64))


@dataclass
class SimReport:
    n_slots: int
    burn_in_slots: int
    seed: object
    alpha_A: float
    mu_A_hat: float
    mu_sec_hat: float
    throughput_hat: float
    state_probs: StateProbs
    eh_rate: float
    depletion_rate: float
    queue_mean: float
    queue_max: int
    queue_final: int
    battery_mean: float
    battery_max: float
    battery_final: float
    arrivals: int
    departures: int
    detection: dict
    se: dict
    ci_halfwidths: dict
    trace: Optional[SlotTrace] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("trace")
        return d


def batch_means(x: np.ndarray, n_batches: int) -> tuple[float, float]:
    """Mean of ``x`` and the batch-means standard error of that mean."""
    x = np.asarray(x, dtype=float)
    size = len(x) // n_batches
    if size < 1:
        return float(x.mean()) if len(x) else 0.0, math.nan
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))


def run(config: SystemConfig, policy: AttackerPolicy, seed=0, n_slots: int = 100_000,
        flags: SimFlags = SimFlags(), streams: Optional[RandomStreams] = None,
        keep_trace: bool = False) -> SimReport:
    """Simulate ``n_slots`` slots and summarise them.

    Deterministic in (config, policy, flags, seed); pass ``streams`` to share
    random numbers between runs.
    """
    if n_slots < 1:
        raise ConfigError("n_slots must be >= 1")
    flags.validate()
    derived = derive(config)
    policy.validate(config)
    spec = None
    if policy.sensing_enabled and flags.eve_present:
        spec = detector_spec(config, policy, derived, flags.detector, flags.sample_rule)
    if streams is None:
        streams = RandomStreams.draw(seed, n_slots)
    elif streams.n_slots != n_slots:
        raise ConfigError("streams length does not match n_slots")
    if spec is not None:
        factors = detector_factors(streams.z_detector, spec)
    else:
        factors = np.ones(n_slots)

    par, flg = _param_vectors(config, derived, policy, flags, spec)
    tr = SlotTrace.empty(n_slots)
    status = _run_kernel(int(flags.initial_queue), float(flags.initial_battery),
                         streams.u_arrival, streams.u_access, streams.u_jam,
                         streams.e_AB, streams.e_AE, streams.e_EB, factors, par, flg,
                         tr.arrivals, tr.active, tr.actions, tr.missed, tr.detected,
                         tr.false_alarm, tr.delivered, tr.service, tr.credit,
                         tr.e_h, tr.e_out, tr.battery, tr.queue_busy, tr.queue)
    if status >= 0:
        raise InvariantBreach(f"slot {status}: Eve's spending exceeds her battery")

    return _summarise(tr, n_slots, streams.seed, derived, flags, keep_trace)


def _summarise(tr: SlotTrace, n_slots: int, seed: int, derived: DerivedParams,
               flags: SimFlags, keep_trace: bool) -> SimReport:
    burn = int(flags.burn_in * n_slots)
    if n_slots - burn < flags.n_batches:
        burn = 0
    sl = slice(burn, n_slots)
    b = tr.battery[:-1][sl]
    busy = tr.queue_busy[sl].astype(bool)
    low = b < derived.E_d
    high = b >= derived.E_J
    mid = ~low & ~high
    m = n_slots - burn
    probs = StateProbs(
        p_low=float(np.count_nonzero(low & busy) / m),
        p_mid=float(np.count_nonzero(mid & busy) / m),
        p_high=float(np.count_nonzero(high & busy) / m),
        b_high=float(np.count_nonzero(high) / m),
        b_low=float(np.count_nonzero(~high) / m),
    )

    k = flags.n_batches
    tq = float(stats.t.ppf(0.975, k - 1))
    series = {
        "mu_A": tr.service[sl],
        "mu_sec": tr.credit[sl],
        "throughput": tr.delivered[sl],
        "eh_rate": tr.e_h[sl],
        "depletion_rate": tr.e_out[sl],
    }
    est, se = {}, {}
    for name, x in series.items():
        est[name], se[name] = batch_means(x, k)
    ci = {name: tq * s for name, s in se.items()}

    decoding = (tr.actions[sl] == SPLIT_DECODE)
    act = tr.active[sl].astype(bool)
    n_md = int(tr.missed[sl].sum())
    n_d = int(tr.detected[sl].sum())
    n_fa = int(tr.false_alarm[sl].sum())
    idle_decoding = int(np.count_nonzero(decoding & ~act))
    detection = {
        "missed": n_md,
        "detected": n_d,
        "false_alarms": n_fa,
        "p_md_hat": n_md / (n_md + n_d) if n_md + n_d else math.nan,
        "p_fa_hat": n_fa / idle_decoding if idle_decoding else math.nan,
    }

    q = tr.queue[sl]
    return SimReport(
        n_slots=n_slots,
        burn_in_slots=burn,
        seed=seed_key(seed),
        alpha_A=derived.alpha_A,
        mu_A_hat=est["mu_A"],
        mu_sec_hat=est["mu_sec"],
        throughput_hat=est["throughput"],
        state_probs=probs,
        eh_rate=est["eh_rate"],
        depletion_rate=est["depletion_rate"],
        queue_mean=float(q.mean()),
        queue_max=int(q.max()),
        queue_final=int(tr.queue[-1]),
        battery_mean=float(b.mean()),
        battery_max=float(b.max()),
        battery_final=float(tr.battery[-1]),
        arrivals=int(tr.arrivals.sum()),
        departures=int(tr.delivered.sum()),
        detection=detection,
        se=se,
        ci_halfwidths=ci,
        trace=tr if keep_trace else None,
    )
