"""Semi-analytic service rate, secure throughput and the access-probability rule.

The throughput expressions take Eve's battery/queue state probabilities as
inputs (normally measured by :func:`jamsec.sim.run`); the battery chain's
stationary law is never derived in closed form.

Two families are provided:

* :func:`eq1_service_rate`, :func:`eq5_secure_throughput` and
  :func:`eq8_secure_throughput` evaluate the closed-form expressions term by
  term, including their quirks (starved slots counted in two terms of the
  no-sensing expression; independence of detection and secrecy events).
* :func:`slot_secure_throughput` is the exact expectation of the secure-credit
  indicator produced by the slot engine, for either starved-slot semantics
  and with or without sensing. It has the same term structure, but each
  channel factor is the probability of the event the engine actually tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from . import channel
from .params import AttackerPolicy, DerivedParams, InfeasibleError, SystemConfig
from .sensing import DetectorSpec, p_detect, p_md_analytic

STARVED_SEMANTICS = ("as-written", "link-based")


@dataclass(frozen=True)
class StateProbs:
    """Joint probabilities of Eve's battery interval and a nonempty queue."""

    p_low: float       # Pr{B < E_d, Q > 0}
    p_mid: float       # Pr{E_d <= B < E_J, Q > 0}
    p_high: float      # Pr{B >= E_J, Q > 0}
    b_high: float      # Pr{B >= E_J}
    b_low: float       # Pr{B < E_J}

    @property
    def q_busy(self) -> float:
        return self.p_low + self.p_mid + self.p_high

    def validate(self) -> None:
        for name in ("p_low", "p_mid", "p_high", "b_high", "b_low"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if self.q_busy > 1.0 + 1e-12:
            raise ValueError("joint state probabilities sum above 1")


@dataclass(frozen=True)
class ChannelProbs:
    P1: float          # connection
    P_sec: float       # no-jam secrecy
    P2: float          # connection under jamming
    P3: float          # Alice-Eve link supports R


def channel_probs(config: SystemConfig, derived: DerivedParams, rho: float) -> ChannelProbs:
    R, gA = derived.R_target, derived.gamma_A
    return ChannelProbs(
        P1=channel.p1_connection(R, gA, config.sigma2_AB),
        P_sec=channel.p_secrecy_nojam(R, gA, rho, config.sigma2_AB, config.sigma2_AE),
        P2=channel.p2_jammed(R, gA, derived.gamma_E, config.sigma2_AB, config.sigma2_EB),
        P3=channel.p3_eve_link(R, gA, config.sigma2_AE),
    )


def eq1_service_rate(alpha_A: float, alpha_E: float, b_high: float, b_low: float,
                     P1: float) -> float:
    """Mean service rate of Alice's queue (packets/slot)."""
    return (alpha_A * (1.0 - alpha_E) * b_high + alpha_A * b_low) * P1


def eq5_secure_throughput(alpha_A: float, alpha_E: float, probs: StateProbs,
                          ch: ChannelProbs) -> float:
    """Secure throughput without sensing, literal term-by-term form."""
    term1 = alpha_A * (probs.p_high * (1.0 - alpha_E) + (probs.p_low + probs.p_mid)) * ch.P_sec
    term2 = alpha_A * probs.p_low * ch.P3
    term3 = alpha_A * alpha_E * ch.P2 * probs.p_high
    return term1 + term2 + term3


def eq8_secure_throughput(alpha_A: float, alpha_E: float, probs: StateProbs,
                          ch: ChannelProbs, P_MD: float) -> float:
    """Secure throughput with sensing, literal term-by-term form.

    Detection is treated as independent of the secrecy events.
    """
    hit = 1.0 - P_MD
    term1 = alpha_A * (probs.p_high * hit * (1.0 - alpha_E) + hit * probs.p_mid) * ch.P_sec
    term2 = alpha_A * (probs.p_high * P_MD * (1.0 - alpha_E) + P_MD * probs.p_mid
                       + probs.p_low) * ch.P3
    term3 = alpha_A * alpha_E * ch.P2 * probs.p_high
    return term1 + term2 + term3


def stable_access_prob(lambda_A: float, alpha_E_assumed: float, P1: float,
                       margin: float = 1.05) -> float:
    """Smallest access probability meeting the Loynes bound, scaled by ``margin``.

    Raises InfeasibleError when lambda_A >= (1 - alpha_E) * P1.
    """
    if lambda_A <= 0.0:
        return 0.0
    capacity = (1.0 - alpha_E_assumed) * P1
    if lambda_A >= capacity:
        raise InfeasibleError(
            f"lambda_A={lambda_A:g} is not below the service bound {capacity:g}")
    return min(1.0, margin * lambda_A / capacity)


# --- exact per-slot expectation of the engine's secure credit ---------------

@dataclass(frozen=True)
class SlotCreditProbs:
    """Pr{credit | Q > 0, Alice accesses} for each Eve mode."""

    decode: float
    starved: float
    jam: float


def _expect_over_eve_gain(fn, sigma2_AE: float) -> float:
    value, _ = integrate.quad(lambda y: fn(y) * math.exp(-y / sigma2_AE) / sigma2_AE,
                                   0.0, math.inf, epsabs=1e-11, epsrel=1e-10, limit=400)
    return value


def slot_credit_probs(config: SystemConfig, derived: DerivedParams, policy: AttackerPolicy,
                      starved_secrecy: str = "as-written",
                      detector: DetectorSpec | None = None) -> SlotCreditProbs:
    if starved_secrecy not in STARVED_SEMANTICS:
        raise ValueError(f"unknown starved-secrecy semantics {starved_secrecy!r}")
    ch = channel_probs(config, derived, policy.rho)
    R, gA = derived.R_target, derived.gamma_A
    if starved_secrecy == "as-written":
        starved = ch.P1 * ch.P3
    else:
        starved = ch.P1
    if not policy.sensing_enabled:
        return SlotCreditProbs(decode=ch.P_sec, starved=starved, jam=ch.P2)
    if detector is None:
        raise ValueError("sensing policy needs a DetectorSpec")

    two_r = 2.0 ** R

    def detected_and_secret(y: float) -> float:
        need = (two_r * (1.0 + policy.rho * gA * y) - 1.0) / gA
        return p_detect(gA * y, detector) * math.exp(-need / config.sigma2_AB)

    hit = _expect_over_eve_gain(detected_and_secret, config.sigma2_AE)
    if starved_secrecy == "as-written":
        # missed detection and the Alice-Eve link event share g_AE: integrate
        # the miss probability over the tail g_AE >= (2^R - 1) / gamma_A
        y3 = (two_r - 1.0) / gA
        tail, _ = integrate.quad(
            lambda y: (1.0 - p_detect(gA * y, detector)) * math.exp(-y / config.sigma2_AE)
            / config.sigma2_AE, y3, math.inf, epsabs=1e-11, epsrel=1e-10, limit=400)
        missed = ch.P1 * tail
    else:
        missed = ch.P1 * p_md_analytic(detector)
    return SlotCreditProbs(decode=hit + missed, starved=starved, jam=ch.P2)


def slot_secure_throughput(alpha_A: float, alpha_E: float, probs: StateProbs,
                           credit: SlotCreditProbs) -> float:
    """Expected secure credits per slot under the engine's semantics."""
    decode_mass = probs.p_high * (1.0 - alpha_E) + probs.p_mid
    return alpha_A * (decode_mass * credit.decode + probs.p_low * credit.starved
                      + alpha_E * probs.p_high * credit.jam)
