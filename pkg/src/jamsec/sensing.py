"""Eve's energy detector: threshold, per-slot detection and missed-detection probability.

The test statistic is the received energy averaged over N complex samples,
normalised by the noise power, so it has unit mean when Alice is silent and
mean (1 + snr) when she transmits. Two noise models are supported:

``gaussian``
    statistic = (1 + snr) * (1 + z / sqrt(N)), z ~ N(0, 1). The threshold
    1 + Q^-1(P_FA) / sqrt(N) then gives the missed-detection integral used by
    :func:`p_md_analytic` exactly.
``exact``
    statistic = (1 + snr) * G, G ~ Gamma(N, 1/N), i.e. chi-square with 2N
    degrees of freedom scaled to unit mean, threshold from the Gamma quantile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special, stats

from .params import AttackerPolicy, ConfigError, DerivedParams, SystemConfig

DETECTOR_METHODS = ("gaussian", "exact")
SAMPLE_RULES = ("nyquist", "literal")

QUAD_TOL = 1e-6


class QuadratureError(RuntimeError):
    pass


def q_function(x):
    """Standard normal upper tail."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def q_inverse(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"q_inverse needs p in (0, 1), got {p}")
    return float(-special.ndtri(p))


@dataclass(frozen=True)
class DetectorSpec:
    N_samples: int
    P_FA: float
    gamma_tilde_A: float      # mean received SNR at Eve, sigma2_AE * gamma_A
    gamma_A: float = 1.0      # scales a per-slot gain g_AE to an SNR
    method: str = "gaussian"

    def __post_init__(self):
        if self.N_samples < 1:
            raise ConfigError(f"detector needs at least one sample, got N={self.N_samples}")
        if not 0.0 < self.P_FA < 1.0:
            raise ConfigError(f"P_FA must lie in (0, 1), got {self.P_FA}")
        if self.method not in DETECTOR_METHODS:
            raise ConfigError(f"unknown detector method {self.method!r}")

    @property
    def threshold(self) -> float:
        N = self.N_samples
        if self.method == "gaussian":
            return 1.0 + q_inverse(self.P_FA) / math.sqrt(N)
        return float(stats.gamma.isf(self.P_FA, N, scale=1.0 / N))


def sample_count(tau: float, W_bw: float, rule: str = "nyquist") -> int:
    """Samples in a sensing window: W*tau (Nyquist rate) or the literal tau/W."""
    if rule == "nyquist":
        return int(round(W_bw * tau))
    if rule == "literal":
        return int(round(tau / W_bw))
    raise ConfigError(f"unknown sample rule {rule!r}")


def detector_spec(config: SystemConfig, policy: AttackerPolicy, derived: DerivedParams,
                  method: str = "gaussian", sample_rule: str = "nyquist") -> DetectorSpec:
    return DetectorSpec(
        N_samples=sample_count(policy.tau, config.W_bw, sample_rule),
        P_FA=policy.P_FA_target,
        gamma_tilde_A=derived.gamma_tilde_A,
        gamma_A=derived.gamma_A,
        method=method,
    )


def p_detect(snr, spec: DetectorSpec):
    """Detection probability given the slot's received SNR at Eve."""
    snr = np.asarray(snr, dtype=float)
    N = spec.N_samples
    thr = spec.threshold
    if spec.method == "gaussian":
        out = special.ndtr(-math.sqrt(N) * (thr / (1.0 + snr) - 1.0))
    else:
        out = stats.gamma.sf(thr / (1.0 + snr), N, scale=1.0 / N)
    return out if out.ndim else float(out)


def _z_max(gamma_tilde: float) -> float:
    # weight exp(-(Z - 1)/gamma_tilde) has fallen below 1e-12 of its value at Z = 1
    return 1.0 + 12.0 * math.log(10.0) * gamma_tilde


def p_md_analytic(spec: DetectorSpec) -> float:
    """Missed-detection probability averaged over Rayleigh fading on the Alice-Eve link.

    Integrates Pr{detect | Z} against the density of Z = 1 + snr on [1, Z_max]
    with adaptive Gauss-Kronrod quadrature. For the gaussian detector the
    integrand is Q(sqrt(N) * ((Q^-1(P_FA)/sqrt(N) + 1) / Z - 1)).
    """
    g = spec.gamma_tilde_A
    if g <= 0:
        return 1.0 - spec.P_FA
    thr = spec.threshold
    z_max = _z_max(g)

    def integrand(z: float) -> float:
        # (1/g) exp(1/g) exp(-z/g), folded to avoid overflow for small g
        return p_detect(z - 1.0, spec) * math.exp(-(z - 1.0) / g) / g

    points = [thr] if 1.0 < thr < z_max else None
    value, abserr = integrate.quad(integrand, 1.0, z_max, points=points,
                                   epsabs=1e-9, epsrel=1e-9, limit=500)
    if not math.isfinite(value) or abserr > QUAD_TOL:
        raise QuadratureError(f"P_MD quadrature did not converge (abserr={abserr:.3g})")
    return min(1.0, max(0.0, 1.0 - value))


class DetectionResult(NamedTuple):
    detected: bool
    missed: bool
    false_alarm: bool


def noise_factors(rng: np.random.Generator, spec: DetectorSpec, size=None):
    """Unit-mean multiplicative noise on the energy statistic, one per slot."""
    N = spec.N_samples
    if spec.method == "gaussian":
        return 1.0 + rng.standard_normal(size) / math.sqrt(N)
    return rng.gamma(N, 1.0 / N, size)


def decide(active, snr, factor, threshold):
    """True where the detector declares Alice active."""
    energy = np.where(active, 1.0 + snr, 1.0) * factor
    return energy > threshold


def simulate_detection(rng: np.random.Generator, alice_active: bool, g_AE: float,
                       spec: DetectorSpec) -> DetectionResult:
    factor = noise_factors(rng, spec)
    declared = bool(decide(alice_active, spec.gamma_A * g_AE, factor, spec.threshold))
    if alice_active:
        return DetectionResult(declared, not declared, False)
    return DetectionResult(False, False, declared)
