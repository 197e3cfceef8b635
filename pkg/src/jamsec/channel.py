"""Rayleigh block fading: gain sampling, link rates and outage probabilities.

Power gains |h|^2 are exponential with mean equal to the link variance. The
closed forms below are the Rayleigh specialisations of the connection,
secrecy and jammed-link events; every one is checked against brute-force
sampling in the test suite and by ``jamsec validate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SlotRealization:
    g_AB: float
    g_AE: float
    g_EB: float


def exponential_gains(rng: np.random.Generator, mean: float, size=None):
    """Exponential draws by inverse transform of a uniform stream."""
    u = rng.random(size)
    return -mean * np.log1p(-u)


def sample_slot(rng: np.random.Generator, sigma2_AB: float, sigma2_AE: float,
                sigma2_EB: float) -> SlotRealization:
    g = exponential_gains(rng, 1.0, 3)
    return SlotRealization(float(sigma2_AB * g[0]), float(sigma2_AE * g[1]),
                           float(sigma2_EB * g[2]))


def rate_ab(g_AB, gamma_A):
    return np.log2(1.0 + gamma_A * g_AB)


def secrecy_rate_nojam(g_AB, g_AE, gamma_A, rho):
    r = np.log2(1.0 + gamma_A * g_AB) - np.log2(1.0 + rho * gamma_A * g_AE)
    return np.maximum(r, 0.0)


def jammed_rate(g_AB, g_EB, gamma_A, gamma_E):
    return np.log2(1.0 + gamma_A * g_AB / (1.0 + gamma_E * g_EB))


def _snr_threshold(R: float) -> float:
    return 2.0 ** R - 1.0


def p1_connection(R: float, gamma_A: float, sigma2_AB: float) -> float:
    """Pr{log2(1 + gamma_A g_AB) >= R}."""
    if R <= 0:
        return 1.0
    return math.exp(-_snr_threshold(R) / (sigma2_AB * gamma_A))


def p_secrecy_nojam(R: float, gamma_A: float, rho: float, sigma2_AB: float,
                    sigma2_AE: float) -> float:
    """Pr{[log2(1+gamma_A g_AB) - log2(1+rho gamma_A g_AE)]^+ >= R}.

    Conditioning on g_AE, the event is g_AB >= (2^R (1 + rho gamma_A g_AE) - 1) / gamma_A;
    averaging the exponential tail over g_AE gives
    P1 * sigma2_AB / (sigma2_AB + 2^R rho sigma2_AE).
    At R = 0 the clamp makes the event certain.
    """
    if R <= 0:
        return 1.0
    p1 = p1_connection(R, gamma_A, sigma2_AB)
    return p1 * sigma2_AB / (sigma2_AB + (2.0 ** R) * rho * sigma2_AE)


def p2_jammed(R: float, gamma_A: float, gamma_E: float, sigma2_AB: float,
              sigma2_EB: float) -> float:
    """Pr{log2(1 + gamma_A g_AB / (1 + gamma_E g_EB)) >= R}."""
    if R <= 0:
        return 1.0
    t = _snr_threshold(R)
    p1 = math.exp(-t / (gamma_A * sigma2_AB))
    return p1 / (1.0 + t * gamma_E * sigma2_EB / (gamma_A * sigma2_AB))


def p3_eve_link(R: float, gamma_A: float, sigma2_AE: float) -> float:
    """Pr{log2(1 + gamma_A g_AE) >= R}."""
    return p1_connection(R, gamma_A, sigma2_AE)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)
