"""Alice's buffer/access state and Eve's battery-driven jam/eavesdrop behaviour.

The scalar ``*_core`` functions are compiled with numba and shared by the
slot engine in :mod:`jamsec.sim`; the public wrappers take the dataclasses
used elsewhere in the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .params import AttackerPolicy, DerivedParams, SystemConfig


class InvariantBreach(RuntimeError):
    """An accounting identity failed; the run cannot be trusted."""


class EveAction(enum.IntEnum):
    HARVEST_ONLY = 0
    SPLIT_DECODE = 1
    JAM = 2
    ABSENT = 3     # no attacker in the system (baseline runs)


HARVEST_ONLY = int(EveAction.HARVEST_ONLY)
SPLIT_DECODE = int(EveAction.SPLIT_DECODE)
JAM = int(EveAction.JAM)
ABSENT = int(EveAction.ABSENT)


@dataclass
class AliceState:
    queue_len: int = 0
    alpha_A: float = 1.0


@dataclass
class EveBattery:
    level: float = 0.0


@dataclass(frozen=True)
class SensingOutcome:
    missed: bool = False
    detected: bool = False
    false_alarm: bool = False


@dataclass(frozen=True)
class SlotOutcome:
    I_A: int
    I_E: int
    I_MD: int
    I_FA: int
    I_D: int
    E_H: float
    E_out: float
    delivered: bool
    secure: bool
    action: EveAction
    arrival: int = 0
    service: bool = False


# --- compiled cores ---------------------------------------------------------

@njit(cache=True)
def alice_active_core(queue_len, u_access, alpha_A, g_AB, gamma_A, R):
    if queue_len <= 0:
        return False
    if not u_access < alpha_A:
        return False
    return math.log2(1.0 + gamma_A * g_AB) >= R


@njit(cache=True)
def eve_action_core(level, u_jam, alpha_E, E_d, E_J):
    if level < E_d:
        return HARVEST_ONLY
    if level < E_J:
        return SPLIT_DECODE
    if u_jam < alpha_E:
        return JAM
    return SPLIT_DECODE


@njit(cache=True)
def energy_harvested_core(action, I_A, g_AE, eta, P_A, T, rho,
                          sensing, I_MD, I_D, tau_frac):
    if not I_A:
        return 0.0
    full = eta * g_AE * P_A * T
    if action == HARVEST_ONLY:
        return full
    if action == SPLIT_DECODE:
        if sensing:
            return full * (1.0 - rho) * (tau_frac * I_MD + I_D)
        return full * (1.0 - rho)
    return 0.0


@njit(cache=True)
def energy_depleted_core(action, I_A, E_d, E_J, sensing, I_MD, I_D, I_FA, tau_frac):
    if sensing:
        if action == JAM:
            return E_J
        if action == SPLIT_DECODE:
            if I_A:
                return E_d * (I_MD * tau_frac + I_D)
            return E_d * ((1 - I_FA) * tau_frac + I_FA)
        return 0.0
    if not I_A:
        return 0.0
    if action == SPLIT_DECODE:
        return E_d
    if action == JAM:
        return E_J
    return 0.0


@njit(cache=True)
def battery_step_core(level, E_out, E_H, E_const):
    return level - E_out + E_H + E_const


# --- public API -------------------------------------------------------------

def alice_slot_decision(rng: np.random.Generator, state: AliceState, g_AB: float,
                        derived: DerivedParams) -> bool:
    u = rng.random()
    return bool(alice_active_core(state.queue_len, u, state.alpha_A, g_AB,
                                  derived.gamma_A, derived.R_target))


def eve_choose_action(rng: np.random.Generator, battery: EveBattery, policy: AttackerPolicy,
                      derived: DerivedParams) -> EveAction:
    u = rng.random()
    return EveAction(eve_action_core(battery.level, u, policy.alpha_E, derived.E_d, derived.E_J))


def _sensing_terms(policy: AttackerPolicy, config: SystemConfig,
                   sensing: Optional[SensingOutcome]):
    if sensing is None or not policy.sensing_enabled:
        return False, 0, 0, 0, 1.0
    return (True, int(sensing.missed), int(sensing.detected), int(sensing.false_alarm),
            policy.tau / config.T_slot)


def energy_harvested(action: EveAction, I_A: int, g_AE: float, policy: AttackerPolicy,
                     config: SystemConfig, sensing: Optional[SensingOutcome] = None) -> float:
    on, md, d, _, frac = _sensing_terms(policy, config, sensing)
    return float(energy_harvested_core(int(action), bool(I_A), g_AE, config.eta, config.P_A,
                                       config.T_slot, policy.rho, on, md, d, frac))


def energy_depleted(action: EveAction, I_A: int, policy: AttackerPolicy, config: SystemConfig,
                    derived: DerivedParams, sensing: Optional[SensingOutcome] = None) -> float:
    on, md, d, fa, frac = _sensing_terms(policy, config, sensing)
    return float(energy_depleted_core(int(action), bool(I_A), derived.E_d, derived.E_J,
                                      on, md, d, fa, frac))


def battery_step(battery: EveBattery, E_out: float, E_H: float, E_const: float) -> EveBattery:
    if E_out > battery.level:
        raise InvariantBreach(f"spending {E_out!r} J from a battery holding {battery.level!r} J")
    if E_H < 0 or E_const < 0:
        raise InvariantBreach("energy inflows must be nonnegative")
    return EveBattery(float(battery_step_core(battery.level, E_out, E_H, E_const)))
