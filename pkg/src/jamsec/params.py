"""System configuration, attacker policy and derived quantities.

All quantities are SI: watts, joules, seconds, hertz. Channel variances are
dimensionless mean power gains. Defaults: 10 dB SNRs with unit noise power,
1 MHz bandwidth, eta = 0.6, 5 uJ decoding energy per slot, no external
energy, 1 ms slots, 1000-bit packets (so R = 1 bit/s/Hz) and unit variance
on every link.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Raised when a configuration or policy violates its invariants."""


class InfeasibleError(ConfigError):
    """No access probability can stabilise Alice's queue."""


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError(f"linear_to_db needs a positive ratio, got {x}")
    return 10.0 * math.log10(x)


def _check_prob(name: str, value: float, *, open_interval: bool = False) -> None:
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value}")
    if open_interval:
        if not 0.0 < value < 1.0:
            raise ConfigError(f"{name} must lie in (0, 1), got {value}")
    elif not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


def _check_nonneg(name: str, value: float) -> None:
    if not (math.isfinite(value) and value >= 0.0):
        raise ConfigError(f"{name} must be finite and >= 0, got {value}")


def _check_pos(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ConfigError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class SystemConfig:
    P_A: float = 10.0          # Alice transmit power (W)
    P_J: float = 10.0          # Eve jamming power (W)
    P_d: float = 5e-3          # Eve decode/processing power (W)
    kappa: float = 1.0         # noise power (W)
    W_bw: float = 1e6          # bandwidth (Hz)
    T_slot: float = 1e-3       # slot duration (s)
    b_bits: float = 1000.0     # packet size (bits)
    lambda_A: float = 0.5      # Bernoulli arrival probability per slot
    # None: chosen by the queue-stability rule at derive() time
    alpha_A: Optional[float] = None
    eta: float = 0.6           # RF-to-DC efficiency
    E_const: float = 0.0       # external energy per slot (J)
    sigma2_AB: float = 1.0
    sigma2_AE: float = 1.0
    sigma2_EB: float = 1.0
    # inputs to the stability rule when alpha_A is None
    alpha_E_assumed: float = 0.0
    stability_margin: float = 1.05

    def validate(self) -> None:
        for name in ("P_A", "P_J", "P_d", "kappa", "E_const",
                     "sigma2_AB", "sigma2_AE", "sigma2_EB"):
            _check_nonneg(name, getattr(self, name))
        for name in ("W_bw", "T_slot", "b_bits", "kappa"):
            _check_pos(name, getattr(self, name))
        for name in ("sigma2_AB", "sigma2_AE", "sigma2_EB"):
            _check_pos(name, getattr(self, name))
        _check_prob("lambda_A", self.lambda_A)
        _check_prob("eta", self.eta)
        _check_prob("alpha_E_assumed", self.alpha_E_assumed)
        if self.alpha_A is not None:
            _check_prob("alpha_A", self.alpha_A)
        if not (math.isfinite(self.stability_margin) and self.stability_margin >= 1.0):
            raise ConfigError(f"stability_margin must be >= 1, got {self.stability_margin}")

    def with_overrides(self, **overrides: Any) -> "SystemConfig":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown SystemConfig field(s): {sorted(unknown)}")
        return replace(self, **overrides)


@dataclass(frozen=True)
class AttackerPolicy:
    alpha_E: float = 0.0       # jam probability when the battery affords E_J
    rho: float = 0.0           # power fraction routed to the decoder
    sensing_enabled: bool = False
    tau: float = 1e-4          # sensing window (s)
    P_FA_target: float = 0.05

    def validate(self, config: SystemConfig) -> None:
        _check_prob("alpha_E", self.alpha_E)
        _check_prob("rho", self.rho)
        _check_prob("P_FA_target", self.P_FA_target, open_interval=True)
        if not (math.isfinite(self.tau) and 0.0 < self.tau <= config.T_slot):
            raise ConfigError(f"tau must lie in (0, T_slot={config.T_slot}], got {self.tau}")
        if self.sensing_enabled and self.tau * config.W_bw < 1.0:
            raise ConfigError("sensing window must hold at least one sample (tau * W >= 1)")


@dataclass(frozen=True)
class DerivedParams:
    gamma_A: float
    gamma_E: float
    gamma_tilde_A: float
    R_target: float
    E_d: float
    E_J: float
    alpha_A: float
    P1: float


def derive(config: SystemConfig) -> DerivedParams:
    """Compute the shared symbols; rejects configs with E_J < E_d."""
    config.validate()
    gamma_A = config.P_A / config.kappa
    gamma_E = config.P_J / config.kappa
    R = config.b_bits / (config.W_bw * config.T_slot)
    E_d = config.P_d * config.T_slot
    E_J = config.P_J * config.T_slot
    if not R > 0:
        raise ConfigError("target secrecy rate must be positive")
    if E_J < E_d:
        raise ConfigError(f"jamming energy E_J={E_J:g} J is below decoding energy E_d={E_d:g} J")
    if gamma_A > 0:
        P1 = math.exp(-(2.0 ** R - 1.0) / (config.sigma2_AB * gamma_A))
    else:
        P1 = 0.0
    if config.alpha_A is None:
        # local import: analytics depends on this module
        from .analytics import stable_access_prob
        alpha_A = stable_access_prob(config.lambda_A, config.alpha_E_assumed, P1,
                                     margin=config.stability_margin)
    else:
        alpha_A = config.alpha_A
    return DerivedParams(
        gamma_A=gamma_A,
        gamma_E=gamma_E,
        gamma_tilde_A=config.sigma2_AE * gamma_A,
        R_target=R,
        E_d=E_d,
        E_J=E_J,
        alpha_A=alpha_A,
        P1=P1,
    )


# --- config files -----------------------------------------------------------
#
# INI layout, every key optional:
#
#   [meta]
#   schema_version = 1
#   [system]
#   P_A = 10
#   alpha_A = auto        ; or a probability
#   ...
#   [attacker]
#   alpha_E = 0.3
#   sensing_enabled = false

_SYSTEM_FIELDS = {f.name for f in fields(SystemConfig)}
_POLICY_FIELDS = {f.name for f in fields(AttackerPolicy)}


def _parse_value(key: str, raw: str) -> Any:
    text = raw.strip()
    if key == "alpha_A" and text.lower() in ("auto", "none", ""):
        return None
    if key == "sensing_enabled":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def load_config(path: str | Path) -> tuple[SystemConfig, AttackerPolicy]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep case: P_A and p_a are different symbols
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if parser.has_section("meta"):
        version = parser.get("meta", "schema_version", fallback=str(CONFIG_SCHEMA_VERSION))
        if int(float(version)) != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"{path}: unsupported schema_version {version}")

    unknown_sections = set(parser.sections()) - {"meta", "system", "attacker"}
    if unknown_sections:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown_sections)}")

    sys_kw: dict[str, Any] = {}
    if parser.has_section("system"):
        for key, raw in parser.items("system"):
            if key not in _SYSTEM_FIELDS:
                raise ConfigError(f"{path}: unknown [system] key {key!r}")
            sys_kw[key] = _parse_value(key, raw)
    pol_kw: dict[str, Any] = {}
    if parser.has_section("attacker"):
        for key, raw in parser.items("attacker"):
            if key not in _POLICY_FIELDS:
                raise ConfigError(f"{path}: unknown [attacker] key {key!r}")
            pol_kw[key] = _parse_value(key, raw)

    config = SystemConfig(**sys_kw)
    policy = AttackerPolicy(**pol_kw)
    config.validate()
    policy.validate(config)
    return config, policy


def dump_config(config: SystemConfig, policy: AttackerPolicy, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["meta"] = {"schema_version": str(CONFIG_SCHEMA_VERSION)}
    parser["system"] = {
        k: ("auto" if v is None else repr(v)) for k, v in asdict(config).items()
    }
    parser["attacker"] = {
        k: (str(v).lower() if isinstance(v, bool) else repr(v)) for k, v in asdict(policy).items()
    }
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
