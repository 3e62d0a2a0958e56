"""Deterministic path-loss link budget, jammer draws and radiometer detectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .errors import ContractViolation

USER = "user"
ATTACKER = "attacker"


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


@dataclass(frozen=True)
class LinkGeometry:
    d_SU: float
    d_SA: float
    d_JU: float
    d_JA: float
    beta: float = 2.0

    def __post_init__(self):
        for name in ("d_SU", "d_SA", "d_JU", "d_JA"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be > 0")
        if self.beta < 1:
            raise ContractViolation("path-loss exponent must be >= 1")

    def gains(self, at: str) -> tuple[float, float]:
        """(server gain, jammer gain) toward ``at``."""
        if at == USER:
            return self.d_SU ** -self.beta, self.d_JU ** -self.beta
        if at == ATTACKER:
            return self.d_SA ** -self.beta, self.d_JA ** -self.beta
        raise ContractViolation(f"unknown receiver {at!r}")


@dataclass(frozen=True)
class RadioParams:
    bandwidth_hz: float = 2000.0
    sigma2_U: float = 1e-6
    sigma2_A: float = 1e-6
    p_S_max: float = 1.0
    p_J_max: float = 1.0
    latency_threshold_s: float = 0.2

    def __post_init__(self):
        for name, v in vars(self).items():
            if not v > 0:
                raise ContractViolation(f"{name} must be > 0")

    def noise(self, at: str) -> float:
        if at == USER:
            return self.sigma2_U
        if at == ATTACKER:
            return self.sigma2_A
        raise ContractViolation(f"unknown receiver {at!r}")


@dataclass(frozen=True)
class DetectorPolicy:
    kind: Literal["oracle_margin", "quantile"] = "quantile"
    margin_w: float | None = None
    false_alarm_q: float | None = None

    def __post_init__(self):
        if self.kind == "oracle_margin":
            if self.margin_w is None or self.margin_w < 0 or self.false_alarm_q is not None:
                raise ContractViolation("oracle_margin detector needs margin_w >= 0 and no false_alarm_q")
        elif self.kind == "quantile":
            q = self.false_alarm_q
            if q is None or not 0 < q < 1 or self.margin_w is not None:
                raise ContractViolation("quantile detector needs false_alarm_q in (0,1) and no margin_w")
        else:
            raise ContractViolation(f"unknown detector kind {self.kind!r}")

    @classmethod
    def oracle(cls, margin_w: float = 0.01) -> "DetectorPolicy":
        return cls("oracle_margin", margin_w=margin_w)

    @classmethod
    def quantile(cls, q: float = 0.95) -> "DetectorPolicy":
        return cls("quantile", false_alarm_q=q)


def _check_power(p_S, p_J, radio):
    if not 0 <= p_S <= radio.p_S_max:
        raise ContractViolation(f"server power {p_S} outside [0, {radio.p_S_max}]")
    if not 0 <= p_J <= radio.p_J_max:
        raise ContractViolation(f"jammer power {p_J} outside [0, {radio.p_J_max}]")


def received_power(p_S: float, p_J: float, geom: LinkGeometry, at: str, radio: RadioParams) -> float:
    _check_power(p_S, p_J, radio)
    gs, gj = geom.gains(at)
    return p_S * gs + p_J * gj + radio.noise(at)


def downlink_rate(p_S: float, p_J: float, geom: LinkGeometry, at: str, radio: RadioParams) -> float:
    """Shannon rate in bit/s over an AWGN link with jamming as noise."""
    _check_power(p_S, p_J, radio)
    if p_S == 0:
        return 0.0
    gs, gj = geom.gains(at)
    sinr = p_S * gs / (p_J * gj + radio.noise(at))
    return radio.bandwidth_hz * math.log2(1.0 + sinr)


def latency(payload_bits: float, rate: float) -> float:
    if payload_bits <= 0:
        raise ContractViolation("payload_bits must be > 0")
    if rate <= 0:
        return math.inf
    return payload_bits / rate


def delivered(payload_bits: float, rate: float, radio: RadioParams) -> bool:
    return latency(payload_bits, rate) <= radio.latency_threshold_s


def jammer_draw(rng, radio: RadioParams) -> float:
    return float(rng.uniform(0.0, radio.p_J_max))


def detector_threshold(policy: DetectorPolicy, p_J_current: float, geom: LinkGeometry, radio: RadioParams) -> float:
    """Radiometer threshold epsilon_n in watts."""
    _, gj = geom.gains(ATTACKER)
    if policy.kind == "oracle_margin":
        return radio.sigma2_A + p_J_current * gj + policy.margin_w
    # q-quantile of p_J * gain with p_J ~ U[0, p_J_max]
    return radio.sigma2_A + policy.false_alarm_q * radio.p_J_max * gj


def detect(zeta_A: float, epsilon_n: float) -> int:
    return 1 if zeta_A >= epsilon_n else 0
