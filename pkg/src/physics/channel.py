"""Channel and detector noise bookkeeping.

The eavesdropper's entangling cloner is represented only through the
transmittance eta and the excess noise epsilon (referred to the channel
input); Bob's homodyne detector is trusted and characterised by its
efficiency tau and electronic noise v_el.
"""

import math
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.physics.constellation import TwoModeCovariance
from src.utils.errors import DomainError

DEFAULT_ATTENUATION_DB_PER_KM = 0.2


def transmittance_from_distance(
    distance_km: float, attenuation: float = DEFAULT_ATTENUATION_DB_PER_KM
) -> float:
    """eta = 10^(-attenuation * distance / 10)"""
    if not math.isfinite(distance_km) or distance_km < 0:
        raise DomainError(f"distance must be finite and non-negative, got {distance_km!r}")
    if not math.isfinite(attenuation) or attenuation <= 0:
        raise DomainError(f"attenuation must be positive, got {attenuation!r}")
    return 10.0 ** (-attenuation * distance_km / 10.0)


class ChannelModel(BaseModel):
    """Lossy, noisy channel given by distance or by transmittance.

    Exactly one of distance_km / eta is supplied; the other is derived.
    """

    model_config = ConfigDict(frozen=True)

    distance_km: Optional[float] = Field(default=None, ge=0.0, allow_inf_nan=False)
    eta: Optional[float] = Field(default=None, gt=0.0, le=1.0, allow_inf_nan=False)
    attenuation: float = Field(default=DEFAULT_ATTENUATION_DB_PER_KM, gt=0.0, allow_inf_nan=False)
    epsilon: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)

    @model_validator(mode="before")
    @classmethod
    def _derive_missing(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        distance, eta = data.get("distance_km"), data.get("eta")
        attenuation = data.get("attenuation", DEFAULT_ATTENUATION_DB_PER_KM)
        if (distance is None) == (eta is None):
            raise ValueError("exactly one of distance_km and eta must be given")
        if eta is None:
            data["eta"] = transmittance_from_distance(float(distance), float(attenuation))
        elif 0.0 < float(eta) <= 1.0 and float(attenuation) > 0.0:
            data["distance_km"] = -10.0 * math.log10(float(eta)) / float(attenuation)
        return data

    @classmethod
    def from_distance(
        cls,
        distance_km: float,
        epsilon: float = 0.0,
        attenuation: float = DEFAULT_ATTENUATION_DB_PER_KM,
    ) -> "ChannelModel":
        return cls(distance_km=distance_km, epsilon=epsilon, attenuation=attenuation)

    @classmethod
    def from_transmittance(cls, eta: float, epsilon: float = 0.0) -> "ChannelModel":
        return cls(eta=eta, epsilon=epsilon)

    @property
    def loss_db(self) -> float:
        return -10.0 * math.log10(self.eta)


class DetectorModel(BaseModel):
    """Bob's homodyne detector and the reconciliation efficiency"""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(default=0.6, gt=0.0, le=1.0, allow_inf_nan=False)
    v_el: float = Field(default=0.05, ge=0.0, allow_inf_nan=False)
    beta: float = Field(default=0.95, ge=0.0, le=1.0, allow_inf_nan=False)


class NoiseBudget(BaseModel):
    """Channel-added, detection-added and total noise referred to the channel input"""

    model_config = ConfigDict(frozen=True)

    chi_line: float
    chi_hom: float
    chi_tot: float


def noise_budget(ch: ChannelModel, det: DetectorModel) -> NoiseBudget:
    if ch.eta <= 0.0 or det.tau <= 0.0:
        raise DomainError("eta and tau must be positive")
    chi_line = (1.0 - ch.eta) / ch.eta + ch.epsilon
    chi_hom = ((1.0 - det.tau) + det.v_el) / det.tau
    return NoiseBudget(chi_line=chi_line, chi_hom=chi_hom, chi_tot=chi_line + chi_hom / ch.eta)


def propagate(cov: TwoModeCovariance, ch: ChannelModel) -> TwoModeCovariance:
    """Send mode B through the channel: (a, b, c) -> (a, eta (b + chi_line), sqrt(eta) c)"""
    chi_line = (1.0 - ch.eta) / ch.eta + ch.epsilon
    return TwoModeCovariance(
        a=cov.a,
        b=ch.eta * (cov.b + chi_line),
        c=math.sqrt(ch.eta) * cov.c,
    )
