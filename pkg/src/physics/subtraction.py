"""Photon subtraction at the transmitter.

A beam splitter of transmittance mu taps the B mode and a photon-number
resolving detector conditions on j photons. The success probability and the
covariance of the conditioned two-mode state are closed forms in
xi = alpha / sqrt(1 + alpha^2).
"""

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from src.physics.constellation import (
    ConstellationParams,
    TwoModeCovariance,
    correlation_z4,
    gaussian_correlation,
)
from src.utils.errors import DomainError

SERIES_MAX_N = 200


class CorrelationModel(str, Enum):
    """How the off-diagonal entry of the subtracted covariance is formed"""

    PAPER_LITERAL = "paper-literal"
    FOUR_STATE = "four-state"
    GAUSSIAN = "gaussian"


class SubtractionParams(BaseModel):
    """Beam-splitter transmittance mu and number of subtracted photons j"""

    model_config = ConfigDict(frozen=True)

    mu: float = Field(gt=0.0, le=1.0, allow_inf_nan=False)
    j: int = Field(ge=0)


def squeezing_parameter(alpha: float) -> float:
    """xi = alpha / sqrt(1 + alpha^2)"""
    if not math.isfinite(alpha) or alpha < 0:
        raise DomainError(f"alpha must be finite and non-negative, got {alpha!r}")
    return alpha / math.sqrt(1.0 + alpha * alpha)


def _mu_xi2(alpha: float, sub: SubtractionParams) -> float:
    xi2 = squeezing_parameter(alpha) ** 2
    mu_xi2 = sub.mu * xi2
    if xi2 >= 1.0 or mu_xi2 >= 1.0:
        raise DomainError(f"mu * xi^2 = {mu_xi2} must be below 1 (divergent geometric sum)")
    return mu_xi2


def subtraction_success_probability(alpha: float, sub: SubtractionParams) -> float:
    """P_(j) = (1 - xi^2) (1 - mu)^j xi^(2j) / (1 - mu xi^2)^(j + 1)"""
    mu_xi2 = _mu_xi2(alpha, sub)
    xi2 = squeezing_parameter(alpha) ** 2
    return (1.0 - xi2) * (1.0 - sub.mu) ** sub.j * xi2**sub.j / (1.0 - mu_xi2) ** (sub.j + 1)


def subtraction_success_probability_series(
    alpha: float, sub: SubtractionParams, n_max: int = SERIES_MAX_N
) -> float:
    """Binomial-sum form (1 - xi^2) sum_{n=j}^{n_max} C(n, j) xi^(2n) (1 - mu)^j mu^(n - j)"""
    _mu_xi2(alpha, sub)
    xi2 = squeezing_parameter(alpha) ** 2
    n = np.arange(sub.j, n_max + 1)
    terms = special.binom(n, sub.j) * xi2**n * (1.0 - sub.mu) ** sub.j * sub.mu ** (n - sub.j)
    return float((1.0 - xi2) * terms.sum())


def subtracted_covariance(
    alpha: float,
    sub: SubtractionParams,
    correlation: CorrelationModel = CorrelationModel.PAPER_LITERAL,
) -> TwoModeCovariance:
    """Covariance (X', Y', Z_4') of the photon-subtracted two-mode state.

    PAPER_LITERAL uses Z_4' = sqrt(mu) xi (j + 1) / (1 - mu xi^2). GAUSSIAN is
    the exact photon-subtracted two-mode squeezed vacuum, twice that value;
    FOUR_STATE scales the Gaussian entry by Z_4 / sqrt(X^2 - 1) so that mu = 1,
    j = 0 gives back the four-state EPR correlation.
    """
    mu_xi2 = _mu_xi2(alpha, sub)
    xi = squeezing_parameter(alpha)
    j = sub.j
    x_prime = (mu_xi2 + 2 * j + 1) / (1.0 - mu_xi2)
    y_prime = (mu_xi2 * (2 * j + 1) + 1.0) / (1.0 - mu_xi2)
    z_prime = math.sqrt(sub.mu) * xi * (j + 1) / (1.0 - mu_xi2)

    correlation = CorrelationModel(correlation)
    if correlation is CorrelationModel.GAUSSIAN:
        z_prime *= 2.0
    elif correlation is CorrelationModel.FOUR_STATE and alpha > 0.0:
        params = ConstellationParams(alpha=alpha)
        z_prime *= 2.0 * correlation_z4(params) / gaussian_correlation(params)

    return TwoModeCovariance(a=x_prime, b=y_prime, c=z_prime)
