"""Closed-form math of the four-state (QPSK) ensemble.

Covers the lambda_k weights of the ensemble, the four-state correlation Z_4
and the covariance matrix of the entanglement-based picture. Covariance
matrices of the form [[a I, c Z], [c Z, b I]] (Z = diag(1, -1)) are carried
as the (a, b, c) triple in shot-noise units.
"""

import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.utils.errors import DomainError, NumericalConsistencyError

PHYSICALITY_TOLERANCE = 1e-9


class ConstellationParams(BaseModel):
    """Coherent amplitude of the four-state constellation (V_M = 2 alpha^2)"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(ge=0.0, allow_inf_nan=False)

    @classmethod
    def from_v_mod(cls, v_mod: float) -> "ConstellationParams":
        if not math.isfinite(v_mod) or v_mod < 0:
            raise DomainError(f"v_mod must be finite and non-negative, got {v_mod!r}")
        return cls(alpha=math.sqrt(v_mod / 2.0))

    @property
    def v_mod(self) -> float:
        return 2.0 * self.alpha**2


class TwoModeCovariance(BaseModel):
    """Two-mode covariance matrix [[a I, c Z], [c Z, b I]] in SNU"""

    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    c: float

    @field_validator("a", "b", "c")
    @classmethod
    def _finite(cls, value):
        if not math.isfinite(value):
            raise NumericalConsistencyError(f"covariance entry is not finite: {value!r}")
        return value

    def as_matrix(self) -> np.ndarray:
        """Full 4x4 matrix in (x_A, p_A, x_B, p_B) ordering"""
        a, b, c = self.a, self.b, self.c
        return np.array(
            [
                [a, 0.0, c, 0.0],
                [0.0, a, 0.0, -c],
                [c, 0.0, b, 0.0],
                [0.0, -c, 0.0, b],
            ]
        )

    def symplectic_eigenvalues(self) -> Tuple[float, float]:
        """(nu_plus, nu_minus) from the general two-mode invariants.

        Delta = det A + det B + 2 det C and the determinant of the full matrix
        fix nu^2 = (Delta +/- sqrt(Delta^2 - 4 det)) / 2.
        """
        delta = self.a**2 + self.b**2 - 2.0 * self.c**2
        det = (self.a * self.b - self.c**2) ** 2
        disc = max(delta**2 - 4.0 * det, 0.0)
        nu_plus = math.sqrt(max((delta + math.sqrt(disc)) / 2.0, 0.0))
        nu_minus = math.sqrt(max((delta - math.sqrt(disc)) / 2.0, 0.0))
        return nu_plus, nu_minus

    def is_physical(self, tol: float = PHYSICALITY_TOLERANCE) -> bool:
        if self.a < 1.0 - tol or self.b < 1.0 - tol:
            return False
        return self.symplectic_eigenvalues()[1] >= 1.0 - tol

    def check_physical(self, tol: float = PHYSICALITY_TOLERANCE) -> "TwoModeCovariance":
        if not self.is_physical(tol):
            nu_minus = self.symplectic_eigenvalues()[1]
            raise NumericalConsistencyError(
                f"covariance (a={self.a}, b={self.b}, c={self.c}) is unphysical: nu_minus={nu_minus}"
            )
        return self


def qpsk_states() -> np.ndarray:
    """Unit-amplitude constellation points exp(i (2k+1) pi / 4), k = 0..3"""
    k = np.arange(4)
    return np.exp(1j * (2 * k + 1) * np.pi / 4)


def lambda_coefficients(params: ConstellationParams) -> np.ndarray:
    """Weights [lambda_0, lambda_1, lambda_2, lambda_3] of the four-state ensemble"""
    x = params.alpha**2
    # cosh x - cos x is evaluated as 2 (sinh^2(x/2) + sin^2(x/2)) to avoid cancellation
    even_minus = 2.0 * (math.sinh(x / 2.0) ** 2 + math.sin(x / 2.0) ** 2)
    weights = 0.5 * math.exp(-x) * np.array(
        [
            math.cosh(x) + math.cos(x),
            math.sinh(x) + math.sin(x),
            even_minus,
            math.sinh(x) - math.sin(x),
        ]
    )
    return np.clip(weights, 0.0, None)


def correlation_z4(params: ConstellationParams) -> float:
    """Four-state correlation Z_4 = 2 alpha^2 sum_k lambda_{k-1}^{3/2} lambda_k^{-1/2}"""
    if params.alpha == 0.0:
        return 0.0
    lam = lambda_coefficients(params)
    total = 0.0
    for k in range(4):
        # vanishing lambda_k terms have limit 0
        if lam[k] > 0.0:
            total += lam[(k - 1) % 4] ** 1.5 / math.sqrt(lam[k])
    return 2.0 * params.alpha**2 * total


def gaussian_correlation(params: ConstellationParams) -> float:
    """Gaussian EPR correlation sqrt(X^2 - 1) with X = 1 + V_M"""
    x = 1.0 + params.v_mod
    return math.sqrt(x * x - 1.0)


def epr_covariance(params: ConstellationParams) -> TwoModeCovariance:
    """Covariance of the entanglement-based four-state source, X = Y = 1 + 2 alpha^2"""
    x = 1.0 + params.v_mod
    return TwoModeCovariance(a=x, b=x, c=correlation_z4(params))
