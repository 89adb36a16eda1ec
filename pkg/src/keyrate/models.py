"""Parameter and result records shared by the key-rate regimes."""

from enum import Enum
from typing import Dict, Union

from pydantic import BaseModel, ConfigDict, Field

from src.physics.constellation import ConstellationParams
from src.physics.subtraction import CorrelationModel, SubtractionParams

Diagnostic = Union[float, int, bool, str]


class Regime(str, Enum):
    ASYMPTOTIC = "asymptotic"
    FINITE = "finite"
    COMPOSABLE = "composable"


class MutualInformationMode(str, Enum):
    CORRECTED = "corrected"
    PAPER_LITERAL = "paper-literal"


class HolevoMode(str, Enum):
    GENERALIZED = "generalized"
    PAPER_LITERAL = "paper-literal"


class NoiseModel(str, Enum):
    """Baseline noise variance sigma^2 of the finite-size worst-case channel"""

    MATCHED = "matched"
    PAPER_LITERAL = "paper-literal"
    STANDARD = "standard"


class ComposableInformation(str, Enum):
    COVARIANCE = "covariance"
    SNR = "snr"


class Scheme(str, Enum):
    """Protocol variants compared over distance"""

    FOUR_STATE = "four-state"
    GAUSSIAN_PS = "gaussian-ps"
    FOUR_STATE_PS = "four-state-ps"
    PROPOSED = "proposed"


class FormulaModes(BaseModel):
    """Switches between the printed formulas and their corrected forms"""

    model_config = ConfigDict(frozen=True)

    mutual_information: MutualInformationMode = MutualInformationMode.CORRECTED
    holevo: HolevoMode = HolevoMode.GENERALIZED
    subtraction_correlation: CorrelationModel = CorrelationModel.FOUR_STATE
    noise_model: NoiseModel = NoiseModel.MATCHED
    composable_information: ComposableInformation = ComposableInformation.COVARIANCE

    @classmethod
    def corrected(cls) -> "FormulaModes":
        return cls()

    @classmethod
    def paper_literal(cls) -> "FormulaModes":
        return cls(
            mutual_information=MutualInformationMode.PAPER_LITERAL,
            holevo=HolevoMode.PAPER_LITERAL,
            subtraction_correlation=CorrelationModel.PAPER_LITERAL,
            noise_model=NoiseModel.PAPER_LITERAL,
            composable_information=ComposableInformation.SNR,
        )

    @classmethod
    def preset(cls, name: str) -> "FormulaModes":
        presets = {"corrected": cls.corrected, "paper-literal": cls.paper_literal}
        if name not in presets:
            raise ValueError(f"unknown formula mode preset {name!r}, expected one of {sorted(presets)}")
        return presets[name]()

    def tags(self) -> Dict[str, str]:
        return {f"mode.{key}": value.value for key, value in self}


class ProtocolParams(BaseModel):
    """Transmitter side of the protocol: constellation, subtraction and scheme"""

    model_config = ConfigDict(frozen=True)

    constellation: ConstellationParams
    subtraction: SubtractionParams = SubtractionParams(mu=1.0, j=0)
    scheme: Scheme = Scheme.PROPOSED

    @classmethod
    def from_v_mod(cls, v_mod: float, mu: float, j: int, scheme: Scheme = Scheme.PROPOSED) -> "ProtocolParams":
        return cls(
            constellation=ConstellationParams.from_v_mod(v_mod),
            subtraction=SubtractionParams(mu=mu, j=j),
            scheme=scheme,
        )

    @property
    def uses_subtraction(self) -> bool:
        return self.scheme is not Scheme.FOUR_STATE

    @property
    def uses_discrimination(self) -> bool:
        return self.scheme is Scheme.PROPOSED


class SymplecticSpectrum(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float
    A: float
    B: float
    C: float
    D: float


class KeyRateResult(BaseModel):
    """Raw key rate in bits per pulse; negative values are reported unclamped"""

    model_config = ConfigDict(frozen=True)

    rate: float
    i_ab: float = Field(ge=0.0)
    s_eb: float = Field(ge=0.0)
    regime: Regime
    feasible: bool
    diagnostics: Dict[str, Diagnostic] = Field(default_factory=dict)
