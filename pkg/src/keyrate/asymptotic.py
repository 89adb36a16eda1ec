"""Asymptotic secret key rate under collective attacks with reverse reconciliation.

K = P_(j) [beta zeta I(A:B) - S(E:B)], where the Holevo information S(E:B) is
obtained from the symplectic spectrum of the propagated covariance matrix
and of the matrix conditioned on Bob's homodyne outcome, with trusted
detector noise.
"""

import logging
import math
from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict

from src.keyrate.models import (
    Diagnostic,
    FormulaModes,
    HolevoMode,
    KeyRateResult,
    MutualInformationMode,
    ProtocolParams,
    Regime,
    Scheme,
    SymplecticSpectrum,
)
from src.physics.channel import ChannelModel, DetectorModel, NoiseBudget, noise_budget, propagate
from src.physics.constellation import TwoModeCovariance, epr_covariance
from src.physics.subtraction import (
    CorrelationModel,
    subtracted_covariance,
    subtraction_success_probability,
)
from src.utils.errors import DomainError, NumericalConsistencyError

logger = logging.getLogger(__name__)

ENTROPY_TOLERANCE = 1e-9
DISCRIMINANT_TOLERANCE = 1e-9
KAPPA_TOLERANCE = 1e-6


def von_neumann_g(x: float) -> float:
    """G(x) = (x + 1) log2(x + 1) - x log2 x, with G(0) = 0"""
    if not math.isfinite(x) or x < -ENTROPY_TOLERANCE:
        raise DomainError(f"G(x) needs x >= 0, got {x!r}")
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def mutual_information(
    cov: TwoModeCovariance, mode: MutualInformationMode = MutualInformationMode.CORRECTED
) -> float:
    """Alice-Bob mutual information 1/2 log2(V_A / V_A|B) in bits.

    The corrected form conditions the heterodyne variance (a + 1) / 2 on Bob;
    the printed form subtracts from a. The printed value may come out
    negative and is returned as is.
    """
    v_a = (cov.a + 1.0) / 2.0
    base = v_a if MutualInformationMode(mode) is MutualInformationMode.CORRECTED else cov.a
    v_cond = base - cov.c**2 / (2.0 * cov.b)
    if v_cond <= 0.0:
        raise NumericalConsistencyError(f"conditional variance V_A|B = {v_cond} is not positive")
    return 0.5 * math.log2(v_a / v_cond)


def _symplectic_pair(trace: float, det: float, label: str) -> Tuple[float, float]:
    disc = trace * trace - 4.0 * det
    if disc < -DISCRIMINANT_TOLERANCE * max(1.0, trace * trace):
        raise NumericalConsistencyError(f"negative discriminant {disc} in the {label} spectrum")
    root = math.sqrt(max(disc, 0.0))
    return math.sqrt(max((trace + root) / 2.0, 0.0)), math.sqrt(max((trace - root) / 2.0, 0.0))


def holevo_bound(cov_line: TwoModeCovariance, noise: NoiseBudget) -> Tuple[float, SymplecticSpectrum]:
    """Holevo information S(E:B) of the propagated matrix, before the detector.

    kappa1,2 are the symplectic eigenvalues of the propagated matrix and
    kappa3,4 those of Alice's mode together with the detector ancillas,
    conditioned on Bob's homodyne result.
    """
    a, b, c = cov_line.a, cov_line.b, cov_line.c
    chi_hom = noise.chi_hom
    big_a = a * a + b * b - 2.0 * c * c
    big_b = (a * b - c * c) ** 2
    kappa1, kappa2 = _symplectic_pair(big_a, big_b, "Eve")
    sqrt_b = math.sqrt(big_b)
    big_c = (big_a * chi_hom + a * sqrt_b + b) / (b + chi_hom)
    big_d = sqrt_b * (a + sqrt_b * chi_hom) / (b + chi_hom)
    kappa3, kappa4 = _symplectic_pair(big_c, big_d, "conditional")

    spectrum = SymplecticSpectrum(
        kappa1=kappa1, kappa2=kappa2, kappa3=kappa3, kappa4=kappa4, A=big_a, B=big_b, C=big_c, D=big_d
    )
    for name in ("kappa1", "kappa2", "kappa3", "kappa4"):
        if getattr(spectrum, name) < 1.0 - KAPPA_TOLERANCE:
            raise NumericalConsistencyError(f"{name} = {getattr(spectrum, name)} is below the vacuum limit")

    def g(kappa: float) -> float:
        return von_neumann_g(max((kappa - 1.0) / 2.0, 0.0))

    s_eb = g(kappa1) + g(kappa2) - g(kappa3) - g(kappa4)
    if s_eb < -ENTROPY_TOLERANCE:
        raise NumericalConsistencyError(f"negative Holevo information {s_eb}")
    return max(s_eb, 0.0), spectrum


class ChannelState(BaseModel):
    """Source covariance, its propagated forms and the subtraction probability"""

    model_config = ConfigDict(frozen=True)

    source: TwoModeCovariance
    propagated: TwoModeCovariance
    holevo_input: TwoModeCovariance
    noise: NoiseBudget
    p_success: float


def source_covariance(proto: ProtocolParams, modes: FormulaModes) -> Tuple[TwoModeCovariance, float]:
    """Pre-channel covariance (X', Y', Z') of the scheme and its heralding probability"""
    alpha = proto.constellation.alpha
    if proto.scheme is Scheme.FOUR_STATE:
        return epr_covariance(proto.constellation), 1.0
    correlation = (
        CorrelationModel.GAUSSIAN if proto.scheme is Scheme.GAUSSIAN_PS else modes.subtraction_correlation
    )
    cov = subtracted_covariance(alpha, proto.subtraction, correlation)
    return cov, subtraction_success_probability(alpha, proto.subtraction)


def channel_state(
    proto: ProtocolParams, ch: ChannelModel, det: DetectorModel, modes: FormulaModes
) -> ChannelState:
    source, p_success = source_covariance(proto, modes)
    propagated = propagate(source, ch)
    if modes.holevo is HolevoMode.PAPER_LITERAL:
        # printed forms use V = X' on both diagonal entries
        holevo_input = propagate(TwoModeCovariance(a=source.a, b=source.a, c=source.c), ch)
    else:
        holevo_input = propagated
    return ChannelState(
        source=source,
        propagated=propagated,
        holevo_input=holevo_input,
        noise=noise_budget(ch, det),
        p_success=p_success,
    )


def effective_zeta(proto: ProtocolParams, zeta_opt: float) -> float:
    """Only the proposed scheme carries the discrimination gain"""
    if zeta_opt < 0.0 or not math.isfinite(zeta_opt):
        raise DomainError(f"zeta_opt must be finite and non-negative, got {zeta_opt!r}")
    return zeta_opt if proto.uses_discrimination else 1.0


def base_diagnostics(
    proto: ProtocolParams,
    ch: ChannelModel,
    det: DetectorModel,
    state: ChannelState,
    modes: FormulaModes,
    zeta: float,
) -> Dict[str, Diagnostic]:
    diagnostics: Dict[str, Diagnostic] = {
        "scheme": proto.scheme.value,
        "alpha": proto.constellation.alpha,
        "v_mod": proto.constellation.v_mod,
        "mu": proto.subtraction.mu,
        "j": proto.subtraction.j,
        "distance_km": ch.distance_km,
        "eta": ch.eta,
        "epsilon": ch.epsilon,
        "beta": det.beta,
        "zeta": zeta,
        "p_success": state.p_success,
        "x_prime": state.source.a,
        "y_prime": state.source.b,
        "z_prime": state.source.c,
        "a": state.propagated.a,
        "b": state.propagated.b,
        "c": state.propagated.c,
        "chi_line": state.noise.chi_line,
        "chi_hom": state.noise.chi_hom,
        "chi_tot": state.noise.chi_tot,
    }
    diagnostics.update(modes.tags())
    return diagnostics


def spectrum_diagnostics(spectrum: SymplecticSpectrum, prefix: str = "") -> Dict[str, Diagnostic]:
    return {f"{prefix}{key}": value for key, value in spectrum.model_dump().items()}


def asymptotic_key_rate(
    proto: ProtocolParams,
    ch: ChannelModel,
    det: DetectorModel,
    zeta_opt: float = 1.0,
    modes: FormulaModes = FormulaModes(),
) -> KeyRateResult:
    """K_asym = P_(j) [beta zeta I(A:B) - S(E:B)], unclamped"""
    state = channel_state(proto, ch, det, modes)
    zeta = effective_zeta(proto, zeta_opt)
    i_raw = mutual_information(state.propagated, modes.mutual_information)
    i_ab = max(i_raw, 0.0)
    s_eb, spectrum = holevo_bound(state.holevo_input, state.noise)

    bracket = det.beta * zeta * i_ab - s_eb
    rate = state.p_success * bracket

    diagnostics = base_diagnostics(proto, ch, det, state, modes, zeta)
    diagnostics.update(spectrum_diagnostics(spectrum))
    diagnostics.update({"i_ab_raw": i_raw, "s_eb": s_eb, "bracket": bracket})
    logger.debug(f"K_asym({proto.scheme.value}, {ch.distance_km:.3f} km) = {rate:.6e}")
    return KeyRateResult(
        rate=rate,
        i_ab=i_ab,
        s_eb=s_eb,
        regime=Regime.ASYMPTOTIC,
        feasible=rate > 0.0,
        diagnostics=diagnostics,
    )
