"""Composable key rate against collective attacks.

The rate keeps the robustness factor (1 - eps_rob), bounds Eve's information
on the covariance matrix allowed by the confidence region of the estimated
moments, and pays the smoothing (AEP), entropy-estimation and privacy
amplification penalties.
"""

import logging
import math
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

from src.keyrate.asymptotic import (
    base_diagnostics,
    channel_state,
    effective_zeta,
    holevo_bound,
    mutual_information,
    spectrum_diagnostics,
)
from src.keyrate.models import ComposableInformation, FormulaModes, KeyRateResult, ProtocolParams, Regime
from src.physics.channel import ChannelModel, DetectorModel
from src.physics.constellation import TwoModeCovariance
from src.utils.errors import DomainError, PreconditionError

logger = logging.getLogger(__name__)


class ComposableParams(BaseModel):
    """Block length, failure probabilities and discretisation of the composable analysis"""

    model_config = ConfigDict(frozen=True)

    n_total: float = Field(default=1e14, gt=0.0, allow_inf_nan=False)
    eps: float = Field(default=1e-20, gt=0.0, lt=1.0)
    eps_sm: float = Field(default=1e-21, ge=0.0, lt=1.0)
    eps_bar: float = Field(default=1e-21, ge=0.0, lt=1.0)
    eps_pe: float = Field(default=1e-41, ge=0.0, lt=1.0)
    eps_cor: float = Field(default=1e-41, ge=0.0, lt=1.0)
    eps_ent: float = Field(default=1e-41, ge=0.0, lt=1.0)
    eps_rob: float = Field(default=1e-2, ge=0.0, le=1.0)
    d_bits: int = Field(default=5, ge=1)


class EpsilonBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    valid: bool
    lhs: float
    eps: float


class ConfidenceBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    omega_a_max: float
    omega_b_max: float
    omega_c_min: float


def epsilon_budget_valid(p: ComposableParams) -> EpsilonBudget:
    """2 eps_sm + eps_bar + (eps_pe + eps_cor + eps_ent) / eps <= eps"""
    lhs = 2.0 * p.eps_sm + p.eps_bar + p.eps_pe / p.eps + p.eps_cor / p.eps + p.eps_ent / p.eps
    return EpsilonBudget(valid=lhs <= p.eps, lhs=lhs, eps=p.eps)


def aep_ent_corrections(n_total: float, d_bits: int, eps: float, eps_sm: float) -> Tuple[float, float]:
    """(Delta_AEP, Delta_ent) in bits, both taken with base-2 logarithms"""
    if not math.isfinite(n_total) or n_total < 1.0:
        raise DomainError(f"N must be at least 1, got {n_total!r}")
    if eps <= 0.0 or eps_sm <= 0.0:
        raise DomainError("eps and eps_sm must be positive")
    root_n = math.sqrt(n_total)
    d1 = d_bits + 1
    delta_aep = (
        root_n * d1**2
        + math.sqrt(16.0 * n_total) * d1 * math.log2(2.0 / eps_sm**2)
        + math.sqrt(4.0 * n_total) * math.log2(2.0 / (eps**2 * eps_sm))
        - 4.0 * eps_sm * d_bits / eps
    )
    delta_ent = math.log2(1.0 / eps) - math.sqrt(
        4.0 * n_total * math.log2(2.0 * n_total) ** 2 * math.log2(2.0 / eps_sm)
    )
    return delta_aep, delta_ent


def covariance_confidence_bounds(n_total: float, eps_pe: float, cov: TwoModeCovariance) -> ConfidenceBounds:
    """Worst-case Omega_a, Omega_b, Omega_c from the moment restraints of the propagated matrix.

    The empirical moments are set to their restraint values
    |X|^2 = (N + 3 sqrt N) a, |Y|^2 = (N + 3 sqrt N) b and
    <X, Y> = (N - 3 sqrt N) c. Confidence radicals use natural logarithms.
    """
    if not math.isfinite(n_total) or n_total <= 9.0:
        raise DomainError(f"N must exceed 9 for N - 3 sqrt N > 0, got {n_total!r}")
    if eps_pe <= 0.0:
        raise DomainError("eps_pe must be positive")
    root_n = math.sqrt(n_total)
    norm_x = (n_total + 3.0 * root_n) * cov.a
    norm_y = (n_total + 3.0 * root_n) * cov.b
    inner_xy = (n_total - 3.0 * root_n) * cov.c
    widen = 1.0 + 2.0 * math.sqrt(math.log(36.0 / eps_pe) / (n_total / 2.0))
    return ConfidenceBounds(
        omega_a_max=norm_x / n_total * widen - 1.0,
        omega_b_max=norm_y / n_total * widen - 1.0,
        omega_c_min=inner_xy / n_total
        - 5.0 * (norm_x + norm_y) * math.sqrt(math.log(8.0 / eps_pe) / (n_total / 2.0) ** 3),
    )


def snr_information(eta: float, v_mod: float, epsilon: float) -> float:
    """I = 1/2 log2(1 + eta V_M / (2 + eta epsilon))"""
    return 0.5 * math.log2(1.0 + eta * v_mod / (2.0 + eta * epsilon))


def composable_key_rate(
    proto: ProtocolParams,
    ch: ChannelModel,
    det: DetectorModel,
    comp: ComposableParams = ComposableParams(),
    zeta_opt: float = 1.0,
    modes: FormulaModes = FormulaModes(),
) -> KeyRateResult:
    """K_comp = P_(j) (1 - eps_rob) {beta zeta I - F(Omega) - (Delta_AEP + Delta_ent + 2 log2(1 / (2 eps_bar))) / N}"""
    budget = epsilon_budget_valid(comp)
    if not budget.valid:
        raise PreconditionError(f"epsilon budget {budget.lhs:.6g} exceeds eps = {comp.eps:.6g}")
    if comp.eps_bar <= 0.0:
        raise DomainError("eps_bar must be positive")

    state = channel_state(proto, ch, det, modes)
    zeta = effective_zeta(proto, zeta_opt)
    i_cov = max(mutual_information(state.propagated, modes.mutual_information), 0.0)
    i_snr = snr_information(ch.eta, proto.constellation.v_mod, ch.epsilon)
    i_ab = i_snr if modes.composable_information is ComposableInformation.SNR else i_cov

    bounds = covariance_confidence_bounds(comp.n_total, comp.eps_pe, state.holevo_input)
    worst_cov = TwoModeCovariance(
        a=bounds.omega_a_max + 1.0,
        b=bounds.omega_b_max + 1.0,
        c=max(bounds.omega_c_min, 0.0),
    )
    f_omega, spectrum = holevo_bound(worst_cov, state.noise)
    delta_aep, delta_ent = aep_ent_corrections(comp.n_total, comp.d_bits, comp.eps, comp.eps_sm)
    if delta_ent < 0.0:
        logger.warning(f"Delta_ent = {delta_ent:.6g} is negative at N = {comp.n_total:.3g}")
    penalty = (delta_aep + delta_ent + 2.0 * math.log2(1.0 / (2.0 * comp.eps_bar))) / comp.n_total

    bracket = det.beta * zeta * i_ab - f_omega - penalty
    rate = state.p_success * (1.0 - comp.eps_rob) * bracket

    diagnostics = base_diagnostics(proto, ch, det, state, modes, zeta)
    diagnostics.update(spectrum_diagnostics(spectrum))
    diagnostics.update(
        {
            "i_snr": i_snr,
            "i_covariance": i_cov,
            "s_eb": f_omega,
            "n_total": comp.n_total,
            "eps_budget_lhs": budget.lhs,
            "omega_a_max": bounds.omega_a_max,
            "omega_b_max": bounds.omega_b_max,
            "omega_c_min": bounds.omega_c_min,
            "delta_aep": delta_aep,
            "delta_ent": delta_ent,
            "delta_ent_negative": delta_ent < 0.0,
            "penalty": penalty,
            "leak_ec_per_signal": 2.0 * (1.0 - det.beta) * i_ab,
            "n_pe": comp.d_bits * comp.n_total,
            "bracket": bracket,
        }
    )
    logger.debug(f"K_comp(N={comp.n_total:.3g}, {ch.distance_km:.3f} km) = {rate:.6e}")
    return KeyRateResult(
        rate=rate,
        i_ab=i_ab,
        s_eb=f_omega,
        regime=Regime.COMPOSABLE,
        feasible=rate > 0.0,
        diagnostics=diagnostics,
    )
