"""Finite-size secret key rate.

Of the N exchanged signals, n = key_fraction * N form the key and the other
m = N - n are disclosed to estimate the channel. The Holevo information is
evaluated on the worst channel compatible with the estimate, and the
privacy amplification penalty Delta(n) is subtracted.
"""

import logging
import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.keyrate.asymptotic import (
    base_diagnostics,
    channel_state,
    effective_zeta,
    holevo_bound,
    mutual_information,
    spectrum_diagnostics,
)
from src.keyrate.models import FormulaModes, KeyRateResult, NoiseModel, ProtocolParams, Regime, Scheme
from src.physics.channel import ChannelModel, DetectorModel
from src.physics.constellation import TwoModeCovariance
from src.utils.errors import DomainError
from src.utils.numerics import inverse_normal_tail

logger = logging.getLogger(__name__)

# dimension of Bob's Hilbert space after binary discretisation
DIM_HB = 2


class FiniteSizeParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    # float so block lengths beyond 2^53 are accepted
    n_total: float = Field(default=1e14, gt=0.0, allow_inf_nan=False)
    key_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    eps_pe: float = Field(default=1e-10, gt=0.0, lt=1.0)
    eps_pa: float = Field(default=1e-10, gt=0.0, lt=1.0)
    eps_bar: float = Field(default=1e-10, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _both_parts_nonempty(self):
        if self.n < 1.0 or self.m < 1.0:
            raise ValueError(f"n = {self.n} and m = {self.m} must both be at least 1")
        return self

    @property
    def n(self) -> float:
        return self.key_fraction * self.n_total

    @property
    def m(self) -> float:
        return self.n_total - self.n


class WorstCaseChannel(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_min: float
    sigma2: float
    sigma2_max: float
    z: float
    negative_noise_variance: bool


def finite_size_correction(n: float, eps_bar: float, eps_pa: float) -> float:
    """Delta(n) = (2 dim H_B + 3) sqrt(log2(2 / eps_bar) / n) + (2 / n) log2(1 / eps_pa)"""
    if not math.isfinite(n) or n < 1.0:
        raise DomainError(f"n must be at least 1, got {n!r}")
    for name, value in (("eps_bar", eps_bar), ("eps_pa", eps_pa)):
        if not 0.0 < value < 1.0:
            raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
    return (2 * DIM_HB + 3) * math.sqrt(math.log2(2.0 / eps_bar) / n) + 2.0 / n * math.log2(1.0 / eps_pa)


def noise_variance(eta: float, epsilon: float, noise_model: NoiseModel, j: int = 1) -> float:
    """Baseline sigma^2 of the estimated channel y = t x + z"""
    noise_model = NoiseModel(noise_model)
    if noise_model is NoiseModel.STANDARD:
        return 1.0 + eta * epsilon
    if noise_model is NoiseModel.PAPER_LITERAL:
        return 1.0 + eta * (epsilon - 3.0)
    # b - eta X' of the propagated matrix, since Y' - X' = -2j
    return 1.0 + eta * (epsilon - 1.0 - 2.0 * j)


def worst_case_channel(
    m: float,
    eta: float,
    epsilon: float,
    x_prime: float,
    eps_pe: float = 1e-10,
    noise_model: NoiseModel = NoiseModel.MATCHED,
    j: int = 1,
) -> WorstCaseChannel:
    """Lower confidence bound on t = sqrt(eta) and upper bound on sigma^2.

    t_min = sqrt(eta) - z sqrt(sigma^2 / (m X')) and
    sigma2_max = sigma^2 + z sqrt(2) sigma^2 / sqrt(m), with z = z(eps_pe / 2).
    A negative sigma^2 is flagged and its magnitude sets the widths.
    """
    if not math.isfinite(m) or m < 1.0:
        raise DomainError(f"m must be at least 1, got {m!r}")
    if x_prime <= 0.0:
        raise DomainError(f"X' must be positive, got {x_prime!r}")
    z = inverse_normal_tail(eps_pe / 2.0)
    sigma2 = noise_variance(eta, epsilon, noise_model, j)
    negative = sigma2 < 0.0
    if negative:
        logger.warning(f"noise variance {sigma2:.6g} is negative under the {NoiseModel(noise_model).value} model")
    width = abs(sigma2)
    return WorstCaseChannel(
        t_min=math.sqrt(eta) - z * math.sqrt(width / (m * x_prime)),
        sigma2=sigma2,
        sigma2_max=sigma2 + z * math.sqrt(2.0) * width / math.sqrt(m),
        z=z,
        negative_noise_variance=negative,
    )


def finite_size_key_rate(
    proto: ProtocolParams,
    ch: ChannelModel,
    det: DetectorModel,
    fin: FiniteSizeParams = FiniteSizeParams(),
    zeta_opt: float = 1.0,
    modes: FormulaModes = FormulaModes(),
) -> KeyRateResult:
    """K_fini = (n P_(j) / N) [beta zeta I(A:B) - S_epsPE(E:B) - Delta(n)]"""
    state = channel_state(proto, ch, det, modes)
    zeta = effective_zeta(proto, zeta_opt)
    i_raw = mutual_information(state.propagated, modes.mutual_information)
    i_ab = max(i_raw, 0.0)

    j = 0 if proto.scheme is Scheme.FOUR_STATE else proto.subtraction.j
    worst = worst_case_channel(fin.m, ch.eta, ch.epsilon, state.source.a, fin.eps_pe, modes.noise_model, j)
    t_min = min(max(worst.t_min, 0.0), math.sqrt(ch.eta))
    nominal = state.holevo_input
    # b_worst >= nominal b + sigma^2 width and 0 <= c_worst <= nominal c
    width = worst.sigma2_max - worst.sigma2
    worst_cov = TwoModeCovariance(
        a=nominal.a,
        b=max(t_min**2 * state.source.a + worst.sigma2_max, nominal.b + width),
        c=t_min / math.sqrt(ch.eta) * nominal.c if ch.eta > 0.0 else 0.0,
    )
    s_pe, spectrum = holevo_bound(worst_cov, state.noise)
    delta = finite_size_correction(fin.n, fin.eps_bar, fin.eps_pa)

    bracket = det.beta * zeta * i_ab - s_pe - delta
    rate = fin.n / fin.n_total * state.p_success * bracket

    diagnostics = base_diagnostics(proto, ch, det, state, modes, zeta)
    diagnostics.update(spectrum_diagnostics(spectrum))
    diagnostics.update(
        {
            "i_ab_raw": i_raw,
            "s_eb": s_pe,
            "n_total": fin.n_total,
            "n": fin.n,
            "m": fin.m,
            "z": worst.z,
            "t_min": worst.t_min,
            "t_min_clamped": worst.t_min < 0.0,
            "sigma2": worst.sigma2,
            "sigma2_max": worst.sigma2_max,
            "negative_noise_variance": worst.negative_noise_variance,
            "b_worst": worst_cov.b,
            "c_worst": worst_cov.c,
            "delta_n": delta,
            "bracket": bracket,
        }
    )
    logger.debug(f"K_fini(N={fin.n_total:.3g}, {ch.distance_km:.3f} km) = {rate:.6e}")
    return KeyRateResult(
        rate=rate,
        i_ab=i_ab,
        s_eb=s_pe,
        regime=Regime.FINITE,
        feasible=rate > 0.0,
        diagnostics=diagnostics,
    )
