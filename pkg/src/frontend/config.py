"""Run configuration: a flat `key = value` text format with `#` comments.

Every key has a default, so an empty file is a complete configuration.
"""

import logging
import math
import os
from typing import Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator

from src.backend.sweep import KeyRateSetup, SweepScale, SweepSpec, SweepVariable
from src.keyrate.composable import ComposableParams
from src.keyrate.finite import FiniteSizeParams
from src.keyrate.models import (
    ComposableInformation,
    FormulaModes,
    HolevoMode,
    MutualInformationMode,
    NoiseModel,
    Regime,
    Scheme,
)
from src.physics.channel import DetectorModel
from src.physics.discrimination import DiscriminationConfig, optimal_improvement_ratio
from src.physics.subtraction import CorrelationModel
from src.utils.errors import ConfigValidationError

logger = logging.getLogger(__name__)

WORKERS_ENV = "CVQKD_WORKERS"
DEFAULT_V_MOD = 0.6
CONSISTENCY_TOLERANCE = 1e-12


class RunConfig(BaseModel):
    """Full parameter record of one invocation"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # constellation; give alpha or v_mod, the other is derived
    alpha: float = Field(default=math.sqrt(DEFAULT_V_MOD / 2.0), ge=0.0, allow_inf_nan=False)
    v_mod: float = Field(default=DEFAULT_V_MOD, ge=0.0, allow_inf_nan=False)

    # subtraction and detection
    mu: float = Field(default=0.65, gt=0.0, le=1.0)
    j: int = Field(default=1, ge=0)
    beta: float = Field(default=0.95, ge=0.0, le=1.0)
    tau: float = Field(default=0.6, gt=0.0, le=1.0)
    v_el: float = Field(default=0.05, ge=0.0, allow_inf_nan=False)

    # channel
    epsilon: float = Field(default=0.01, ge=0.0, allow_inf_nan=False)
    attenuation: float = Field(default=0.2, gt=0.0, allow_inf_nan=False)
    distance_km: float = Field(default=100.0, ge=0.0, allow_inf_nan=False)

    # discrimination receiver
    mean_photon: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    stages: int = Field(default=10, ge=1)
    trials: int = Field(default=100_000, ge=1)
    seed: int = Field(default=42, ge=0, lt=2**64)
    detector_efficiency: float = Field(default=1.0, gt=0.0, le=1.0)
    batch_size: int = Field(default=4096, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)
    zeta_opt: Union[Literal["auto"], float] = "auto"

    # finite size
    n_total: float = Field(default=1e14, gt=0.0, allow_inf_nan=False)
    key_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    eps_pe_finite: float = Field(default=1e-10, gt=0.0, lt=1.0)
    eps_pa: float = Field(default=1e-10, gt=0.0, lt=1.0)
    eps_bar_finite: float = Field(default=1e-10, gt=0.0, lt=1.0)

    # composable
    eps: float = Field(default=1e-20, gt=0.0, lt=1.0)
    eps_sm: float = Field(default=1e-21, gt=0.0, lt=1.0)
    eps_bar: float = Field(default=1e-21, gt=0.0, lt=1.0)
    eps_pe: float = Field(default=1e-41, ge=0.0, lt=1.0)
    eps_cor: float = Field(default=1e-41, ge=0.0, lt=1.0)
    eps_ent: float = Field(default=1e-41, ge=0.0, lt=1.0)
    eps_rob: float = Field(default=1e-2, ge=0.0, le=1.0)
    d_bits: int = Field(default=5, ge=1)

    # evaluation
    regime: Regime = Regime.ASYMPTOTIC
    scheme: Scheme = Scheme.PROPOSED
    optimize_mu: bool = True
    mu_grid_points: int = Field(default=33, ge=3)
    rate_threshold: float = Field(default=1e-6, gt=0.0, allow_inf_nan=False)
    reference_distance_km: float = Field(default=100.0, ge=0.0, allow_inf_nan=False)

    # formula modes; unset switches follow the preset
    mode: Literal["corrected", "paper-literal"] = "corrected"
    mutual_information: Optional[MutualInformationMode] = None
    holevo: Optional[HolevoMode] = None
    subtraction_correlation: Optional[CorrelationModel] = None
    noise_model: Optional[NoiseModel] = None
    composable_information: Optional[ComposableInformation] = None

    # sweep
    sweep_variable: SweepVariable = SweepVariable.DISTANCE_KM
    sweep_min: float = Field(default=0.0, allow_inf_nan=False)
    sweep_max: float = Field(default=400.0, allow_inf_nan=False)
    sweep_points: int = Field(default=81, ge=2)
    sweep_scale: SweepScale = SweepScale.LINEAR

    @model_validator(mode="before")
    @classmethod
    def _derive_amplitude(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        try:
            if data.get("alpha") is not None and data.get("v_mod") is None:
                data["v_mod"] = 2.0 * float(data["alpha"]) ** 2
            elif data.get("v_mod") is not None and data.get("alpha") is None:
                v_mod = float(data["v_mod"])
                if v_mod >= 0.0:
                    data["alpha"] = math.sqrt(v_mod / 2.0)
        except (TypeError, ValueError):
            # left to field validation, which names the key
            pass
        return data

    @field_validator("v_mod")
    @classmethod
    def _amplitude_consistent(cls, v_mod: float, info: ValidationInfo) -> float:
        alpha = info.data.get("alpha")
        if alpha is not None and abs(2.0 * alpha**2 - v_mod) > CONSISTENCY_TOLERANCE * max(1.0, v_mod):
            raise ValueError(f"v_mod = {v_mod} disagrees with alpha = {alpha} (v_mod = 2 alpha^2)")
        return v_mod

    @field_validator("zeta_opt")
    @classmethod
    def _zeta_non_negative(cls, value):
        if value != "auto" and (not math.isfinite(value) or value < 0.0):
            raise ValueError("zeta_opt must be 'auto' or a non-negative number")
        return value

    def formula_modes(self) -> FormulaModes:
        overrides = {
            key: getattr(self, key)
            for key in FormulaModes.model_fields
            if getattr(self, key) is not None
        }
        return FormulaModes.preset(self.mode).model_copy(update=overrides)

    def resolved_zeta(self) -> float:
        if self.zeta_opt == "auto":
            return optimal_improvement_ratio(self.mean_photon)
        return float(self.zeta_opt)

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        raw = os.environ.get(WORKERS_ENV)
        if raw is None:
            return 1
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigValidationError(WORKERS_ENV, f"not an integer: {raw!r}")
        if workers < 1:
            raise ConfigValidationError(WORKERS_ENV, f"must be at least 1, got {workers}")
        return workers

    def to_setup(self) -> KeyRateSetup:
        finite = _build(
            FiniteSizeParams,
            {"eps_pe": "eps_pe_finite", "eps_bar": "eps_bar_finite"},
            "n_total",
            n_total=self.n_total,
            key_fraction=self.key_fraction,
            eps_pe=self.eps_pe_finite,
            eps_pa=self.eps_pa,
            eps_bar=self.eps_bar_finite,
        )
        composable = ComposableParams(
            n_total=self.n_total,
            eps=self.eps,
            eps_sm=self.eps_sm,
            eps_bar=self.eps_bar,
            eps_pe=self.eps_pe,
            eps_cor=self.eps_cor,
            eps_ent=self.eps_ent,
            eps_rob=self.eps_rob,
            d_bits=self.d_bits,
        )
        return KeyRateSetup(
            v_mod=self.v_mod,
            mu=self.mu,
            j=self.j,
            scheme=self.scheme,
            distance_km=self.distance_km,
            epsilon=self.epsilon,
            attenuation=self.attenuation,
            detector=DetectorModel(tau=self.tau, v_el=self.v_el, beta=self.beta),
            regime=self.regime,
            finite=finite,
            composable=composable,
            modes=self.formula_modes(),
            zeta_opt=self.resolved_zeta(),
            optimize_mu=self.optimize_mu,
            mu_grid_points=self.mu_grid_points,
        )

    def to_discrimination(self) -> DiscriminationConfig:
        return DiscriminationConfig(
            mean_photon=self.mean_photon,
            stages=self.stages,
            trials=self.trials,
            seed=self.seed,
            detector_efficiency=self.detector_efficiency,
            batch_size=self.batch_size,
            workers=self.resolved_workers(),
        )

    def to_sweep(self) -> SweepSpec:
        return _build(
            SweepSpec,
            {"start": "sweep_min", "stop": "sweep_max", "points": "sweep_points", "scale": "sweep_scale"},
            "sweep_min",
            variable=self.sweep_variable,
            start=self.sweep_min,
            stop=self.sweep_max,
            points=self.sweep_points,
            scale=self.sweep_scale,
            fixed=self.to_setup(),
            discrimination=self.to_discrimination(),
            workers=self.resolved_workers(),
        )


def _config_error(e: ValidationError, key_map: Dict[str, str], fallback_key: str) -> ConfigValidationError:
    error = e.errors()[0]
    loc = error.get("loc") or (fallback_key,)
    key = key_map.get(str(loc[0]), str(loc[0]))
    return ConfigValidationError(key, error.get("msg", str(e)))


def _build(model_cls, key_map: Dict[str, str], fallback_key: str, **kwargs):
    """Validate a derived record, naming the offending configuration key on failure"""
    try:
        return model_cls(**kwargs)
    except ValidationError as e:
        raise _config_error(e, key_map, fallback_key)


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines into a validated RunConfig"""
    values: Dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigValidationError(f"line {number}", f"expected 'key = value', got {raw_line.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in RunConfig.model_fields:
            raise ConfigValidationError(key, "unknown key")
        if key in values:
            raise ConfigValidationError(key, "given more than once")
        values[key] = value

    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        raise _config_error(e, {}, "config")


def with_overrides(record: RunConfig, **overrides) -> RunConfig:
    """Copy of the record with command-line values applied and revalidated"""
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if not overrides:
        return record
    for key in overrides:
        if key not in RunConfig.model_fields:
            raise ConfigValidationError(key, "unknown key")
    values = record.model_dump()
    # the amplitude not being overridden is derived again
    if "v_mod" in overrides and "alpha" not in overrides:
        values.pop("alpha")
    if "alpha" in overrides and "v_mod" not in overrides:
        values.pop("v_mod")
    values.update(overrides)
    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        raise _config_error(e, {}, "config")


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigValidationError("config", f"cannot read {path}: {e}")
    logger.info(f"Loaded configuration from {path}")
    return parse_config(text)


def _render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_config(record: RunConfig) -> str:
    """Emit the record in the format parse_config reads; unset optional keys are omitted"""
    lines = ["# cvqkd run configuration"]
    for key in RunConfig.model_fields:
        value = getattr(record, key)
        if value is None:
            continue
        lines.append(f"{key} = {_render_value(value)}")
    return "\n".join(lines) + "\n"
