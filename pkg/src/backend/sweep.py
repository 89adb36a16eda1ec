"""Parameter sweeps, optimisation of mu and V_M, and the maximum-distance search."""

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from functools import partial
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize

from src.keyrate.asymptotic import asymptotic_key_rate
from src.keyrate.composable import ComposableParams, composable_key_rate
from src.keyrate.finite import FiniteSizeParams, finite_size_key_rate
from src.keyrate.models import FormulaModes, KeyRateResult, ProtocolParams, Regime, Scheme
from src.physics.channel import ChannelModel, DetectorModel
from src.physics.discrimination import DiscriminationConfig, simulate_adaptive_receiver

logger = logging.getLogger(__name__)

MU_BOUNDS = (0.01, 0.99)
V_MOD_BOUNDS = (0.01, 2.0)
DISTANCE_BOUNDS = (0.0, 600.0)
DISTANCE_RESOLUTION_KM = 0.1
REFINE_TOLERANCE = 1e-10

T = TypeVar("T")


class KeyRateSetup(BaseModel):
    """Everything needed to evaluate one key rate"""

    model_config = ConfigDict(frozen=True)

    v_mod: float = Field(default=0.6, ge=0.0, allow_inf_nan=False)
    mu: float = Field(default=0.65, gt=0.0, le=1.0)
    j: int = Field(default=1, ge=0)
    scheme: Scheme = Scheme.PROPOSED
    distance_km: float = Field(default=100.0, ge=0.0, allow_inf_nan=False)
    epsilon: float = Field(default=0.01, ge=0.0, allow_inf_nan=False)
    attenuation: float = Field(default=0.2, gt=0.0)
    detector: DetectorModel = DetectorModel()
    regime: Regime = Regime.ASYMPTOTIC
    finite: FiniteSizeParams = FiniteSizeParams()
    composable: ComposableParams = ComposableParams()
    modes: FormulaModes = FormulaModes()
    zeta_opt: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    optimize_mu: bool = True
    mu_grid_points: int = Field(default=33, ge=3)

    def replace(self, **changes) -> "KeyRateSetup":
        return self.model_validate({**dict(self), **changes})

    def protocol(self, mu: Optional[float] = None) -> ProtocolParams:
        return ProtocolParams.from_v_mod(self.v_mod, self.mu if mu is None else mu, self.j, self.scheme)

    def channel(self) -> ChannelModel:
        return ChannelModel.from_distance(self.distance_km, self.epsilon, self.attenuation)


class MuOptimum(BaseModel):
    mu_star: float
    rate_star: float
    feasible: bool


class VModOptimum(BaseModel):
    v_mod_star: float
    rate_star: float
    feasible: bool


class MaxDistance(BaseModel):
    scheme: Scheme
    distance_km: float
    rate_threshold: float
    # the rate at 0 km already misses the threshold
    below_threshold: bool


class SweepVariable(str, Enum):
    DISTANCE_KM = "distance_km"
    V_MOD = "v_mod"
    MU = "mu"
    N_TOTAL = "n_total"
    MEAN_PHOTON = "mean_photon"


class SweepScale(str, Enum):
    LINEAR = "linear"
    LOG = "log"


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    variable: SweepVariable = SweepVariable.DISTANCE_KM
    start: float = Field(default=0.0, allow_inf_nan=False)
    stop: float = Field(default=400.0, allow_inf_nan=False)
    points: int = Field(default=81, ge=2)
    scale: SweepScale = SweepScale.LINEAR
    fixed: KeyRateSetup = KeyRateSetup()
    discrimination: DiscriminationConfig = DiscriminationConfig(mean_photon=1.0)
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_range(self):
        if not self.start < self.stop:
            raise ValueError(f"sweep_min {self.start} must be below sweep_max {self.stop}")
        if self.scale is SweepScale.LOG and self.start <= 0.0:
            raise ValueError("a log sweep needs sweep_min > 0")
        if self.variable is SweepVariable.N_TOTAL and self.fixed.regime is Regime.ASYMPTOTIC:
            raise ValueError("sweeping n_total needs the finite or composable regime")
        return self

    def grid(self) -> np.ndarray:
        if self.scale is SweepScale.LOG:
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


def parallel_map(func: Callable[..., T], items: Sequence, workers: int = 1) -> List[T]:
    """Map in input order, on a thread pool when more than one worker is asked for"""
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(func, items))
    return [func(item) for item in items]


def evaluate_rate(setup: KeyRateSetup, mu: Optional[float] = None) -> KeyRateResult:
    """Key rate of the selected regime at a fixed mu"""
    proto = setup.protocol(mu)
    channel = setup.channel()
    if setup.regime is Regime.FINITE:
        return finite_size_key_rate(proto, channel, setup.detector, setup.finite, setup.zeta_opt, setup.modes)
    if setup.regime is Regime.COMPOSABLE:
        return composable_key_rate(
            proto, channel, setup.detector, setup.composable, setup.zeta_opt, setup.modes
        )
    return asymptotic_key_rate(proto, channel, setup.detector, setup.zeta_opt, setup.modes)


def _maximize(objective: Callable[[float], float], bounds, grid_points: int):
    """Grid search followed by bounded refinement around the best cell.

    Returns (x_star, f_star). The grid is ascending and argmax keeps the
    first maximum, so ties resolve toward the smaller x.
    """
    grid = np.linspace(bounds[0], bounds[1], grid_points)
    values = np.array([objective(float(x)) for x in grid])
    best = int(np.argmax(values))
    x_star, f_star = float(grid[best]), float(values[best])

    lo = float(grid[max(best - 1, 0)])
    hi = float(grid[min(best + 1, grid_points - 1)])
    refined = optimize.minimize_scalar(
        lambda x: -objective(x), bounds=(lo, hi), method="bounded", options={"xatol": REFINE_TOLERANCE}
    )
    if refined.success and -refined.fun > f_star:
        x_star, f_star = float(refined.x), float(-refined.fun)
    return x_star, f_star


def optimize_mu(setup: KeyRateSetup, grid_points: Optional[int] = None) -> MuOptimum:
    """Beam-splitter transmittance maximising the selected regime's rate"""
    grid_points = grid_points or setup.mu_grid_points
    if grid_points < 3:
        raise ValueError(f"grid_points must be at least 3, got {grid_points}")
    mu_star, rate_star = _maximize(lambda mu: evaluate_rate(setup, mu).rate, MU_BOUNDS, grid_points)
    if rate_star <= 0.0:
        logger.debug(f"no positive rate over mu at {setup.distance_km:.3f} km")
    return MuOptimum(mu_star=mu_star, rate_star=rate_star, feasible=rate_star > 0.0)


def key_rate(setup: KeyRateSetup) -> KeyRateResult:
    """Rate of the configured scheme, at the optimal mu when optimisation is on"""
    subtracting = setup.scheme is not Scheme.FOUR_STATE
    if setup.optimize_mu and subtracting:
        return evaluate_rate(setup, optimize_mu(setup).mu_star)
    return evaluate_rate(setup)


def optimize_v_mod(setup: KeyRateSetup, grid_points: int = 40) -> VModOptimum:
    """Modulation variance maximising key_rate(setup) over [0.01, 2.0]"""
    v_star, rate_star = _maximize(
        lambda v: key_rate(setup.replace(v_mod=v)).rate, V_MOD_BOUNDS, grid_points
    )
    if rate_star <= 0.0:
        logger.warning(f"no positive rate over V_M for {setup.scheme.value} at {setup.distance_km} km")
    return VModOptimum(v_mod_star=v_star, rate_star=rate_star, feasible=rate_star > 0.0)


def max_distance(setup: KeyRateSetup, rate_threshold: float = 1e-6) -> MaxDistance:
    """Largest distance in [0, 600] km whose rate reaches the threshold, to 0.1 km.

    Bisection assumes the rate does not increase with distance.
    """
    if not rate_threshold > 0.0:
        raise ValueError(f"rate_threshold must be positive, got {rate_threshold}")

    def reaches(distance: float) -> bool:
        return key_rate(setup.replace(distance_km=distance)).rate >= rate_threshold

    lo, hi = DISTANCE_BOUNDS
    if not reaches(lo):
        logger.warning(f"{setup.scheme.value} misses rate {rate_threshold:g} already at 0 km")
        return MaxDistance(scheme=setup.scheme, distance_km=0.0, rate_threshold=rate_threshold, below_threshold=True)
    if reaches(hi):
        return MaxDistance(scheme=setup.scheme, distance_km=hi, rate_threshold=rate_threshold, below_threshold=False)
    while hi - lo > DISTANCE_RESOLUTION_KM:
        mid = 0.5 * (lo + hi)
        if reaches(mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"Maximum distance for {setup.scheme.value}: {lo:.1f} km")
    return MaxDistance(scheme=setup.scheme, distance_km=lo, rate_threshold=rate_threshold, below_threshold=False)


def _keyrate_row(spec: SweepSpec, x: float) -> dict:
    fixed = spec.fixed
    if spec.variable is SweepVariable.N_TOTAL:
        setup = fixed.replace(
            finite=fixed.finite.model_copy(update={"n_total": x}),
            composable=fixed.composable.model_copy(update={"n_total": x}),
        )
    elif spec.variable is SweepVariable.MU:
        setup = fixed.replace(mu=x, optimize_mu=False)
    else:
        setup = fixed.replace(**{spec.variable.value: x})
    result = key_rate(setup)
    label = setup.scheme.value
    return {
        spec.variable.value: x,
        f"{label}:rate": result.rate,
        f"{label}:i_ab": result.i_ab,
        f"{label}:s_eb": result.s_eb,
        f"{label}:mu": result.diagnostics["mu"],
    }


def _discrimination_row(spec: SweepSpec, x: float) -> dict:
    cfg = spec.discrimination.model_copy(update={"mean_photon": x})
    result = simulate_adaptive_receiver(cfg)
    receiver = f"receiver_m{cfg.stages}"
    return {
        spec.variable.value: x,
        "sql:p_err": result.p_sql,
        f"{receiver}:p_err": result.p_rec,
        f"{receiver}:stderr": result.p_rec_stderr,
        "helstrom:p_err": result.p_hel,
        "zeta_opt:ratio": result.zeta_opt,
    }


def run_sweep(spec: SweepSpec) -> pd.DataFrame:
    """Evaluate the sweep grid and return one row per point, ordered by x"""
    grid = [float(x) for x in spec.grid()]
    if spec.variable is SweepVariable.MEAN_PHOTON:
        if min(grid) < 0.0:
            raise ValueError("mean_photon must be non-negative")
        row = partial(_discrimination_row, spec)
    else:
        row = partial(_keyrate_row, spec)
    logger.info(f"Sweeping {spec.variable.value} over {len(grid)} points")
    rows = parallel_map(row, grid, spec.workers)
    frame = pd.DataFrame(rows)
    return frame.sort_values(spec.variable.value, kind="stable").reset_index(drop=True)
