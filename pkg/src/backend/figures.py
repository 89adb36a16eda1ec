"""Datasets behind the figures: one x column and one `<curve>:<metric>` column per curve."""

import logging
import math
from typing import Callable, Dict, Optional

import numpy as np
import pandas as pd

from src.backend.sweep import KeyRateSetup, key_rate, optimize_mu, optimize_v_mod, parallel_map
from src.keyrate.models import Regime, Scheme
from src.physics.discrimination import DiscriminationConfig, simulate_adaptive_receiver
from src.physics.subtraction import SubtractionParams, subtraction_success_probability
from src.utils.errors import UsageError

logger = logging.getLogger(__name__)

FIG5_LOSSES_DB = (12, 16, 20, 24)
FIG6_EPSILONS = (0.002, 0.005, 0.008, 0.01)
FIG8_BLOCK_LENGTHS = (1e8, 1e10, 1e12, 1e14, 1e15, 1e16)
FIG9_DISTANCES_KM = (40, 80, 120, 160)
FIG9_INSET_DISTANCES_KM = (260, 280, 300, 320)


def _fig3(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int) -> pd.DataFrame:
    grid = np.linspace(0.1, 5.0, 50)
    stages = disc.stages

    def row(mean_photon: float) -> dict:
        result = simulate_adaptive_receiver(disc.model_copy(update={"mean_photon": mean_photon}))
        return {
            "mean_photon": mean_photon,
            "sql:p_err": result.p_sql,
            f"receiver_m{stages}:p_err": result.p_rec,
            f"receiver_m{stages}:stderr": result.p_rec_stderr,
            "helstrom:p_err": result.p_hel,
            "zeta_opt:ratio": result.zeta_opt,
        }

    return pd.DataFrame(parallel_map(row, [float(x) for x in grid], workers))


def _fig4(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int) -> pd.DataFrame:
    alpha = setup.protocol().constellation.alpha
    rows = []
    for mu in np.linspace(0.01, 0.99, 99):
        row = {"mu": float(mu)}
        for j in range(1, 6):
            row[f"j{j}:p_success"] = subtraction_success_probability(alpha, SubtractionParams(mu=float(mu), j=j))
        rows.append(row)
    return pd.DataFrame(rows)


def _v_mod_family(setup: KeyRateSetup, variants: Dict[str, KeyRateSetup], workers: int) -> pd.DataFrame:
    """Proposed and four-state rates over V_M, with the optimal mu, for each variant"""
    grid = [float(x) for x in np.linspace(0.05, 2.0, 40)]

    def row(v_mod: float) -> dict:
        out = {"v_mod": v_mod}
        for label, variant in variants.items():
            point = variant.replace(v_mod=v_mod)
            best = optimize_mu(point.replace(scheme=Scheme.PROPOSED))
            baseline = key_rate(point.replace(scheme=Scheme.FOUR_STATE))
            out[f"proposed_{label}:rate"] = best.rate_star
            out[f"proposed_{label}:mu_opt"] = best.mu_star
            out[f"four-state_{label}:rate"] = baseline.rate
        return out

    return pd.DataFrame(parallel_map(row, grid, workers))


def _fig5(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int) -> pd.DataFrame:
    base = setup.replace(regime=Regime.ASYMPTOTIC)
    variants = {f"{loss}db": base.replace(distance_km=loss / base.attenuation) for loss in FIG5_LOSSES_DB}
    return _v_mod_family(base, variants, workers)


def _fig6(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int) -> pd.DataFrame:
    base = setup.replace(regime=Regime.ASYMPTOTIC, distance_km=100.0)
    variants = {f"eps{eps:g}": base.replace(epsilon=eps) for eps in FIG6_EPSILONS}
    return _v_mod_family(base, variants, workers)


def reference_v_mod(setup: KeyRateSetup, reference_distance_km: float) -> float:
    """V_M of the four-state baseline optimum, shared by the proposed scheme"""
    baseline = setup.replace(scheme=Scheme.FOUR_STATE, distance_km=reference_distance_km)
    return optimize_v_mod(baseline).v_mod_star


def _fig7(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int, reference_km: float) -> pd.DataFrame:
    base = setup.replace(regime=Regime.ASYMPTOTIC)
    base = base.replace(v_mod=reference_v_mod(base, reference_km))
    grid = [float(x) for x in np.linspace(0.0, 400.0, 81)]

    def row(distance: float) -> dict:
        out = {"distance_km": distance}
        for scheme in Scheme:
            out[f"{scheme.value}:rate"] = key_rate(base.replace(scheme=scheme, distance_km=distance)).rate
        return out

    return pd.DataFrame(parallel_map(row, grid, workers))


def _fig8(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int, reference_km: float) -> pd.DataFrame:
    base = setup.replace(scheme=Scheme.PROPOSED)
    base = base.replace(v_mod=reference_v_mod(base.replace(regime=Regime.ASYMPTOTIC), reference_km))
    grid = [float(x) for x in np.linspace(0.0, 300.0, 61)]

    def row(distance: float) -> dict:
        point = base.replace(distance_km=distance)
        out = {"distance_km": distance}
        for n_total in FIG8_BLOCK_LENGTHS:
            finite = point.replace(
                regime=Regime.FINITE, finite=point.finite.model_copy(update={"n_total": n_total})
            )
            out[f"n1e{round(math.log10(n_total))}:rate"] = key_rate(finite).rate
        out["asymptotic:rate"] = key_rate(point.replace(regime=Regime.ASYMPTOTIC)).rate
        return out

    return pd.DataFrame(parallel_map(row, grid, workers))


def _fig9(setup: KeyRateSetup, disc: DiscriminationConfig, workers: int, reference_km: float) -> pd.DataFrame:
    base = setup.replace(scheme=Scheme.PROPOSED)
    base = base.replace(v_mod=reference_v_mod(base.replace(regime=Regime.ASYMPTOTIC), reference_km))
    grid = [float(x) for x in np.geomspace(1e8, 1e16, 17)]
    distances = FIG9_DISTANCES_KM + FIG9_INSET_DISTANCES_KM

    # asymptotic values do not depend on N
    asymptotic = {
        d: key_rate(base.replace(regime=Regime.ASYMPTOTIC, distance_km=float(d))).rate for d in distances
    }

    def row(n_total: float) -> dict:
        out = {"n_total": n_total}
        for d in distances:
            point = base.replace(
                regime=Regime.COMPOSABLE,
                distance_km=float(d),
                composable=base.composable.model_copy(update={"n_total": n_total}),
            )
            out[f"d{d}km_composable:rate"] = key_rate(point).rate
            out[f"d{d}km_asymptotic:rate"] = asymptotic[d]
        return out

    return pd.DataFrame(parallel_map(row, grid, workers))


FIGURES: Dict[str, Callable[..., pd.DataFrame]] = {
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
}
NEEDS_REFERENCE = {"fig7", "fig8", "fig9"}


def figure_dataset(
    figure_id: str,
    setup: Optional[KeyRateSetup] = None,
    discrimination: Optional[DiscriminationConfig] = None,
    workers: int = 1,
    reference_distance_km: float = 100.0,
) -> pd.DataFrame:
    """Build the named figure's table; rows are ordered by the x column"""
    if figure_id not in FIGURES:
        raise UsageError(f"unknown figure {figure_id!r}, expected one of {sorted(FIGURES)}")
    setup = setup or KeyRateSetup()
    discrimination = discrimination or DiscriminationConfig(mean_photon=1.0)
    logger.info(f"Building dataset {figure_id}")
    builder = FIGURES[figure_id]
    if figure_id in NEEDS_REFERENCE:
        frame = builder(setup, discrimination, workers, reference_distance_km)
    else:
        frame = builder(setup, discrimination, workers)
    return frame.reset_index(drop=True)
