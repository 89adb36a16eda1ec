"""Discrimination of the four QPSK coherent states.

Error-probability bounds (standard quantum limit and the square-root
measurement approximation of the Helstrom bound), the Bayesian update used
by the adaptive receiver, and a Monte Carlo simulation of that receiver.

The receiver splits the pulse into M equal temporal slices. In every stage
it displaces by the currently most probable state, counts photons with a
number-resolving detector and updates the posterior with the Poisson
likelihood of the count. The final decision is the maximum-posterior state.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from src.physics.constellation import ConstellationParams, lambda_coefficients, qpsk_states
from src.utils.errors import NumericalConsistencyError
from src.utils.numerics import RngStream, erfc, poisson_sample

logger = logging.getLogger(__name__)

GRAM_TOLERANCE = 1e-9


class DiscriminationConfig(BaseModel):
    """Monte Carlo settings of the adaptive receiver"""

    model_config = ConfigDict(frozen=True)

    mean_photon: float = Field(ge=0.0, allow_inf_nan=False)
    stages: int = Field(default=10, ge=1)
    trials: int = Field(default=100_000, ge=1)
    seed: int = Field(default=42, ge=0, lt=2**64)
    detector_efficiency: float = Field(default=1.0, gt=0.0, le=1.0)
    # trials are drawn in fixed-size blocks, one random substream per block
    batch_size: int = Field(default=4096, ge=1)
    workers: int = Field(default=1, ge=1)


class DiscriminationResult(BaseModel):
    mean_photon: float
    stages: int
    trials: int
    p_sql: float
    p_hel: float
    p_rec: float
    p_rec_stderr: float
    zeta: float
    zeta_opt: float


class TrialTrace(BaseModel):
    """Stage-by-stage history of one simulated trial"""

    true_state: int
    candidates: List[int]
    counts: List[int]
    labels: List[int]
    posteriors: List[List[float]]
    decision: int


def sql_error(mean_photon: float) -> float:
    """P_SQL = 1 - [1 - erfc(sqrt(<n>/2)) / 2]^2"""
    return float(1.0 - (1.0 - 0.5 * erfc(math.sqrt(mean_photon / 2.0))) ** 2)


def gram_eigenvalues(mean_photon: float) -> np.ndarray:
    """Eigenvalues omega_1..omega_4 of the QPSK Gram matrix"""
    n = np.arange(1, 5)
    k = np.arange(1, 5)[:, None]
    phase = 2j * np.pi * n / 4
    # e^{-a^2} is folded into the exponent so large mean photon numbers do not overflow
    exponent = (1 - k) * phase + mean_photon * (np.exp(phase) - 1.0)
    omega = np.exp(exponent).sum(axis=1)
    if np.any(np.abs(omega.imag) > GRAM_TOLERANCE):
        raise NumericalConsistencyError(f"Gram eigenvalues have imaginary residue {omega.imag}")
    if np.any(omega.real < -GRAM_TOLERANCE):
        raise NumericalConsistencyError(f"negative Gram eigenvalue {omega.real}")
    return np.clip(omega.real, 0.0, None)


def helstrom_srm_error(mean_photon: float) -> float:
    """Square-root-measurement error 1 - (sum_k sqrt(omega_k))^2 / 16.

    Evaluated through the exact identity omega_k = 4 lambda_{k-1}(<n>).
    """
    omega = 4.0 * lambda_coefficients(ConstellationParams(alpha=math.sqrt(mean_photon)))
    return float(1.0 - np.sqrt(omega).sum() ** 2 / 16.0)


def improvement_ratio(p_err: float, mean_photon: float) -> float:
    """zeta = (1 - P_err) / (1 - P_SQL)"""
    return (1.0 - p_err) / (1.0 - sql_error(mean_photon))


def optimal_improvement_ratio(mean_photon: float) -> float:
    """zeta_opt with the Helstrom bound in place of the receiver error"""
    return improvement_ratio(helstrom_srm_error(mean_photon), mean_photon)


def bayesian_update(prior, candidate_index, observed_count, stage_energy: float) -> np.ndarray:
    """Posterior over the four states after one displaced photon count.

    The likelihood of hypothesis k is Poisson(count; |u_k - u_cand|^2 E) with
    u the unit constellation and E the stage energy (photons per slice after
    detection efficiency). Leading axes broadcast, so a whole batch of trials
    can be updated at once.
    """
    prior = np.asarray(prior, dtype=float)
    candidate_index = np.asarray(candidate_index)
    observed_count = np.asarray(observed_count)
    states = qpsk_states()
    rates = np.abs(states - states[candidate_index][..., None]) ** 2 * stage_energy
    likelihood = stats.poisson.pmf(observed_count[..., None], rates)
    unnormalised = likelihood * prior
    norm = unnormalised.sum(axis=-1, keepdims=True)
    if np.any(norm <= 0.0):
        raise NumericalConsistencyError("all likelihoods vanish for an observed count")
    return unnormalised / norm


def _stage_energy(cfg: DiscriminationConfig) -> float:
    return cfg.mean_photon / cfg.stages * cfg.detector_efficiency


def _run_block(cfg: DiscriminationConfig, block_index: int, size: int) -> int:
    """Simulate one block of trials on its own substream and count the errors"""
    stream = RngStream(cfg.seed, block_index)
    states = qpsk_states()
    energy = _stage_energy(cfg)
    truth = stream.generator.integers(0, 4, size=size)
    posterior = np.full((size, 4), 0.25)
    for _ in range(cfg.stages):
        # argmax breaks ties toward the lowest state index
        candidate = np.argmax(posterior, axis=1)
        rate = np.abs(states[truth] - states[candidate]) ** 2 * energy
        counts = poisson_sample(rate, stream)
        posterior = bayesian_update(posterior, candidate, counts, energy)
    decision = np.argmax(posterior, axis=1)
    return int(np.count_nonzero(decision != truth))


def _blocks(cfg: DiscriminationConfig):
    full, rest = divmod(cfg.trials, cfg.batch_size)
    sizes = [cfg.batch_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def simulate_adaptive_receiver(cfg: DiscriminationConfig) -> DiscriminationResult:
    """Monte Carlo error probability of the M-stage adaptive receiver.

    Results depend only on (seed, trials, stages, batch_size): each block of
    trials owns the substream (seed, block_index) and error counts are summed
    in block order whatever the number of workers.
    """
    blocks = _blocks(cfg)
    logger.debug(f"Simulating {cfg.trials} trials in {len(blocks)} blocks with {cfg.workers} workers")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=min(cfg.workers, os.cpu_count() or 1)) as executor:
            errors = list(executor.map(lambda blk: _run_block(cfg, blk[0], blk[1]), blocks))
    else:
        errors = [_run_block(cfg, index, size) for index, size in blocks]

    p_rec = sum(errors) / cfg.trials
    p_sql = sql_error(cfg.mean_photon)
    p_hel = helstrom_srm_error(cfg.mean_photon)
    return DiscriminationResult(
        mean_photon=cfg.mean_photon,
        stages=cfg.stages,
        trials=cfg.trials,
        p_sql=p_sql,
        p_hel=p_hel,
        p_rec=p_rec,
        p_rec_stderr=math.sqrt(p_rec * (1.0 - p_rec) / cfg.trials),
        zeta=(1.0 - p_rec) / (1.0 - p_sql),
        zeta_opt=(1.0 - p_hel) / (1.0 - p_sql),
    )


def trace_adaptive_receiver(cfg: DiscriminationConfig, trial_index: int) -> TrialTrace:
    """Replay one trial of the simulation and return its full history.

    The block containing the trial is re-simulated on the same substream, so
    the recorded decision matches the one counted by the simulator.
    """
    if trial_index < 0 or trial_index >= cfg.trials:
        raise IndexError(f"trial {trial_index} outside 0..{cfg.trials - 1}")
    block_index, offset = divmod(trial_index, cfg.batch_size)
    size = dict(_blocks(cfg))[block_index]

    stream = RngStream(cfg.seed, block_index)
    states = qpsk_states()
    energy = _stage_energy(cfg)
    truth = stream.generator.integers(0, 4, size=size)
    posterior = np.full((size, 4), 0.25)
    candidates, counts_seen, posteriors = [], [], []
    for _ in range(cfg.stages):
        candidate = np.argmax(posterior, axis=1)
        rate = np.abs(states[truth] - states[candidate]) ** 2 * energy
        counts = poisson_sample(rate, stream)
        posterior = bayesian_update(posterior, candidate, counts, energy)
        candidates.append(int(candidate[offset]))
        counts_seen.append(int(counts[offset]))
        posteriors.append(posterior[offset].tolist())

    return TrialTrace(
        true_state=int(truth[offset]),
        candidates=candidates,
        counts=counts_seen,
        labels=[int(count > 0) for count in counts_seen],
        posteriors=posteriors,
        decision=int(np.argmax(posterior[offset])),
    )
