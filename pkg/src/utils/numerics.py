"""Special functions and seeded random streams used across the package."""

import logging
import math
from typing import Optional, Union

import numpy as np
from scipy import special, stats

from src.utils.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def erfc(x: ArrayLike) -> ArrayLike:
    """Standard complementary error function (2/sqrt(pi)) * int_x^inf exp(-t^2) dt"""
    return special.erfc(x)


def erf(x: ArrayLike) -> ArrayLike:
    """Standard error function"""
    return special.erf(x)


def normal_tail(z: ArrayLike) -> ArrayLike:
    """Upper tail of the standard normal, (1 - erf(z / sqrt 2)) / 2"""
    return 0.5 * special.erfc(np.asarray(z) / math.sqrt(2.0))


def inverse_normal_tail(p: float) -> float:
    """Return z with (1 - erf(z / sqrt 2)) / 2 = p, for p in (0, 0.5].

    This is the conventional reading of the quantile used for parameter
    estimation bounds; ``z(eps_pe / 2)`` is the confidence multiplier.
    """
    if not math.isfinite(p) or p <= 0.0 or p > 0.5:
        raise DomainError(f"tail probability must lie in (0, 0.5], got {p!r}")
    return float(stats.norm.isf(p))


class RngStream:
    """Deterministic random stream identified by (seed, stream_id).

    Backed by a Philox counter-based generator keyed through a SeedSequence,
    so distinct stream ids give independent sequences and the sequence does
    not depend on which thread consumes it.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or seed >= 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if stream_id < 0 or stream_id >= 2**64:
            raise DomainError(f"stream_id must be a 64-bit unsigned integer, got {stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def poisson_sample(rate: ArrayLike, stream: RngStream, size: Optional[int] = None):
    """Draw Poisson counts at the given rate(s) from a stream.

    numpy's sampler uses multiplication-based inversion below rate 10 and
    PTRS rejection above it.
    """
    rates = np.asarray(rate, dtype=float)
    if np.any(rates < 0) or not np.all(np.isfinite(rates)):
        raise DomainError("Poisson rate must be finite and non-negative")
    counts = stream.generator.poisson(rates, size=size)
    if np.ndim(counts) == 0:
        return int(counts)
    return counts
