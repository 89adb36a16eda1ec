"""Shared fixtures for the key-rate and receiver tests."""

import pytest

from src.backend.sweep import KeyRateSetup
from src.keyrate.models import ProtocolParams, Scheme
from src.physics.channel import ChannelModel, DetectorModel
from src.physics.constellation import ConstellationParams
from src.physics.subtraction import SubtractionParams

# alpha = 1 gives xi^2 = 1/2, which keeps hand-checked values simple
UNIT_ALPHA = 1.0
REFERENCE_MU = 0.9
REFERENCE_J = 1
REFERENCE_EPSILON = 0.01


@pytest.fixture
def detector() -> DetectorModel:
    """Trusted detector with tau = 0.6, v_el = 0.05 and beta = 0.95."""
    return DetectorModel()


@pytest.fixture
def channel_50km() -> ChannelModel:
    """50 km of 0.2 dB/km fibre (eta = 0.1) with 1% excess noise."""
    return ChannelModel.from_distance(50.0, epsilon=REFERENCE_EPSILON)


@pytest.fixture
def unit_protocol() -> ProtocolParams:
    """Proposed scheme at alpha = 1, mu = 0.9, j = 1."""
    return ProtocolParams(
        constellation=ConstellationParams(alpha=UNIT_ALPHA),
        subtraction=SubtractionParams(mu=REFERENCE_MU, j=REFERENCE_J),
        scheme=Scheme.PROPOSED,
    )


@pytest.fixture
def setup() -> KeyRateSetup:
    """Default evaluation point with a coarse mu grid to keep tests quick."""
    return KeyRateSetup(mu_grid_points=9)
