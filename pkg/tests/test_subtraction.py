"""Tests for the photon-subtraction probability and covariance."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.physics.constellation import ConstellationParams, epr_covariance
from src.physics.subtraction import (
    CorrelationModel,
    SubtractionParams,
    squeezing_parameter,
    subtracted_covariance,
    subtraction_success_probability,
    subtraction_success_probability_series,
)
from src.utils.errors import DomainError

# alpha = 1, mu = 0.9, j = 1
P_SUCCESS_REFERENCE = 0.0826446280991735
X_PRIME_REFERENCE = 6.27272727272727
Y_PRIME_REFERENCE = 4.27272727272727
Z_PRIME_PRINTED = 2.43934688454523
Z_PRIME_FOUR_STATE = 4.34618571242828

mus = st.floats(min_value=0.01, max_value=0.99)
photon_counts = st.integers(min_value=0, max_value=5)
alphas = st.floats(min_value=0.05, max_value=1.0)


class TestSuccessProbability:
    """Validate the heralding probability P_(j)."""

    def test_reference_value(self) -> None:
        """Verify P_(1) at alpha = 1, mu = 0.9."""
        sub = SubtractionParams(mu=0.9, j=1)
        assert subtraction_success_probability(1.0, sub) == pytest.approx(P_SUCCESS_REFERENCE, rel=1e-12)

    def test_no_subtraction_always_succeeds(self) -> None:
        """Verify P_(0) = 1 when the tap transmits everything."""
        assert subtraction_success_probability(0.8, SubtractionParams(mu=1.0, j=0)) == pytest.approx(1.0)

    @settings(max_examples=50)
    @given(alphas, mus, photon_counts)
    def test_closed_form_matches_series(self, alpha: float, mu: float, j: int) -> None:
        """Verify the closed form against the binomial sum."""
        sub = SubtractionParams(mu=mu, j=j)
        closed = subtraction_success_probability(alpha, sub)
        series = subtraction_success_probability_series(alpha, sub)
        assert closed == pytest.approx(series, rel=1e-12, abs=1e-15)

    @given(alphas, mus, photon_counts)
    def test_is_a_probability(self, alpha: float, mu: float, j: int) -> None:
        """Verify 0 <= P_(j) <= 1."""
        p = subtraction_success_probability(alpha, SubtractionParams(mu=mu, j=j))
        assert 0.0 <= p <= 1.0

    @given(alphas, mus)
    def test_probabilities_over_j_sum_to_one(self, alpha: float, mu: float) -> None:
        """Verify that the heralding outcomes over all j are exhaustive."""
        total = sum(subtraction_success_probability(alpha, SubtractionParams(mu=mu, j=j)) for j in range(400))
        assert total == pytest.approx(1.0, abs=1e-9)


class TestSubtractedCovariance:
    """Validate the covariance (X', Y', Z') of the subtracted state."""

    @pytest.fixture
    def sub(self) -> SubtractionParams:
        """mu = 0.9 and one subtracted photon."""
        return SubtractionParams(mu=0.9, j=1)

    def test_diagonal_entries(self, sub: SubtractionParams) -> None:
        """Verify X' and Y' at alpha = 1."""
        cov = subtracted_covariance(1.0, sub)
        assert cov.a == pytest.approx(X_PRIME_REFERENCE, rel=1e-12)
        assert cov.b == pytest.approx(Y_PRIME_REFERENCE, rel=1e-12)

    def test_printed_correlation(self, sub: SubtractionParams) -> None:
        """Verify the printed off-diagonal entry."""
        cov = subtracted_covariance(1.0, sub, CorrelationModel.PAPER_LITERAL)
        assert cov.c == pytest.approx(Z_PRIME_PRINTED, rel=1e-12)

    def test_gaussian_correlation_doubles_printed(self, sub: SubtractionParams) -> None:
        """Verify that the exact Gaussian entry is twice the printed one."""
        cov = subtracted_covariance(1.0, sub, CorrelationModel.GAUSSIAN)
        assert cov.c == pytest.approx(2.0 * Z_PRIME_PRINTED, rel=1e-12)

    def test_four_state_correlation(self, sub: SubtractionParams) -> None:
        """Verify the four-state scaled entry."""
        cov = subtracted_covariance(1.0, sub, CorrelationModel.FOUR_STATE)
        assert cov.c == pytest.approx(Z_PRIME_FOUR_STATE, rel=1e-12)

    @given(alphas)
    def test_four_state_reduces_to_source(self, alpha: float) -> None:
        """Verify that mu = 1, j = 0 gives back the four-state EPR matrix."""
        cov = subtracted_covariance(alpha, SubtractionParams(mu=1.0, j=0), CorrelationModel.FOUR_STATE)
        source = epr_covariance(ConstellationParams(alpha=alpha))
        assert cov.a == pytest.approx(source.a, rel=1e-12)
        assert cov.b == pytest.approx(source.b, rel=1e-12)
        assert cov.c == pytest.approx(source.c, rel=1e-12)

    @given(alphas, mus, photon_counts)
    def test_diagonal_gap(self, alpha: float, mu: float, j: int) -> None:
        """Verify Y' - X' = -2j."""
        cov = subtracted_covariance(alpha, SubtractionParams(mu=mu, j=j))
        assert cov.b - cov.a == pytest.approx(-2.0 * j, abs=1e-9)

    @given(alphas, mus, photon_counts)
    def test_gaussian_model_is_physical(self, alpha: float, mu: float, j: int) -> None:
        """Verify that the exact photon-subtracted squeezed vacuum is a valid state."""
        cov = subtracted_covariance(alpha, SubtractionParams(mu=mu, j=j), CorrelationModel.GAUSSIAN)
        assert cov.is_physical(tol=1e-7)

    def test_vacuum_has_no_correlation(self) -> None:
        """Verify Z' = 0 at alpha = 0 under every model."""
        for model in CorrelationModel:
            assert subtracted_covariance(0.0, SubtractionParams(mu=0.5, j=1), model).c == 0.0


class TestParameters:
    """Validate the subtraction parameter records."""

    def test_squeezing_parameter(self) -> None:
        """Verify xi^2 = 1/2 at alpha = 1."""
        assert squeezing_parameter(1.0) ** 2 == pytest.approx(0.5)

    def test_rejects_negative_alpha(self) -> None:
        """Verify that a negative amplitude is refused."""
        with pytest.raises(DomainError, match="alpha"):
            squeezing_parameter(-1.0)

    @pytest.mark.parametrize("mu", [0.0, -0.1, 1.1])
    def test_rejects_bad_mu(self, mu: float) -> None:
        """Verify mu in (0, 1]."""
        with pytest.raises(ValueError):
            SubtractionParams(mu=mu, j=1)

    def test_rejects_negative_j(self) -> None:
        """Verify j >= 0."""
        with pytest.raises(ValueError):
            SubtractionParams(mu=0.5, j=-1)
