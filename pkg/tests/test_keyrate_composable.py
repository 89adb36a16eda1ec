"""Tests for the epsilon budget, AEP and entropy corrections, confidence bounds and K_comp."""

import logging
import math

import numpy as np
import pytest

from src.keyrate.asymptotic import asymptotic_key_rate
from src.keyrate.composable import (
    ComposableParams,
    aep_ent_corrections,
    composable_key_rate,
    covariance_confidence_bounds,
    epsilon_budget_valid,
    snr_information,
)
from src.keyrate.finite import FiniteSizeParams, finite_size_key_rate
from src.keyrate.models import ComposableInformation, FormulaModes, ProtocolParams, Regime
from src.physics.channel import ChannelModel, DetectorModel
from src.physics.constellation import TwoModeCovariance
from src.utils.errors import DomainError, PreconditionError

DELTA_AEP_AT_1E14 = 38157787470.2272
DELTA_ENT_AT_1E14 = -7992505670.42269
SNR_INFORMATION_50KM = 0.0213116688167575
OMEGA_AT_1E10 = (2.00092998023067, 0.200371992092267, 0.794141438982814)
ZETA_OPT_AT_ONE = 1.28214
BLOCK_LENGTHS = [1e8, 1e10, 1e12, 1e14, 1e16]


@pytest.fixture
def proto() -> ProtocolParams:
    """Proposed scheme at V_M = 0.6, mu = 0.65, j = 1."""
    return ProtocolParams.from_v_mod(0.6, 0.65, 1)


class TestEpsilonBudget:
    """Validate 2 eps_sm + eps_bar + (eps_pe + eps_cor + eps_ent) / eps <= eps."""

    def test_defaults_are_valid(self) -> None:
        """Verify the default budget and its left-hand side."""
        budget = epsilon_budget_valid(ComposableParams())
        assert budget.valid
        assert budget.lhs == pytest.approx(6e-21, rel=1e-12)

    def test_overspent_budget(self) -> None:
        """Verify that eps_pe = eps overspends the budget."""
        assert not epsilon_budget_valid(ComposableParams(eps_pe=1e-20)).valid

    def test_zero_components(self) -> None:
        """Verify that all-zero components are accepted."""
        params = ComposableParams(eps_sm=0.0, eps_bar=0.0, eps_pe=0.0, eps_cor=0.0, eps_ent=0.0)
        assert epsilon_budget_valid(params).lhs == 0.0

    def test_rate_refuses_invalid_budget(self, proto: ProtocolParams, detector: DetectorModel) -> None:
        """Verify that K_comp is not evaluated on an invalid budget."""
        with pytest.raises(PreconditionError, match="epsilon budget"):
            composable_key_rate(proto, ChannelModel.from_distance(50.0, 0.01), detector, ComposableParams(eps_sm=1e-19))


class TestCorrections:
    """Validate Delta_AEP and Delta_ent."""

    def test_reference_values(self) -> None:
        """Verify both corrections at N = 1e14 with the default parameters."""
        delta_aep, delta_ent = aep_ent_corrections(1e14, 5, 1e-20, 1e-21)
        assert delta_aep == pytest.approx(DELTA_AEP_AT_1E14, rel=1e-9)
        assert delta_ent == pytest.approx(DELTA_ENT_AT_1E14, rel=1e-9)

    def test_per_signal_aep_vanishes(self) -> None:
        """Verify that Delta_AEP / N falls toward zero."""
        per_signal = [aep_ent_corrections(n, 5, 1e-20, 1e-21)[0] / n for n in BLOCK_LENGTHS]
        assert np.all(np.diff(per_signal) < 0.0)
        assert per_signal[-1] < 1e-3

    def test_rejects_bad_block(self) -> None:
        """Verify N >= 1."""
        with pytest.raises(DomainError, match="N must be"):
            aep_ent_corrections(0.5, 5, 1e-20, 1e-21)


class TestConfidenceBounds:
    """Validate Omega_a, Omega_b and Omega_c."""

    @pytest.fixture
    def cov(self) -> TwoModeCovariance:
        """A propagated matrix with a > b."""
        return TwoModeCovariance(a=3.0, b=1.2, c=0.8)

    def test_reference_values(self, cov: TwoModeCovariance) -> None:
        """Verify the bounds at N = 1e10, eps_pe = 1e-41."""
        bounds = covariance_confidence_bounds(1e10, 1e-41, cov)
        got = (bounds.omega_a_max, bounds.omega_b_max, bounds.omega_c_min)
        np.testing.assert_allclose(got, OMEGA_AT_1E10, rtol=1e-9)

    def test_converge_to_matrix(self, cov: TwoModeCovariance) -> None:
        """Verify Omega -> (a - 1, b - 1, c) for very large N."""
        bounds = covariance_confidence_bounds(1e40, 1e-41, cov)
        assert bounds.omega_a_max == pytest.approx(cov.a - 1.0, rel=1e-9)
        assert bounds.omega_b_max == pytest.approx(cov.b - 1.0, rel=1e-9)
        assert bounds.omega_c_min == pytest.approx(cov.c, rel=1e-9)

    def test_tighten_with_n(self, cov: TwoModeCovariance) -> None:
        """Verify that Omega_c grows and Omega_a shrinks with N."""
        bounds = [covariance_confidence_bounds(n, 1e-41, cov) for n in BLOCK_LENGTHS]
        assert np.all(np.diff([b.omega_c_min for b in bounds]) > 0.0)
        assert np.all(np.diff([b.omega_a_max for b in bounds]) < 0.0)

    @pytest.mark.parametrize("n_total", [9.0, 4.0, 1.0])
    def test_rejects_short_block(self, cov: TwoModeCovariance, n_total: float) -> None:
        """Verify that N - 3 sqrt N must be positive."""
        with pytest.raises(DomainError, match="exceed 9"):
            covariance_confidence_bounds(n_total, 1e-41, cov)


class TestComposableKeyRate:
    """Validate K_comp."""

    def test_snr_information(self) -> None:
        """Verify the SNR form of I(A:B) at eta = 0.1."""
        assert snr_information(0.1, 0.6, 0.01) == pytest.approx(SNR_INFORMATION_50KM, rel=1e-12)

    def test_full_robustness_loss(self, proto: ProtocolParams, detector: DetectorModel) -> None:
        """Verify K_comp = 0 when eps_rob = 1."""
        result = composable_key_rate(
            proto, ChannelModel.from_distance(50.0, 0.01), detector, ComposableParams(eps_rob=1.0), ZETA_OPT_AT_ONE
        )
        assert result.rate == 0.0
        assert not result.feasible

    def test_grows_with_block_length(self, proto: ProtocolParams, detector: DetectorModel) -> None:
        """Verify that K_comp does not fall as N grows."""
        ch = ChannelModel.from_distance(50.0, 0.01)
        rates = [
            composable_key_rate(proto, ch, detector, ComposableParams(n_total=n), ZETA_OPT_AT_ONE).rate
            for n in BLOCK_LENGTHS
        ]
        assert np.all(np.diff(rates) >= 0.0)

    def test_regime_ordering(self, proto: ProtocolParams, detector: DetectorModel) -> None:
        """Verify composable <= finite <= asymptotic on the rate bracket."""
        for distance in (25.0, 50.0, 100.0):
            ch = ChannelModel.from_distance(distance, 0.01)
            asym = asymptotic_key_rate(proto, ch, detector, ZETA_OPT_AT_ONE)
            fini = finite_size_key_rate(proto, ch, detector, FiniteSizeParams(), ZETA_OPT_AT_ONE)
            comp = composable_key_rate(proto, ch, detector, ComposableParams(), ZETA_OPT_AT_ONE)
            assert comp.diagnostics["bracket"] <= fini.diagnostics["bracket"] <= asym.diagnostics["bracket"]
            assert comp.rate <= asym.rate

    def test_diagnostics(self, proto: ProtocolParams, detector: DetectorModel, caplog) -> None:
        """Verify the recorded corrections and leakage bookkeeping."""
        ch = ChannelModel.from_distance(50.0, 0.01)
        with caplog.at_level(logging.WARNING, logger="src.keyrate.composable"):
            result = composable_key_rate(proto, ch, detector, ComposableParams(), ZETA_OPT_AT_ONE)
        diag = result.diagnostics
        assert result.regime is Regime.COMPOSABLE
        assert diag["delta_aep"] == pytest.approx(DELTA_AEP_AT_1E14, rel=1e-9)
        assert diag["delta_ent_negative"] is True
        assert "negative" in caplog.text
        assert diag["leak_ec_per_signal"] == pytest.approx(2.0 * 0.05 * result.i_ab)
        assert diag["n_pe"] == pytest.approx(5e14)
        assert diag["eps_budget_lhs"] == pytest.approx(6e-21)
        expected_penalty = (DELTA_AEP_AT_1E14 + DELTA_ENT_AT_1E14 + 2.0 * math.log2(1.0 / 2e-21)) / 1e14
        assert diag["penalty"] == pytest.approx(expected_penalty, rel=1e-9)

    def test_information_source_switch(self, proto: ProtocolParams, detector: DetectorModel) -> None:
        """Verify that the SNR switch replaces I(A:B) and both values are recorded."""
        ch = ChannelModel.from_distance(50.0, 0.01)
        cov_result = composable_key_rate(proto, ch, detector, zeta_opt=ZETA_OPT_AT_ONE)
        snr_result = composable_key_rate(
            proto,
            ch,
            detector,
            zeta_opt=ZETA_OPT_AT_ONE,
            modes=FormulaModes(composable_information=ComposableInformation.SNR),
        )
        assert cov_result.i_ab == pytest.approx(cov_result.diagnostics["i_covariance"])
        assert snr_result.i_ab == pytest.approx(SNR_INFORMATION_50KM, rel=1e-12)
        assert snr_result.diagnostics["i_covariance"] == pytest.approx(cov_result.i_ab)
