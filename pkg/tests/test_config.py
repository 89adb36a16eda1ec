"""Tests for the `key = value` configuration format."""

import math

import pytest

from src.backend.sweep import SweepVariable
from src.frontend.config import (
    WORKERS_ENV,
    RunConfig,
    load_config,
    parse_config,
    render_config,
    with_overrides,
)
from src.keyrate.models import HolevoMode, MutualInformationMode, NoiseModel, Regime, Scheme
from src.physics.discrimination import optimal_improvement_ratio
from src.physics.subtraction import CorrelationModel
from src.utils.errors import ConfigValidationError

SAMPLE_CONFIG = """
# fig8-style run
v_mod = 0.8
distance_km = 120   # km
regime = finite
n_total = 1e12
scheme = four-state-ps
optimize_mu = false
mode = paper-literal
holevo = generalized
"""


class TestParseConfig:
    """Validate parsing and key checks."""

    def test_empty_file_gives_defaults(self) -> None:
        """Verify that every key has a default."""
        cfg = parse_config("")
        assert cfg == RunConfig()
        assert cfg.v_mod == pytest.approx(0.6)
        assert cfg.alpha == pytest.approx(math.sqrt(0.3))
        assert cfg.regime is Regime.ASYMPTOTIC

    def test_sample(self) -> None:
        """Verify typed values, comments and inline comments."""
        cfg = parse_config(SAMPLE_CONFIG)
        assert cfg.v_mod == 0.8
        assert cfg.alpha == pytest.approx(math.sqrt(0.4))
        assert cfg.distance_km == 120.0
        assert cfg.regime is Regime.FINITE
        assert cfg.n_total == 1e12
        assert cfg.scheme is Scheme.FOUR_STATE_PS
        assert cfg.optimize_mu is False

    def test_unknown_key(self) -> None:
        """Verify that unknown keys are named in the error."""
        with pytest.raises(ConfigValidationError, match="distnace_km: unknown key") as error:
            parse_config("distnace_km = 10")
        assert error.value.key == "distnace_km"

    def test_duplicate_key(self) -> None:
        """Verify that a key may appear only once."""
        with pytest.raises(ConfigValidationError, match="more than once"):
            parse_config("mu = 0.5\nmu = 0.6")

    def test_malformed_line(self) -> None:
        """Verify that lines without '=' report their number."""
        with pytest.raises(ConfigValidationError, match="line 2"):
            parse_config("mu = 0.5\nnot a pair")

    @pytest.mark.parametrize(
        ("text", "key"),
        [
            ("mu = 1.5", "mu"),
            ("epsilon = -0.1", "epsilon"),
            ("regime = eventual", "regime"),
            ("trials = many", "trials"),
            ("zeta_opt = -2", "zeta_opt"),
        ],
    )
    def test_invalid_value_names_key(self, text: str, key: str) -> None:
        """Verify that validation failures name the offending key."""
        with pytest.raises(ConfigValidationError) as error:
            parse_config(text)
        assert error.value.key == key

    def test_inconsistent_amplitude(self) -> None:
        """Verify that alpha and v_mod must agree when both are given."""
        with pytest.raises(ConfigValidationError, match="v_mod"):
            parse_config("alpha = 1.0\nv_mod = 0.5")
        assert parse_config("alpha = 1.0\nv_mod = 2.0").v_mod == 2.0

    def test_alpha_derives_v_mod(self) -> None:
        """Verify V_M = 2 alpha^2 when only alpha is given."""
        assert parse_config("alpha = 0.5").v_mod == pytest.approx(0.5)

    def test_missing_file(self, tmp_path) -> None:
        """Verify that an unreadable file is a configuration error."""
        with pytest.raises(ConfigValidationError, match="cannot read"):
            load_config(str(tmp_path / "missing.cfg"))


class TestFormulaModes:
    """Validate preset resolution and per-switch overrides."""

    def test_corrected_preset(self) -> None:
        """Verify the corrected defaults."""
        modes = parse_config("").formula_modes()
        assert modes.mutual_information is MutualInformationMode.CORRECTED
        assert modes.subtraction_correlation is CorrelationModel.FOUR_STATE
        assert modes.noise_model is NoiseModel.MATCHED

    def test_switch_overrides_preset(self) -> None:
        """Verify that an explicit switch wins over the preset."""
        modes = parse_config(SAMPLE_CONFIG).formula_modes()
        assert modes.mutual_information is MutualInformationMode.PAPER_LITERAL
        assert modes.holevo is HolevoMode.GENERALIZED
        assert modes.noise_model is NoiseModel.PAPER_LITERAL


class TestDerivedRecords:
    """Validate the records built from a configuration."""

    def test_auto_zeta(self) -> None:
        """Verify that zeta_opt = auto uses the Helstrom ratio at mean_photon."""
        cfg = parse_config("mean_photon = 2.0")
        assert cfg.resolved_zeta() == pytest.approx(optimal_improvement_ratio(2.0))
        assert parse_config("zeta_opt = 1.1").resolved_zeta() == 1.1

    def test_setup(self) -> None:
        """Verify the key-rate setup carries the configured values."""
        setup = parse_config(SAMPLE_CONFIG).to_setup()
        assert setup.v_mod == 0.8
        assert setup.finite.n_total == 1e12
        assert setup.composable.n_total == 1e12
        assert setup.scheme is Scheme.FOUR_STATE_PS
        assert setup.detector.beta == 0.95

    def test_finite_split_error_names_key(self) -> None:
        """Verify that an empty key or estimation part is reported against n_total."""
        with pytest.raises(ConfigValidationError) as error:
            parse_config("n_total = 1").to_setup()
        assert error.value.key == "n_total"

    def test_sweep(self) -> None:
        """Verify the sweep record."""
        spec = parse_config("sweep_variable = v_mod\nsweep_min = 0.1\nsweep_max = 1.0\nsweep_points = 4").to_sweep()
        assert spec.variable is SweepVariable.V_MOD
        assert spec.grid().tolist() == pytest.approx([0.1, 0.4, 0.7, 1.0])

    def test_bad_sweep_range_names_key(self) -> None:
        """Verify that an inverted range is reported against sweep_min."""
        with pytest.raises(ConfigValidationError) as error:
            parse_config("sweep_min = 5\nsweep_max = 1").to_sweep()
        assert error.value.key == "sweep_min"

    def test_workers_from_environment(self, monkeypatch) -> None:
        """Verify the worker count falls back to the environment."""
        monkeypatch.setenv(WORKERS_ENV, "3")
        assert parse_config("").resolved_workers() == 3
        assert parse_config("workers = 2").resolved_workers() == 2
        monkeypatch.setenv(WORKERS_ENV, "lots")
        with pytest.raises(ConfigValidationError, match=WORKERS_ENV):
            parse_config("").resolved_workers()

    def test_workers_default(self, monkeypatch) -> None:
        """Verify one worker without configuration."""
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        assert parse_config("").resolved_workers() == 1


class TestOverridesAndRendering:
    """Validate command-line overrides and the text round trip."""

    def test_overrides(self) -> None:
        """Verify that overrides replace values and None leaves them alone."""
        cfg = with_overrides(parse_config(""), seed=7, regime="composable", workers=None)
        assert cfg.seed == 7
        assert cfg.regime is Regime.COMPOSABLE
        assert cfg.workers is None

    def test_override_v_mod_rederives_alpha(self) -> None:
        """Verify that overriding one amplitude re-derives the other."""
        cfg = with_overrides(parse_config("alpha = 1.0"), v_mod=0.5)
        assert cfg.alpha == pytest.approx(0.5)

    def test_override_rejects_unknown_key(self) -> None:
        """Verify that overrides are checked against the known keys."""
        with pytest.raises(ConfigValidationError, match="unknown key"):
            with_overrides(parse_config(""), colour="blue")

    def test_render_round_trip(self) -> None:
        """Verify that rendering and parsing gives back the same record."""
        cfg = parse_config(SAMPLE_CONFIG + "\nworkers = 2\nzeta_opt = 1.25\nseed = 18446744073709551615")
        assert parse_config(render_config(cfg)) == cfg

    def test_render_omits_unset_switches(self) -> None:
        """Verify that switches following the preset are not written."""
        text = render_config(parse_config(""))
        assert "holevo =" not in text
        assert "zeta_opt = auto" in text
        assert "optimize_mu = true" in text
