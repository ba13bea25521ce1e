"""Config schema, text-file parsing and line-precise error reporting."""

import pytest

from sqzlab.config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    config_hash,
    default_config,
    load_config_file,
    parse_config_text,
    validate_config,
)

SAMPLE = """\
# squeezer run at 6 dB
mode = tomography
protocol.transmittance = 0.25
protocol.ancilla_squeezing_db = 5.1
imperfections.preset = ideal
input.mean_x = 1.5
input.mean_p = -0.5
sampling.seed = 99
tomography.filter_cutoff = 7.5
"""


class TestParsing:
    def test_sample_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(SAMPLE)
        config = load_config_file(str(path))
        assert config.mode == "tomography"
        assert config.protocol.transmittance == 0.25
        assert config.input.mean_x == 1.5
        assert config.sampling.seed == 99
        assert config.tomography.filter_cutoff == 7.5
        # untouched sections keep their defaults
        assert config.sampling.n_phases == 25

    def test_comments_and_blanks_skipped(self):
        tree, lines = parse_config_text("# hi\n\nprotocol.gain = -1.0\n")
        assert tree == {"protocol": {"gain": -1.0}}
        assert lines["protocol.gain"].endswith(":3")

    def test_value_types(self):
        tree, _ = parse_config_text(
            "a.i = 3\na.f = 0.5\na.s = hello-there\na.b = true\n"
            "a.n = none\na.list = 1, 2.5, 3\n")
        assert tree["a"] == {"i": 3, "f": 0.5, "s": "hello-there", "b": True,
                             "n": None, "list": [1, 2.5, 3]}

    def test_syntax_error_reports_line(self):
        with pytest.raises(ConfigError, match=r"<config>:2"):
            parse_config_text("mode = sweep\nnot a key value line\n")

    def test_validation_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("mode = sweep\nprotocol.transmittance = 1.5\n")
        with pytest.raises(ConfigError, match=r"bad.cfg:2"):
            load_config_file(str(path))

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config_file("/nonexistent/run.cfg")

    def test_overrides(self):
        tree, lines = parse_config_text(SAMPLE)
        apply_overrides(tree, ["protocol.transmittance=0.5",
                               "sampling.n_shots=77"], lines)
        config = validate_config(tree, lines)
        assert config.protocol.transmittance == 0.5
        assert config.sampling.n_shots == 77

    def test_bad_override_reported(self):
        tree, lines = parse_config_text(SAMPLE)
        with pytest.raises(ConfigError, match="key=value"):
            apply_overrides(tree, ["oops"], lines)

    def test_override_validation_points_at_flag(self):
        tree, lines = parse_config_text("mode = sweep\n")
        apply_overrides(tree, ["sweep.parameter=bogus"], lines)
        with pytest.raises(ConfigError, match="--set sweep.parameter"):
            validate_config(tree, lines)


class TestSchema:
    def test_defaults_mirror_paper_budget(self):
        imp = default_config().imperfections.to_model()
        assert imp.homodyne_efficiency == 0.9216
        assert imp.detector_efficiency == 0.99
        assert imp.propagation_efficiency == 0.96
        assert imp.electronic_noise_db == -19.0
        assert imp.displacement_coupler_T == 0.99
        assert imp.phase_jitter_rad == 0.0
        assert imp.gain_error == 0.0

    def test_presets(self):
        ideal = ExperimentConfig.model_validate(
            {"imperfections": {"preset": "ideal"}}).imperfections.to_model()
        assert ideal.homodyne_efficiency == 1.0
        assert ideal.electronic_noise_variance == 0.0
        strong = ExperimentConfig.model_validate(
            {"imperfections": {"preset": "strong"}}).imperfections.to_model()
        assert strong.phase_jitter_rad == 0.14
        assert strong.gain_error == 0.045

    def test_preset_with_override(self):
        config = ExperimentConfig.model_validate(
            {"imperfections": {"preset": "ideal", "detector_efficiency": 0.9}})
        imp = config.imperfections.to_model()
        assert imp.detector_efficiency == 0.9
        assert imp.homodyne_efficiency == 1.0

    def test_invalid_sweep_parameter(self):
        with pytest.raises(Exception):
            ExperimentConfig.model_validate({"sweep": {"parameter": "bogus"}})

    def test_seed_and_out_overrides(self):
        config = default_config(seed=7, out_dir="elsewhere")
        assert config.sampling.seed == 7
        assert config.output.directory == "elsewhere"

    def test_hash_tracks_content(self):
        a = default_config()
        b = default_config(overrides=["protocol.transmittance=0.3"])
        assert config_hash(a) == config_hash(default_config())
        assert config_hash(a) != config_hash(b)
