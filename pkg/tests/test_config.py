"""Experiment configuration parsing, validation, and arm wiring."""

import pytest

from passband.config import (
    Arm,
    ExperimentConfig,
    arm_controller_params,
    config_to_flat_dict,
    load_config,
    parse_config,
)
from passband.errors import ConfigError, DomainError


class TestDefaults:
    def test_empty_text_gives_defaults(self):
        config = parse_config("")
        assert config == ExperimentConfig()
        assert config.arm is Arm.PS_ADA
        assert config.group_size == 8
        assert config.batch_size == 64
        assert config.steps == 300
        assert config.seed == 0
        assert config.fixed_ratio == 0.5
        assert config.same_step_rerollout is True
        assert config.controller.alpha == 0.05
        assert config.loss.group_reduction == "sum"
        assert config.population.preset == "hard_skewed"
        assert config.optimizer.clip_high == 0.28

    def test_comments_and_blank_lines_ignored(self):
        text = """
        # full-line comment

        steps = 10  # trailing comment
        """
        assert parse_config(text).steps == 10


class TestParsing:
    def test_scalar_keys(self):
        config = parse_config(
            "arm = baseline\nsteps = 7\nseed = 3\nfixed_ratio = 0.25\n"
            "same_step_rerollout = false\n"
        )
        assert config.arm is Arm.BASELINE
        assert config.steps == 7
        assert config.seed == 3
        assert config.fixed_ratio == 0.25
        assert config.same_step_rerollout is False

    def test_dotted_keys(self):
        config = parse_config(
            "controller.alpha = 0.1\ncontroller.cooldown = 3\n"
            "loss.length_normalized = true\npopulation.preset = uniform\n"
            "population.size = 20\noptimizer.learning_rate = 0.001\n"
        )
        assert config.controller.alpha == 0.1
        assert config.controller.cooldown == 3
        assert config.loss.length_normalized is True
        assert config.population.preset == "uniform"
        assert config.population.size == 20
        assert config.optimizer.learning_rate == 0.001

    def test_roundtrip_through_flat_dict(self):
        original = parse_config(
            "arm = ps-fix\nsteps = 11\ncontroller.deadzone = 0.02\n"
            "population.p0 = 0.3\n"
        )
        flat = config_to_flat_dict(original)
        text = "\n".join(f"{k} = {v}" for k, v in flat.items())
        assert parse_config(text) == original

    def test_all_arms_parse(self):
        for arm in Arm:
            assert parse_config(f"arm = {arm.value}").arm is arm


class TestErrors:
    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="controller.alhpa"):
            parse_config("controller.alhpa = 0.1")

    def test_duplicate_key_named(self):
        with pytest.raises(ConfigError, match="steps"):
            parse_config("steps = 5\nsteps = 6")

    def test_bad_value_named(self):
        with pytest.raises(ConfigError, match="steps"):
            parse_config("steps = soon")
        with pytest.raises(ConfigError, match="arm"):
            parse_config("arm = warmup")
        with pytest.raises(ConfigError, match="same_step_rerollout"):
            parse_config("same_step_rerollout = maybe")

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_config("steps 5")

    def test_domain_violation_becomes_config_error(self):
        with pytest.raises(ConfigError, match="alpha"):
            parse_config("controller.alpha = 0.0")
        with pytest.raises(ConfigError, match="batch_size"):
            parse_config("batch_size = 0")

    def test_direct_construction_domain_errors(self):
        with pytest.raises(DomainError):
            ExperimentConfig(group_size=7)
        with pytest.raises(DomainError):
            ExperimentConfig(steps=-1)
        with pytest.raises(DomainError):
            ExperimentConfig(fixed_ratio=1.5)


class TestLoadConfig:
    def test_reads_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("steps = 4\narm = baseline\n")
        config = load_config(path)
        assert config.steps == 4
        assert config.arm is Arm.BASELINE

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")


class TestArmControllerParams:
    def test_ps_ada_uses_configured_params(self):
        config = parse_config("arm = ps-ada\ncontroller.step_size = 0.07")
        params = arm_controller_params(config)
        assert params.step_size == 0.07
        assert params.initial_ratio == config.controller.initial_ratio

    def test_ps_fix_freezes_ratio_at_fixed_value(self):
        config = parse_config("arm = ps-fix\nfixed_ratio = 0.3")
        params = arm_controller_params(config)
        assert params.step_size == 0.0
        assert params.initial_ratio == 0.3
        # Everything else passes through unchanged.
        assert params.alpha == config.controller.alpha
        assert params.cooldown == config.controller.cooldown

    def test_hard_only_same_params_as_ada(self):
        ada = parse_config("arm = ps-ada")
        hard = parse_config("arm = ps-ada-hard-only")
        assert arm_controller_params(ada) == arm_controller_params(hard)
