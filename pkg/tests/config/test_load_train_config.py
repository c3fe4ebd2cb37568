from pathlib import Path

from expects import be_none, contain, equal, expect, raise_error

from uwdehaze.config import TrainConfig, load_train_config, write_config_file
from uwdehaze.errors import ConfigError


def test_load_train_config_with_no_file_and_no_overrides() -> None:
    config = load_train_config()

    expect((config.patch, config.batch, config.learning_rate, config.epochs)).to(
        equal((128, 4, 0.0005, 80))
    )
    expect((config.beta1, config.beta2)).to(equal((0.9, 0.99)))
    expect(config.max_steps).to(be_none)


def test_load_train_config_with_flags_over_the_file_over_defaults(tmp_path: Path) -> None:
    path = tmp_path / "config.yaml"
    path.write_text("patch: 64\nepochs: 5\narchitecture:\n  base_width: 16\n")
    config = load_train_config(
        path, {"patch": 32, "batch": None, "architecture": {"residual_blocks": 1}}
    )

    expect(config.patch).to(equal(32))
    expect(config.epochs).to(equal(5))
    expect(config.batch).to(equal(4))
    expect(config.architecture.base_width).to(equal(16))
    expect(config.architecture.residual_blocks).to(equal(1))


def test_load_train_config_with_an_unknown_key(tmp_path: Path) -> None:
    path = tmp_path / "config.yaml"
    path.write_text("patch: 64\nwarmup: 3\n")

    expect(lambda: load_train_config(path)).to(raise_error(ConfigError, contain("warmup")))


def test_load_train_config_with_an_unknown_architecture_key(tmp_path: Path) -> None:
    path = tmp_path / "config.yaml"
    path.write_text("architecture:\n  depth: 3\n")

    expect(lambda: load_train_config(path)).to(raise_error(ConfigError, contain("depth")))


def test_load_train_config_with_malformed_yaml(tmp_path: Path) -> None:
    path = tmp_path / "config.yaml"
    path.write_text("patch: [64\n")

    expect(lambda: load_train_config(path)).to(raise_error(ConfigError))


def test_load_train_config_with_a_missing_file(tmp_path: Path) -> None:
    expect(lambda: load_train_config(tmp_path / "absent.yaml")).to(
        raise_error(ConfigError, contain("absent.yaml"))
    )


def test_load_train_config_with_zero_epochs() -> None:
    expect(lambda: load_train_config(overrides={"epochs": 0})).to(
        raise_error(ConfigError, contain("epochs"))
    )


def test_load_train_config_with_a_zero_learning_rate() -> None:
    expect(load_train_config(overrides={"learning_rate": 0.0}).learning_rate).to(equal(0.0))


def test_load_train_config_with_a_patch_not_divisible_by_four() -> None:
    expect(lambda: load_train_config(overrides={"patch": 30})).to(
        raise_error(ConfigError, contain("patch"))
    )


def test_load_train_config_with_a_patch_below_the_minimum() -> None:
    expect(lambda: load_train_config(overrides={"patch": 4})).to(raise_error(ConfigError))


def test_load_train_config_with_a_beta_of_one() -> None:
    expect(lambda: load_train_config(overrides={"beta2": 1.0})).to(
        raise_error(ConfigError, contain("beta2"))
    )


def test_load_train_config_with_a_file_written_by_write_config_file(tmp_path: Path) -> None:
    config = TrainConfig(patch=32, max_steps=10, seed=3)
    path = write_config_file(config, tmp_path / "nested" / "config.yaml")

    expect(load_train_config(path)).to(equal(config))


def test_load_train_config_with_haze_reinjection_off(tmp_path: Path) -> None:
    path = tmp_path / "config.yaml"
    path.write_text("haze_reinjection: false\n")

    expect(load_train_config().haze_reinjection).to(equal(True))
    expect(load_train_config(path).haze_reinjection).to(equal(False))


def test_load_train_config_with_a_non_boolean_switch() -> None:
    expect(lambda: load_train_config(overrides={"haze_reinjection": "no"})).to(
        raise_error(ConfigError, contain('"haze_reinjection"'))
    )
