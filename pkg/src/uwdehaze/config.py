from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Self

import yaml

from uwdehaze.errors import ConfigError
from uwdehaze.hdn import HdnLossWeights
from uwdehaze.networks import ArchitectureConfig
from uwdehaze.restoration import RestorationLossWeights

NESTED_SECTIONS: dict[str, type] = {
    "architecture": ArchitectureConfig,
    "hdn_weights": HdnLossWeights,
    "restoration_weights": RestorationLossWeights,
}

MIN_PATCH = 8


@dataclass(frozen=True)
class TrainConfig:
    """
    Every knob of a training run. Defaults give the reference schedule: 128×128 patches,
    batches of 4, Adam with learning rate 0.0005 and betas (0.9, 0.99), 80 epochs.
    """

    patch: int = 128
    batch: int = 4
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.99
    epochs: int = 80
    seed: int = 0
    log_every: int = 50
    checkpoint_every: int = 1000
    max_steps: int | None = None
    device: str = "cpu"
    progress: bool = True
    haze_reinjection: bool = True
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    hdn_weights: HdnLossWeights = field(default_factory=HdnLossWeights)
    restoration_weights: RestorationLossWeights = field(default_factory=RestorationLossWeights)

    def __post_init__(self) -> None:
        factor = self.architecture.downsampling_factor

        if self.patch < MIN_PATCH or self.patch % factor != 0:
            raise ConfigError(
                f'The provided "patch" must be a multiple of {factor} and at least {MIN_PATCH}, got {self.patch}.'
            )

        if self.batch < 1:
            raise ConfigError(f'The provided "batch" must be positive, got {self.batch}.')

        if self.learning_rate < 0.0:
            raise ConfigError(
                f'The provided "learning_rate" must not be negative, got {self.learning_rate}.'
            )

        for name in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f'The provided "{name}" must lie in [0, 1).')

        if self.epochs < 1:
            raise ConfigError(f'The provided "epochs" must be at least 1, got {self.epochs}.')

        for name in ("log_every", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f'The provided "{name}" must be positive.')

        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError(
                f'The provided "max_steps" must be positive when set, got {self.max_steps}.'
            )

        for name in ("progress", "haze_reinjection"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f'The provided "{name}" must be true or false.')

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Self:
        """
        Build a config from a (possibly partial) mapping; missing fields keep their defaults.

        :raises ConfigError: On unknown keys or invalid values.
        """
        known = {item.name for item in fields(cls)}

        if unknown := sorted(set(data) - known):
            raise ConfigError(f"Unknown config key(s): {', '.join(unknown)}.")

        values: dict[str, Any] = {}

        for name, value in data.items():
            if name in NESTED_SECTIONS:
                values[name] = _build_section(name, value)
            else:
                values[name] = value

        try:
            return cls(**values)
        except TypeError as error:
            raise ConfigError(f"Invalid config: {error}") from error


def _build_section(name: str, value: Any) -> Any:
    section = NESTED_SECTIONS[name]

    if isinstance(value, section):
        return value

    if not isinstance(value, Mapping):
        raise ConfigError(f'The config section "{name}" must be a mapping.')

    known = {item.name for item in fields(section)}

    if unknown := sorted(set(value) - known):
        raise ConfigError(f"Unknown key(s) in \"{name}\": {', '.join(unknown)}.")

    try:
        return section(**value)
    except TypeError as error:
        raise ConfigError(f'Invalid config section "{name}": {error}') from error


def merge_config(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """
    Overlay `overrides` onto `base` field by field; nested sections merge key by key and
    `None` override values are ignored.
    """
    merged: dict[str, Any] = {
        name: dict(value) if isinstance(value, Mapping) else value
        for name, value in base.items()
    }

    for name, value in overrides.items():
        if value is None:
            continue

        if isinstance(value, Mapping):
            section = merged.setdefault(name, {})

            if not isinstance(section, dict):
                raise ConfigError(f'The config section "{name}" must be a mapping.')

            section.update({key: item for key, item in value.items() if item is not None})
        else:
            merged[name] = value

    return merged


def read_config_file(path: Path | str) -> dict[str, Any]:
    path = Path(path)

    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError as error:
        raise ConfigError(f'The config file "{path}" does not exist.') from error
    except yaml.YAMLError as error:
        raise ConfigError(f'The config file "{path}" is not valid YAML: {error}') from error

    if data is None:
        return {}

    if not isinstance(data, dict):
        raise ConfigError(f'The config file "{path}" must hold a mapping at the top level.')

    return data


def load_train_config(
    path: Path | str | None = None, overrides: Mapping[str, Any] | None = None
) -> TrainConfig:
    """
    Resolve a training config with precedence command-line override > config file > default,
    applied field by field.
    """
    data = read_config_file(path) if path is not None else {}

    return TrainConfig.from_dict(merge_config(data, overrides or {}))


def write_config_file(config: TrainConfig, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(config.to_dict(), sort_keys=False), encoding="utf-8")

    return path
