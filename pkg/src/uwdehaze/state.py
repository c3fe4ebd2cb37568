import itertools
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from uwdehaze.config import TrainConfig
from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.restoration import RestorationNetwork


@dataclass
class TrainState:
    """
    Everything a run needs to continue: the networks, one Adam optimizer per role, the
    counters and the batch-sampling generator. `step` only ever grows.
    """

    config: TrainConfig
    hdn: HazeDisentanglementNetwork
    restoration: RestorationNetwork
    generator_optimizer: torch.optim.Adam
    discriminator_optimizer: torch.optim.Adam
    rng: np.random.Generator
    epoch: int = 0
    step: int = 0

    def generator_modules(self) -> tuple[nn.Module, ...]:
        return self.hdn.generator_modules() + self.restoration.generator_modules()

    def discriminator_modules(self) -> tuple[nn.Module, ...]:
        return self.hdn.discriminator_modules() + self.restoration.discriminator_modules()

    def snapshot(self) -> dict[str, torch.Tensor]:
        """Detached copies of every network parameter, keyed by qualified name."""
        return {
            f"{prefix}.{name}": parameter.detach().clone()
            for prefix, network in (("hdn", self.hdn), ("restoration", self.restoration))
            for name, parameter in network.named_parameters()
        }


def set_requires_grad(modules: tuple[nn.Module, ...], flag: bool) -> None:
    for module in modules:
        for parameter in module.parameters():
            parameter.requires_grad_(flag)


def _adam(modules: tuple[nn.Module, ...], config: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(
        itertools.chain.from_iterable(module.parameters() for module in modules),
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
    )


def build_state(config: TrainConfig) -> TrainState:
    """
    Seed torch, build all networks on the configured device and attach a generator-side and
    a discriminator-side optimizer sharing the configured hyperparameters.

    :rtype: TrainState
    """
    torch.manual_seed(config.seed)

    hdn = HazeDisentanglementNetwork(config.architecture).to(config.device)
    restoration = RestorationNetwork(
        config.architecture, hdn.feature_channels, config.haze_reinjection
    ).to(config.device)

    return TrainState(
        config=config,
        hdn=hdn,
        restoration=restoration,
        generator_optimizer=_adam(hdn.generator_modules() + restoration.generator_modules(), config),
        discriminator_optimizer=_adam(
            hdn.discriminator_modules() + restoration.discriminator_modules(), config
        ),
        rng=np.random.default_rng(config.seed),
    )
