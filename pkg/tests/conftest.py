from pathlib import Path

import pytest
import torch

from uwdehaze.config import TrainConfig
from uwdehaze.datasets import InMemoryImages, UnpairedBatch
from uwdehaze.degradation import synthesize_pairs, write_paired_dataset
from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.networks import ArchitectureConfig
from uwdehaze.restoration import RestorationNetwork

TINY = ArchitectureConfig(base_width=8, residual_blocks=1, discriminator_width=8)


@pytest.fixture
def tiny_architecture() -> ArchitectureConfig:
    return TINY


@pytest.fixture
def hdn() -> HazeDisentanglementNetwork:
    torch.manual_seed(0)

    return HazeDisentanglementNetwork(TINY)


@pytest.fixture
def restoration(hdn: HazeDisentanglementNetwork) -> RestorationNetwork:
    torch.manual_seed(1)

    return RestorationNetwork(TINY, hdn.feature_channels)


@pytest.fixture
def batch() -> UnpairedBatch:
    generator = torch.Generator().manual_seed(0)

    return UnpairedBatch(
        torch.rand(2, 3, 16, 16, generator=generator),
        torch.rand(2, 3, 16, 16, generator=generator),
    )


@pytest.fixture
def pairs() -> InMemoryImages:
    return synthesize_pairs(8, 32, seed=0)


@pytest.fixture
def tiny_config() -> TrainConfig:
    return TrainConfig(
        patch=16,
        batch=2,
        epochs=1,
        max_steps=3,
        log_every=1,
        checkpoint_every=1000,
        progress=False,
        architecture=TINY,
    )


@pytest.fixture
def dataset_root(tmp_path: Path) -> Path:
    return write_paired_dataset(synthesize_pairs(4, 32, seed=0), tmp_path / "data")
