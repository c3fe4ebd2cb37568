import numpy as np
import pytest
import torch
import torch.nn as nn
from expects import be_true, expect

from uwdehaze.datasets import UnpairedBatch
from uwdehaze.gradcheck import check_parameter_gradients
from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.networks import ArchitectureConfig, ResidualBlock
from uwdehaze.restoration import RestorationNetwork, restoration_total_loss

SMOOTH = ArchitectureConfig(
    base_width=4, residual_blocks=1, discriminator_width=4, activation="silu"
)


@pytest.fixture
def networks() -> tuple[HazeDisentanglementNetwork, RestorationNetwork]:
    torch.manual_seed(0)
    hdn = HazeDisentanglementNetwork(SMOOTH).double()
    restoration = RestorationNetwork(SMOOTH, hdn.feature_channels).double()

    # Zero heads and residual branches leave the layers before them without gradient.
    nn.init.normal_(restoration.clean_generator.head.weight, 0.0, 0.02)

    for block in (*hdn.modules(), *restoration.modules()):
        if isinstance(block, ResidualBlock):
            nn.init.normal_(block.block[-1].weight, 0.0, 0.02)

    return hdn, restoration


@pytest.fixture
def double_batch() -> UnpairedBatch:
    generator = torch.Generator().manual_seed(0)

    return UnpairedBatch(
        torch.rand(2, 3, 16, 16, generator=generator, dtype=torch.float64),
        torch.rand(2, 3, 16, 16, generator=generator, dtype=torch.float64),
    )


@pytest.mark.parametrize(
    "part",
    ["clean_generator", "underwater_generator", "clean_discriminator", "underwater_discriminator"],
)
def test_restoration_total_loss_gradients_match_finite_differences(
    networks: tuple[HazeDisentanglementNetwork, RestorationNetwork],
    double_batch: UnpairedBatch,
    part: str,
) -> None:
    hdn, restoration = networks
    checks = check_parameter_gradients(
        lambda: restoration_total_loss(double_batch, hdn, restoration).total,
        getattr(restoration, part),
        count=10,
        rng=np.random.default_rng(0),
    )

    expect(all(check.passed for check in checks)).to(be_true)


def test_image_discriminator_loss_gradients_match_finite_differences(
    networks: tuple[HazeDisentanglementNetwork, RestorationNetwork],
    double_batch: UnpairedBatch,
) -> None:
    hdn, restoration = networks

    def discriminator_total() -> torch.Tensor:
        losses = restoration_total_loss(double_batch, hdn, restoration)

        return losses.clean_discriminator_loss + losses.underwater_discriminator_loss

    for part in (restoration.clean_discriminator, restoration.underwater_discriminator):
        checks = check_parameter_gradients(
            discriminator_total, part, count=10, rng=np.random.default_rng(2)
        )

        expect(all(check.passed for check in checks)).to(be_true)


def test_restoration_network_starts_as_an_exact_identity() -> None:
    restoration = RestorationNetwork(ArchitectureConfig(base_width=8, discriminator_width=8))
    content = torch.rand(3, 3, 32, 24)

    expect(torch.equal(restoration.restore(content), content)).to(be_true)
