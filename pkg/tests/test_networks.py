import pytest
import torch
from expects import be_below, be_true, equal, expect

from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.networks import (
    ArchitectureConfig,
    ConvEncoder,
    FeatureDecoder,
    ResidualBlock,
    init_weights,
)
from uwdehaze.restoration import RestorationNetwork


@pytest.fixture
def architecture() -> ArchitectureConfig:
    return ArchitectureConfig(base_width=16, residual_blocks=2, discriminator_width=16)


def test_residual_block_starts_as_the_identity() -> None:
    torch.manual_seed(0)
    block = ResidualBlock(8, "leaky_relu")
    block.apply(init_weights)
    features = torch.randn(2, 8, 6, 6)

    expect(torch.equal(block(features), features)).to(be_true)


def test_residual_blocks_are_unnormalized(architecture: ArchitectureConfig) -> None:
    hdn = HazeDisentanglementNetwork(architecture)
    norms = [
        name
        for name, module in hdn.decoder.named_modules()
        if isinstance(module, torch.nn.InstanceNorm2d)
    ]

    expect(norms).to(equal([]))


def test_conv_encoder_ignores_a_mid_grey_image() -> None:
    torch.manual_seed(0)
    encoder = ConvEncoder(8, "leaky_relu")
    encoder.apply(init_weights)

    for output in encoder(torch.full((1, 3, 16, 16), 0.5)):
        expect(bool(output.eq(0.0).all())).to(be_true)


def test_conv_encoder_keeps_the_signal_scale(architecture: ArchitectureConfig) -> None:
    torch.manual_seed(0)
    encoder = HazeDisentanglementNetwork(architecture).haze_encoder
    image = torch.rand(4, 3, 32, 32)

    with torch.no_grad():
        encoding = encoder(image)[-1]

    expect(float(encoding.std())).not_to(be_below(0.1))


def test_feature_decoder_starts_off_saturation(architecture: ArchitectureConfig) -> None:
    torch.manual_seed(0)
    decoder = FeatureDecoder(architecture.base_width, architecture.residual_blocks, "leaky_relu")
    decoder.apply(init_weights)

    with torch.no_grad():
        image = decoder(torch.randn(2, architecture.base_width, 8, 8))

    expect(float((image - 0.5).abs().max())).to(be_below(0.45))


def test_discriminators_start_with_small_weights(architecture: ArchitectureConfig) -> None:
    torch.manual_seed(0)
    hdn = HazeDisentanglementNetwork(architecture)
    restoration = RestorationNetwork(architecture, hdn.feature_channels)

    for discriminator in (
        hdn.feature_discriminator,
        restoration.clean_discriminator,
        restoration.underwater_discriminator,
    ):
        for name, parameter in discriminator.named_parameters():
            if name.endswith("weight"):
                expect(float(parameter.std())).to(be_below(0.03))
