"""
Convolutional building blocks shared by the haze disentanglement and restoration networks.

All encoders downsample twice by stride-2 convolutions, so image sides must be multiples of
`ArchitectureConfig.downsampling_factor` and the generators work on inputs of at least 8×8.
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Any, Literal, Self

import torch
import torch.nn as nn
import torch.nn.functional as F

from uwdehaze.errors import ConfigError, ShapeError

type ActivationName = Literal["leaky_relu", "silu"]

ACTIVATIONS: tuple[ActivationName, ...] = ("leaky_relu", "silu")


@dataclass(frozen=True)
class ArchitectureConfig:
    base_width: int = 64
    residual_blocks: int = 2
    discriminator_width: int = 64
    activation: ActivationName = "leaky_relu"

    def __post_init__(self) -> None:
        for name in ("base_width", "discriminator_width"):
            if getattr(self, name) < 1:
                raise ConfigError(f'The provided "{name}" must be positive.')

        if self.residual_blocks < 0:
            raise ConfigError('The provided "residual_blocks" must not be negative.')

        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f'The provided "activation" must be one of {", ".join(ACTIVATIONS)}, got "{self.activation}".'
            )

    @property
    def downsampling_factor(self) -> int:
        return 4

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Self:
        return cls(**data)

    def config_hash(self) -> bytes:
        """SHA-256 digest of the canonical JSON form; checkpoints refuse a different digest."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

        return hashlib.sha256(canonical.encode("utf-8")).digest()


def make_activation(name: ActivationName) -> nn.Module:
    match name:
        case "leaky_relu":
            return nn.LeakyReLU(0.2)
        case "silu":
            return nn.SiLU()
        case _:
            raise ConfigError(f'Unsupported activation "{name}".')


def _init_small(module: nn.Module) -> None:
    for layer in module.modules():
        if isinstance(layer, nn.Conv2d | nn.ConvTranspose2d):
            nn.init.normal_(layer.weight, 0.0, 0.02)

            if layer.bias is not None:
                nn.init.zeros_(layer.bias)


def init_weights(module: nn.Module) -> None:
    """
    Initialization applied with `nn.Module.apply`, which visits children before their parent.

    Encoder and generator convolutions get He-normal weights for a 0.2 leaky slope so the
    signal keeps its scale through the stack. Image heads and both discriminators draw from
    N(0, 0.02), and the second convolution of every residual block starts at zero so each
    block begins as the identity. Biases start at zero.
    """
    match module:
        case ImageHead() | FeatureDiscriminator() | PatchDiscriminator():
            _init_small(module)
        case ResidualBlock():
            zero_parameters(module.block[-1])
        case nn.Conv2d() | nn.ConvTranspose2d():
            nn.init.kaiming_normal_(module.weight, a=0.2, nonlinearity="leaky_relu")

            if module.bias is not None:
                nn.init.zeros_(module.bias)


@torch.no_grad()
def zero_parameters(module: nn.Module) -> nn.Module:
    for parameter in module.parameters():
        parameter.zero_()

    return module


def to_signed_range(image: torch.Tensor) -> torch.Tensor:
    return image * 2.0 - 1.0


def to_unit_range(x: torch.Tensor) -> torch.Tensor:
    return (torch.tanh(x) + 1.0) / 2.0


class ImageHead(nn.Conv2d):
    """Final 3×3 convolution producing three image channels."""

    def __init__(self, width: int) -> None:
        super().__init__(width, 3, kernel_size=3, padding=1)


class ResidualBlock(nn.Module):
    # No normalization: the per-image colour cast has to reach the decoder.
    def __init__(self, width: int, activation: ActivationName) -> None:
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(width, width, kernel_size=3, padding=1),
            make_activation(activation),
            nn.Conv2d(width, width, kernel_size=3, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.block(x)


class ConvEncoder(nn.Module):
    """
    Four convolutions: two stride-2 downsampling layers followed by two stride-1 layers. The
    image is mapped to [-1, 1] first, so a mid-grey pixel contributes nothing. The last layer
    is linear so the features may take either sign. `forward` returns the output of every
    layer, the last one being the encoding.
    """

    def __init__(self, width: int, activation: ActivationName) -> None:
        super().__init__()
        self.layers = nn.ModuleList(
            [
                nn.Sequential(
                    nn.Conv2d(3, width, kernel_size=3, stride=2, padding=1),
                    make_activation(activation),
                ),
                nn.Sequential(
                    nn.Conv2d(width, width, kernel_size=3, stride=2, padding=1),
                    make_activation(activation),
                ),
                nn.Sequential(
                    nn.Conv2d(width, width, kernel_size=3, padding=1),
                    make_activation(activation),
                ),
                nn.Conv2d(width, width, kernel_size=3, padding=1),
            ]
        )

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        outputs: list[torch.Tensor] = []
        x = to_signed_range(x)

        for layer in self.layers:
            x = layer(x)
            outputs.append(x)

        return outputs


class Upsampler(nn.Sequential):
    def __init__(self, width: int, activation: ActivationName) -> None:
        super().__init__(
            nn.ConvTranspose2d(width, width, kernel_size=4, stride=2, padding=1),
            make_activation(activation),
            nn.ConvTranspose2d(width, width, kernel_size=4, stride=2, padding=1),
            make_activation(activation),
        )


class Downsampler(nn.Sequential):
    def __init__(self, width: int, activation: ActivationName) -> None:
        super().__init__(
            nn.Conv2d(3, width, kernel_size=3, padding=1),
            make_activation(activation),
            nn.Conv2d(width, width, kernel_size=3, stride=2, padding=1),
            make_activation(activation),
            nn.Conv2d(width, width, kernel_size=3, stride=2, padding=1),
            make_activation(activation),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return super().forward(to_signed_range(image))


class FeatureDecoder(nn.Module):
    """Residual blocks, two ×2 transposed convolutions and a tanh head rescaled to [0, 1]."""

    def __init__(self, width: int, residual_blocks: int, activation: ActivationName) -> None:
        super().__init__()
        self.blocks = nn.Sequential(
            *(ResidualBlock(width, activation) for _ in range(residual_blocks))
        )
        self.upsample = Upsampler(width, activation)
        self.head = ImageHead(width)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return to_unit_range(self.head(self.upsample(self.blocks(features))))


class FeatureDiscriminator(nn.Module):
    """Three-layer patch classifier over feature maps; returns per-location logits."""

    def __init__(self, channels: int, width: int, activation: ActivationName) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(channels, width, kernel_size=3, padding=1),
            make_activation(activation),
            nn.Conv2d(width, width, kernel_size=3, padding=1),
            make_activation(activation),
            nn.Conv2d(width, 1, kernel_size=3, padding=1),
        )

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.layers(features)

    def probabilities(self, features: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.forward(features))


class PatchDiscriminator(nn.Module):
    """PatchGAN image discriminator producing unbounded least-squares scores per patch."""

    def __init__(self, width: int, activation: ActivationName) -> None:
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(3, width, kernel_size=4, stride=2, padding=1),
            make_activation(activation),
            nn.Conv2d(width, width * 2, kernel_size=4, stride=2, padding=1),
            nn.InstanceNorm2d(width * 2),
            make_activation(activation),
            nn.Conv2d(width * 2, 1, kernel_size=4, padding=1),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.layers(image)


class RestorationGenerator(nn.Module):
    """
    Predicts a residual to add to the content image. The head starts at zero, so the
    residual is exactly zero until the first update.
    """

    def __init__(self, width: int, residual_blocks: int, activation: ActivationName) -> None:
        super().__init__()
        self.downsample = Downsampler(width, activation)
        self.blocks = nn.Sequential(
            *(ResidualBlock(width, activation) for _ in range(residual_blocks))
        )
        self.upsample = Upsampler(width, activation)
        self.head = ImageHead(width)

    def reset_head(self) -> None:
        zero_parameters(self.head)

    def forward(self, content: torch.Tensor) -> torch.Tensor:
        return self.head(self.upsample(self.blocks(self.downsample(content))))


class UnderwaterGenerator(nn.Module):
    """
    Synthesizes an underwater image from a clean image and haze features. The haze map is
    resized to the bottleneck, concatenated and projected back to the bottleneck width.
    """

    def __init__(
        self,
        width: int,
        haze_channels: int,
        residual_blocks: int,
        activation: ActivationName,
    ) -> None:
        super().__init__()
        self.haze_channels = haze_channels
        self.downsample = Downsampler(width, activation)
        self.fuse = nn.Sequential(
            nn.Conv2d(width + haze_channels, width, kernel_size=1),
            make_activation(activation),
        )
        self.blocks = nn.Sequential(
            *(ResidualBlock(width, activation) for _ in range(residual_blocks))
        )
        self.upsample = Upsampler(width, activation)
        self.head = ImageHead(width)

    def forward(self, clean: torch.Tensor, haze: torch.Tensor) -> torch.Tensor:
        if haze.ndim != 4 or haze.shape[1] != self.haze_channels:
            raise ShapeError(
                f"The haze feature map must have {self.haze_channels} channels, got shape "
                f"{tuple(haze.shape)}."
            )

        bottleneck = self.downsample(clean)

        if haze.shape[0] != bottleneck.shape[0]:
            raise ShapeError(
                f"The haze batch size {haze.shape[0]} does not match the image batch size "
                f"{bottleneck.shape[0]}."
            )

        if haze.shape[-2:] != bottleneck.shape[-2:]:
            haze = F.interpolate(
                haze, size=bottleneck.shape[-2:], mode="bilinear", align_corners=False
            )

        fused = self.fuse(torch.cat([bottleneck, haze], dim=1))

        return to_unit_range(self.head(self.upsample(self.blocks(fused))))
