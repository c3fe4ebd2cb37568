"""
Haze disentanglement network: a haze-free (content) encoder, a haze encoder, a shared decoder
fed with the sum of both encodings, and a discriminator over content feature maps.
"""

from collections.abc import Sequence
from dataclasses import dataclass, fields
from typing import Any, Self

import torch
import torch.nn as nn
import torch.nn.functional as F

from uwdehaze.datasets import UnpairedBatch
from uwdehaze.errors import ConfigError, ShapeError
from uwdehaze.identity import is_divisible_size, is_feature_map, is_finite, is_image_batch
from uwdehaze.networks import (
    ArchitectureConfig,
    ConvEncoder,
    FeatureDecoder,
    FeatureDiscriminator,
    init_weights,
)

HDN_TERMS: tuple[str, ...] = (
    "feature_adversarial",
    "feature_regularization",
    "clean_reconstruction",
    "underwater_reconstruction",
)


@dataclass(frozen=True)
class HdnLossWeights:
    feature_adversarial: float = 1.0
    feature_regularization: float = 10.0
    clean_reconstruction: float = 1.0
    underwater_reconstruction: float = 1.0

    def __post_init__(self) -> None:
        for field in fields(self):
            if getattr(self, field.name) < 0.0:
                raise ConfigError(f'The loss weight "{field.name}" must not be negative.')

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in HDN_TERMS}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Self:
        return cls(**{name: float(value) for name, value in data.items()})


@dataclass(frozen=True)
class HazeEncoderTrace:
    """Every layer output of the haze encoder, in order; the last one is the haze encoding."""

    intermediates: tuple[torch.Tensor, ...]

    def __post_init__(self) -> None:
        if not self.intermediates:
            raise ShapeError("A haze encoder trace needs at least one feature map.")

    def __len__(self) -> int:
        return len(self.intermediates)

    @property
    def final(self) -> torch.Tensor:
        return self.intermediates[-1]


@dataclass(frozen=True)
class AdversarialLosses:
    discriminator_loss: torch.Tensor
    generator_loss: torch.Tensor


@dataclass(frozen=True)
class HdnForward:
    """One pass of both encoders and the decoder over an unpaired batch."""

    clean_content: torch.Tensor
    underwater_content: torch.Tensor
    clean_trace: HazeEncoderTrace
    underwater_trace: HazeEncoderTrace
    clean_reconstruction: torch.Tensor
    underwater_reconstruction: torch.Tensor

    @property
    def underwater_haze(self) -> torch.Tensor:
        return self.underwater_trace.final


@dataclass(frozen=True)
class HdnLosses:
    total: torch.Tensor
    terms: dict[str, torch.Tensor]
    discriminator_loss: torch.Tensor


class HazeDisentanglementNetwork(nn.Module):
    def __init__(self, architecture: ArchitectureConfig | None = None) -> None:
        super().__init__()
        self.architecture = architecture or ArchitectureConfig()
        width = self.architecture.base_width
        activation = self.architecture.activation

        self.haze_free_encoder = ConvEncoder(width, activation)
        self.haze_encoder = ConvEncoder(width, activation)
        self.decoder = FeatureDecoder(width, self.architecture.residual_blocks, activation)
        self.feature_discriminator = FeatureDiscriminator(
            width, self.architecture.discriminator_width, activation
        )
        self.apply(init_weights)

    @property
    def feature_channels(self) -> int:
        return self.architecture.base_width

    def generator_modules(self) -> tuple[nn.Module, ...]:
        return (self.haze_free_encoder, self.haze_encoder, self.decoder)

    def discriminator_modules(self) -> tuple[nn.Module, ...]:
        return (self.feature_discriminator,)

    def _check_input(self, image: torch.Tensor) -> None:
        if not is_image_batch(image):
            raise ShapeError(
                f"Expected an image batch of shape B×3×H×W, got {tuple(image.shape)}."
            )

        factor = self.architecture.downsampling_factor

        if not is_divisible_size(image, factor):
            raise ShapeError(
                f"Image height and width must be multiples of {factor}, got "
                f"{tuple(image.shape[-2:])}."
            )

    def encode_haze_free(self, image: torch.Tensor) -> torch.Tensor:
        self._check_input(image)

        return self.haze_free_encoder(image)[-1]

    def encode_haze(self, image: torch.Tensor) -> HazeEncoderTrace:
        self._check_input(image)

        return HazeEncoderTrace(tuple(self.haze_encoder(image)))

    def decode(self, content: torch.Tensor, haze: torch.Tensor) -> torch.Tensor:
        if not is_feature_map(content) or content.shape != haze.shape:
            raise ShapeError(
                f"Content and haze feature maps must share one B×C×H×W shape, got "
                f"{tuple(content.shape)} and {tuple(haze.shape)}."
            )

        return self.decoder(content + haze)

    def content_image(self, image: torch.Tensor) -> torch.Tensor:
        """Decode the content encoding alone, with the haze slot filled by zeros."""
        content = self.encode_haze_free(image)

        return self.decode(content, torch.zeros_like(content))

    def haze_image(self, image: torch.Tensor) -> torch.Tensor:
        """Decode the haze encoding alone, with the content slot filled by zeros."""
        haze = self.encode_haze(image).final

        return self.decode(torch.zeros_like(haze), haze)

    def forward_pass(self, batch: UnpairedBatch) -> HdnForward:
        clean_content = self.encode_haze_free(batch.clean)
        underwater_content = self.encode_haze_free(batch.underwater)
        clean_trace = self.encode_haze(batch.clean)
        underwater_trace = self.encode_haze(batch.underwater)

        return HdnForward(
            clean_content=clean_content,
            underwater_content=underwater_content,
            clean_trace=clean_trace,
            underwater_trace=underwater_trace,
            clean_reconstruction=self.decode(clean_content, clean_trace.final),
            underwater_reconstruction=self.decode(underwater_content, underwater_trace.final),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.content_image(image)


def encode_haze_free(image: torch.Tensor, hdn: HazeDisentanglementNetwork) -> torch.Tensor:
    return hdn.encode_haze_free(image)


def encode_haze(image: torch.Tensor, hdn: HazeDisentanglementNetwork) -> HazeEncoderTrace:
    return hdn.encode_haze(image)


def decode(
    content: torch.Tensor, haze: torch.Tensor, hdn: HazeDisentanglementNetwork
) -> torch.Tensor:
    return hdn.decode(content, haze)


def content_image(image: torch.Tensor, hdn: HazeDisentanglementNetwork) -> torch.Tensor:
    return hdn.content_image(image)


def haze_image(image: torch.Tensor, hdn: HazeDisentanglementNetwork) -> torch.Tensor:
    return hdn.haze_image(image)


def feature_adversarial_loss(
    real: torch.Tensor,
    fake: torch.Tensor,
    discriminator: nn.Module,
    check_finite: bool = True,
) -> AdversarialLosses:
    """
    Binary cross-entropy on per-location discriminator logits, with clean-image content
    features as real samples and underwater content features as fake ones.

    The discriminator minimizes −E[log D(real)] − E[log(1 − D(fake))]; the encoders minimize
    the non-saturating −E[log D(fake)]. Expectations are means over batch and locations.

    >>> losses = feature_adversarial_loss(real, fake, discriminator_returning_zero_logits)
    >>> round(losses.discriminator_loss.item(), 4), round(losses.generator_loss.item(), 4)
    (1.3863, 0.6931)

    :param real: Content features of clean images.
    :param fake: Content features of underwater images.
    :param discriminator: Maps a feature map to per-location logits.
    :rtype: AdversarialLosses
    :raises ShapeError: If the feature maps differ in shape.
    :raises ValueError: If `check_finite` is set and an input holds NaN or infinity.
    """
    if real.shape != fake.shape:
        raise ShapeError(
            f"Real and fake feature maps must share one shape, got {tuple(real.shape)} "
            f"and {tuple(fake.shape)}."
        )

    if check_finite and not (is_finite(real) and is_finite(fake)):
        raise ValueError("Feature maps passed to the feature discriminator must be finite.")

    real_logits = discriminator(real)
    fake_logits = discriminator(fake)

    discriminator_loss = F.binary_cross_entropy_with_logits(
        real_logits, torch.ones_like(real_logits)
    ) + F.binary_cross_entropy_with_logits(fake_logits, torch.zeros_like(fake_logits))
    generator_loss = F.binary_cross_entropy_with_logits(
        fake_logits, torch.ones_like(fake_logits)
    )

    return AdversarialLosses(discriminator_loss, generator_loss)


def feature_regularization_loss(
    trace: HazeEncoderTrace | Sequence[torch.Tensor],
) -> torch.Tensor:
    """
    Sum over haze encoder layers of the mean absolute activation; zero exactly when every
    layer output is zero.

    >>> feature_regularization_loss([torch.tensor([[1.0, -1.0], [2.0, 0.0]]), torch.tensor([[0.5]])])
    tensor(1.5000)
    """
    intermediates = trace.intermediates if isinstance(trace, HazeEncoderTrace) else tuple(trace)

    if not intermediates:
        raise ShapeError("The haze encoder trace is empty.")

    return torch.stack([feature.abs().mean() for feature in intermediates]).sum()


def disentangled_cyclic_loss(
    reconstruction: torch.Tensor, target: torch.Tensor
) -> torch.Tensor:
    if reconstruction.shape != target.shape:
        raise ShapeError(
            f"Reconstruction and target must share one shape, got "
            f"{tuple(reconstruction.shape)} and {tuple(target.shape)}."
        )

    return F.l1_loss(reconstruction, target)


def hdn_total_loss(
    batch: UnpairedBatch,
    hdn: HazeDisentanglementNetwork,
    weights: HdnLossWeights | None = None,
    forward: HdnForward | None = None,
    check_finite: bool = True,
) -> HdnLosses:
    """
    Weighted disentanglement objective for the encoders and decoder.

    The feature adversarial term enters in its generator role; the discriminator role is
    computed on detached features and returned separately for the alternating update.

    :param forward: A pass already computed for this batch, so restoration can share it.
    :rtype: HdnLosses
    """
    weights = weights or HdnLossWeights()
    forward = forward or hdn.forward_pass(batch)

    attached = feature_adversarial_loss(
        forward.clean_content,
        forward.underwater_content,
        hdn.feature_discriminator,
        check_finite,
    )
    detached = feature_adversarial_loss(
        forward.clean_content.detach(),
        forward.underwater_content.detach(),
        hdn.feature_discriminator,
        check_finite=False,
    )

    terms = {
        "feature_adversarial": attached.generator_loss,
        "feature_regularization": feature_regularization_loss(forward.clean_trace),
        "clean_reconstruction": disentangled_cyclic_loss(
            forward.clean_reconstruction, batch.clean
        ),
        "underwater_reconstruction": disentangled_cyclic_loss(
            forward.underwater_reconstruction, batch.underwater
        ),
    }
    total = sum(
        (weight * terms[name] for name, weight in weights.as_dict().items()),
        start=torch.zeros((), dtype=batch.clean.dtype, device=batch.clean.device),
    )

    return HdnLosses(total, terms, detached.discriminator_loss)
