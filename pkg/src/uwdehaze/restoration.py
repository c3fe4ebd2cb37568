"""
Restoration pair: G_C adds a residual to the content image to produce a clean image, G_U
turns a clean image plus disentangled haze features back into an underwater image. Two
PatchGAN discriminators judge the clean and the underwater domain with least-squares losses.
"""

from dataclasses import dataclass, fields
from typing import Any, Self

import torch
import torch.nn as nn
import torch.nn.functional as F

from uwdehaze.datasets import UnpairedBatch
from uwdehaze.errors import ConfigError, ShapeError
from uwdehaze.hdn import AdversarialLosses, HazeDisentanglementNetwork, HdnForward
from uwdehaze.identity import is_finite
from uwdehaze.networks import (
    ArchitectureConfig,
    PatchDiscriminator,
    RestorationGenerator,
    UnderwaterGenerator,
    init_weights,
)

RESTORATION_TERMS: tuple[str, ...] = (
    "clean_adversarial",
    "underwater_adversarial",
    "underwater_cycle",
    "clean_cycle",
)


@dataclass(frozen=True)
class RestorationLossWeights:
    clean_adversarial: float = 1.0
    underwater_adversarial: float = 1.0
    underwater_cycle: float = 10.0
    clean_cycle: float = 10.0

    def __post_init__(self) -> None:
        for field in fields(self):
            if getattr(self, field.name) < 0.0:
                raise ConfigError(f'The loss weight "{field.name}" must not be negative.')

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in RESTORATION_TERMS}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Self:
        return cls(**{name: float(value) for name, value in data.items()})


@dataclass(frozen=True)
class RestorationOutputs:
    underwater_content: torch.Tensor
    restored_underwater: torch.Tensor
    regenerated_underwater: torch.Tensor
    clean_content: torch.Tensor
    restored_clean: torch.Tensor


@dataclass(frozen=True)
class CycleLosses:
    underwater_cycle: torch.Tensor
    clean_cycle: torch.Tensor


@dataclass(frozen=True)
class RestorationLosses:
    total: torch.Tensor
    terms: dict[str, torch.Tensor]
    clean_discriminator_loss: torch.Tensor
    underwater_discriminator_loss: torch.Tensor


class RestorationNetwork(nn.Module):
    def __init__(
        self,
        architecture: ArchitectureConfig | None = None,
        haze_channels: int | None = None,
        haze_reinjection: bool = True,
    ) -> None:
        super().__init__()
        self.architecture = architecture or ArchitectureConfig()
        self.haze_reinjection = haze_reinjection
        width = self.architecture.base_width
        blocks = self.architecture.residual_blocks
        activation = self.architecture.activation

        self.clean_generator = RestorationGenerator(width, blocks, activation)
        self.underwater_generator = UnderwaterGenerator(
            width, haze_channels or width, blocks, activation
        )
        self.clean_discriminator = PatchDiscriminator(
            self.architecture.discriminator_width, activation
        )
        self.underwater_discriminator = PatchDiscriminator(
            self.architecture.discriminator_width, activation
        )
        self.apply(init_weights)
        self.clean_generator.reset_head()

    def generator_modules(self) -> tuple[nn.Module, ...]:
        return (self.clean_generator, self.underwater_generator)

    def discriminator_modules(self) -> tuple[nn.Module, ...]:
        return (self.clean_discriminator, self.underwater_discriminator)

    def restore(self, content: torch.Tensor, clamp: bool = False) -> torch.Tensor:
        """
        Add the predicted residual to the content image. Clamping to [0, 1] is for inference
        only; training losses see the raw sum.
        """
        restored = self.clean_generator(content) + content

        return restored.clamp(0.0, 1.0) if clamp else restored

    def regenerate_underwater(self, clean: torch.Tensor, haze: torch.Tensor) -> torch.Tensor:
        return self.underwater_generator(clean, haze)

    def outputs(
        self, forward: HdnForward, hdn: HazeDisentanglementNetwork
    ) -> RestorationOutputs:
        """
        Run both cycles on top of a disentanglement pass. The underwater cycle reuses the haze
        features of that same pass, without detaching them. With `haze_reinjection` off, G_U
        gets zero haze features instead and the underwater cycle is a plain image cycle.
        """
        underwater_content = hdn.decode(
            forward.underwater_content, torch.zeros_like(forward.underwater_content)
        )
        restored_underwater = self.restore(underwater_content)
        haze = forward.underwater_haze

        if not self.haze_reinjection:
            haze = torch.zeros_like(haze)

        clean_content = hdn.decode(
            forward.clean_content, torch.zeros_like(forward.clean_content)
        )

        return RestorationOutputs(
            underwater_content=underwater_content,
            restored_underwater=restored_underwater,
            regenerated_underwater=self.regenerate_underwater(restored_underwater, haze),
            clean_content=clean_content,
            restored_clean=self.restore(clean_content),
        )

    def forward(self, content: torch.Tensor) -> torch.Tensor:
        return self.restore(content, clamp=True)


def restore(
    content: torch.Tensor, params: RestorationNetwork, clamp: bool = False
) -> torch.Tensor:
    return params.restore(content, clamp)


def regenerate_underwater(
    clean: torch.Tensor, haze: torch.Tensor, params: RestorationNetwork
) -> torch.Tensor:
    return params.regenerate_underwater(clean, haze)


def image_adversarial_losses(
    real: torch.Tensor,
    fake: torch.Tensor,
    discriminator: nn.Module,
    check_finite: bool = True,
) -> AdversarialLosses:
    """
    Least-squares adversarial losses over patch scores.

    The discriminator minimizes E[(D(real) − 1)²] + E[D(fake)²]; the generator minimizes
    E[(D(fake) − 1)²]. Means run over batch and patch locations.

    :raises ShapeError: If `real` and `fake` differ in shape.
    :raises ValueError: If `check_finite` is set and an input holds NaN or infinity.
    """
    if real.shape != fake.shape:
        raise ShapeError(
            f"Real and fake images must share one shape, got {tuple(real.shape)} and "
            f"{tuple(fake.shape)}."
        )

    if check_finite and not (is_finite(real) and is_finite(fake)):
        raise ValueError("Images passed to an image discriminator must be finite.")

    real_scores = discriminator(real)
    fake_scores = discriminator(fake)

    discriminator_loss = F.mse_loss(real_scores, torch.ones_like(real_scores)) + F.mse_loss(
        fake_scores, torch.zeros_like(fake_scores)
    )
    generator_loss = F.mse_loss(fake_scores, torch.ones_like(fake_scores))

    return AdversarialLosses(discriminator_loss, generator_loss)


def cycle_losses(
    underwater: torch.Tensor,
    clean: torch.Tensor,
    hdn: HazeDisentanglementNetwork,
    params: RestorationNetwork,
    forward: HdnForward | None = None,
    outputs: RestorationOutputs | None = None,
) -> CycleLosses:
    """
    The underwater cycle regenerates the input underwater image from its restored content and
    its own haze features; the clean cycle restores the content image of a clean input.
    """
    if outputs is None:
        forward = forward or hdn.forward_pass(UnpairedBatch(underwater, clean))
        outputs = params.outputs(forward, hdn)

    return CycleLosses(
        underwater_cycle=F.l1_loss(outputs.regenerated_underwater, underwater),
        clean_cycle=F.l1_loss(outputs.restored_clean, clean),
    )


def restoration_total_loss(
    batch: UnpairedBatch,
    hdn: HazeDisentanglementNetwork,
    params: RestorationNetwork,
    weights: RestorationLossWeights | None = None,
    forward: HdnForward | None = None,
    check_finite: bool = True,
) -> RestorationLosses:
    """
    Weighted restoration objective in its generator role. The clean discriminator judges
    restored underwater content against real clean images, the underwater discriminator
    judges regenerated underwater images against the real ones. Discriminator-role losses are
    computed on detached outputs and returned separately.

    :rtype: RestorationLosses
    """
    weights = weights or RestorationLossWeights()
    forward = forward or hdn.forward_pass(batch)
    outputs = params.outputs(forward, hdn)

    clean_adversarial = image_adversarial_losses(
        batch.clean, outputs.restored_underwater, params.clean_discriminator, check_finite
    )
    underwater_adversarial = image_adversarial_losses(
        batch.underwater,
        outputs.regenerated_underwater,
        params.underwater_discriminator,
        check_finite,
    )
    clean_discriminator = image_adversarial_losses(
        batch.clean,
        outputs.restored_underwater.detach(),
        params.clean_discriminator,
        check_finite=False,
    )
    underwater_discriminator = image_adversarial_losses(
        batch.underwater,
        outputs.regenerated_underwater.detach(),
        params.underwater_discriminator,
        check_finite=False,
    )
    cycles = cycle_losses(batch.underwater, batch.clean, hdn, params, outputs=outputs)

    terms = {
        "clean_adversarial": clean_adversarial.generator_loss,
        "underwater_adversarial": underwater_adversarial.generator_loss,
        "underwater_cycle": cycles.underwater_cycle,
        "clean_cycle": cycles.clean_cycle,
    }
    total = sum(
        (weight * terms[name] for name, weight in weights.as_dict().items()),
        start=torch.zeros((), dtype=batch.clean.dtype, device=batch.clean.device),
    )

    return RestorationLosses(
        total,
        terms,
        clean_discriminator.discriminator_loss,
        underwater_discriminator.discriminator_loss,
    )
