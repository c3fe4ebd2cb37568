import torch
from expects import be_within, expect, raise_error

from uwdehaze.errors import ShapeError
from uwdehaze.restoration import image_adversarial_losses


def halfway(image: torch.Tensor) -> torch.Tensor:
    return torch.full((image.shape[0], 1, 3, 3), 0.5, dtype=image.dtype)


def test_image_adversarial_losses_with_a_discriminator_scoring_one_half() -> None:
    real = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    fake = torch.rand(2, 3, 16, 16, dtype=torch.float64)
    losses = image_adversarial_losses(real, fake, halfway)

    expect(losses.discriminator_loss.item()).to(be_within(0.5 - 1e-9, 0.5 + 1e-9))
    expect(losses.generator_loss.item()).to(be_within(0.25 - 1e-9, 0.25 + 1e-9))


def test_image_adversarial_losses_with_a_perfect_discriminator() -> None:
    def perfect(image: torch.Tensor) -> torch.Tensor:
        return image.mean(dim=1, keepdim=True)

    real = torch.ones(1, 3, 8, 8, dtype=torch.float64)
    fake = torch.zeros(1, 3, 8, 8, dtype=torch.float64)
    losses = image_adversarial_losses(real, fake, perfect)

    expect(losses.discriminator_loss.item()).to(be_within(-1e-12, 1e-12))
    expect(losses.generator_loss.item()).to(be_within(1.0 - 1e-12, 1.0 + 1e-12))


def test_image_adversarial_losses_with_mismatched_shapes() -> None:
    expect(
        lambda: image_adversarial_losses(
            torch.zeros(1, 3, 16, 16), torch.zeros(1, 3, 8, 8), halfway
        )
    ).to(raise_error(ShapeError))
