import torch
from expects import be_true, be_within, equal, expect

from uwdehaze.datasets import UnpairedBatch
from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.restoration import (
    RestorationLossWeights,
    RestorationNetwork,
    cycle_losses,
    image_adversarial_losses,
    restoration_total_loss,
)


def test_restoration_total_loss_with_the_default_weights(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork, batch: UnpairedBatch
) -> None:
    forward = hdn.forward_pass(batch)
    outputs = restoration.outputs(forward, hdn)
    clean_adversarial = image_adversarial_losses(
        batch.clean, outputs.restored_underwater, restoration.clean_discriminator
    ).generator_loss
    underwater_adversarial = image_adversarial_losses(
        batch.underwater, outputs.regenerated_underwater, restoration.underwater_discriminator
    ).generator_loss
    cycles = cycle_losses(batch.underwater, batch.clean, hdn, restoration, outputs=outputs)
    expected = (
        clean_adversarial
        + underwater_adversarial
        + 10.0 * cycles.underwater_cycle
        + 10.0 * cycles.clean_cycle
    ).item()

    losses = restoration_total_loss(batch, hdn, restoration, RestorationLossWeights(), forward)

    expect(losses.total.item()).to(be_within(expected - 1e-6, expected + 1e-6))


def test_restoration_total_loss_names_its_terms(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork, batch: UnpairedBatch
) -> None:
    losses = restoration_total_loss(batch, hdn, restoration)

    expect(tuple(losses.terms)).to(
        equal(("clean_adversarial", "underwater_adversarial", "underwater_cycle", "clean_cycle"))
    )


def test_restoration_total_loss_keeps_discriminator_roles_off_the_generators(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork, batch: UnpairedBatch
) -> None:
    losses = restoration_total_loss(batch, hdn, restoration)
    (losses.clean_discriminator_loss + losses.underwater_discriminator_loss).backward()

    generator_gradients = [p.grad for p in restoration.underwater_generator.parameters()]

    expect(all(gradient is None for gradient in generator_gradients)).to(be_true)
    expect(restoration.clean_discriminator.layers[0].weight.grad is not None).to(be_true)


def test_restoration_loss_weights_from_a_mapping() -> None:
    weights = RestorationLossWeights.from_dict({"underwater_cycle": 5, "clean_cycle": "2.5"})

    expect(weights.as_dict()).to(
        equal(
            {
                "clean_adversarial": 1.0,
                "underwater_adversarial": 1.0,
                "underwater_cycle": 5.0,
                "clean_cycle": 2.5,
            }
        )
    )


def test_restoration_total_loss_is_a_plain_scalar(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork, batch: UnpairedBatch
) -> None:
    losses = restoration_total_loss(batch, hdn, restoration)

    expect(losses.total.ndim).to(equal(0))
    expect(losses.total.dtype).to(equal(torch.float32))


def test_restoration_total_loss_with_all_weights_zero(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork, batch: UnpairedBatch
) -> None:
    losses = restoration_total_loss(
        batch, hdn, restoration, RestorationLossWeights(0.0, 0.0, 0.0, 0.0)
    )

    expect(losses.total.item()).to(equal(0.0))
    expect(losses.terms["clean_cycle"].item() > 0.0).to(be_true)
