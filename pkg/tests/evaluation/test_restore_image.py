import pytest
import torch
from expects import be_true, equal, expect, raise_error

from uwdehaze.errors import ShapeError
from uwdehaze.evaluation import restore_image
from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.restoration import RestorationNetwork


@pytest.mark.parametrize("size", [(16, 16), (13, 21), (5, 6), (1, 1)])
def test_restore_image_with_any_size(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork, size: tuple[int, int]
) -> None:
    image = torch.rand(3, *size, generator=torch.Generator().manual_seed(0))
    content, restored = restore_image(hdn, restoration, image)

    expect(tuple(content.shape)).to(equal((3, *size)))
    expect(tuple(restored.shape)).to(equal((3, *size)))
    expect(bool(restored.min() >= 0.0 and restored.max() <= 1.0)).to(be_true)


def test_restore_image_with_an_untrained_clean_generator(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork
) -> None:
    content, restored = restore_image(hdn, restoration, torch.rand(3, 20, 24))

    expect(torch.equal(content, restored)).to(be_true)


def test_restore_image_leaves_the_networks_in_eval_mode(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork
) -> None:
    restore_image(hdn, restoration, torch.rand(3, 16, 16))

    expect((hdn.training, restoration.training)).to(equal((False, False)))


def test_restore_image_with_a_batch(
    hdn: HazeDisentanglementNetwork, restoration: RestorationNetwork
) -> None:
    expect(lambda: restore_image(hdn, restoration, torch.rand(1, 3, 16, 16))).to(
        raise_error(ShapeError)
    )
