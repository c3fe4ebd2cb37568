import torch
from expects import be_false, be_true, equal, expect

from uwdehaze.restoration import RestorationNetwork, regenerate_underwater, restore


def test_restore_with_a_freshly_built_clean_generator(restoration: RestorationNetwork) -> None:
    content = torch.rand(2, 3, 16, 16)

    expect(torch.equal(restore(content, restoration), content)).to(be_true)


def test_restore_with_clamping_for_inference(restoration: RestorationNetwork) -> None:
    with torch.no_grad():
        restoration.clean_generator.head.bias.fill_(2.0)

    content = torch.rand(1, 3, 16, 16)

    expect(bool(restore(content, restoration).max() > 1.0)).to(be_true)
    expect(bool(restore(content, restoration, clamp=True).max() > 1.0)).to(be_false)


def test_regenerate_underwater_with_haze_features_of_the_bottleneck_size(
    restoration: RestorationNetwork,
) -> None:
    clean = torch.rand(2, 3, 16, 16)
    haze = torch.randn(2, 8, 4, 4)
    result = regenerate_underwater(clean, haze, restoration)

    expect(tuple(result.shape)).to(equal((2, 3, 16, 16)))
    expect(bool(result.min() >= 0.0) and bool(result.max() <= 1.0)).to(be_true)


def test_regenerate_underwater_depends_on_the_haze_features(
    restoration: RestorationNetwork,
) -> None:
    clean = torch.rand(1, 3, 16, 16)
    calm = regenerate_underwater(clean, torch.zeros(1, 8, 4, 4), restoration)
    hazy = regenerate_underwater(clean, torch.full((1, 8, 4, 4), 3.0), restoration)

    expect(torch.equal(calm, hazy)).to(be_false)
