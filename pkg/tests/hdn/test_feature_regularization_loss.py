import torch
from expects import be_within, equal, expect, raise_error

from uwdehaze.errors import ShapeError
from uwdehaze.hdn import HazeEncoderTrace, HazeDisentanglementNetwork, feature_regularization_loss
from uwdehaze.networks import zero_parameters


def test_feature_regularization_loss_with_hand_computed_layers() -> None:
    trace = HazeEncoderTrace((torch.tensor([[1.0, -1.0], [2.0, 0.0]]), torch.tensor([[0.5]])))

    expect(feature_regularization_loss(trace).item()).to(be_within(1.5 - 1e-9, 1.5 + 1e-9))


def test_feature_regularization_loss_with_a_plain_sequence() -> None:
    layers = [torch.tensor([[1.0, -1.0], [2.0, 0.0]]), torch.tensor([[0.5]])]

    expect(feature_regularization_loss(layers).item()).to(be_within(1.5 - 1e-9, 1.5 + 1e-9))


def test_feature_regularization_loss_with_a_zeroed_haze_encoder(
    hdn: HazeDisentanglementNetwork,
) -> None:
    zero_parameters(hdn.haze_encoder)
    trace = hdn.encode_haze(torch.rand(2, 3, 16, 16))

    expect(feature_regularization_loss(trace).item()).to(equal(0.0))


def test_feature_regularization_loss_with_an_empty_sequence() -> None:
    expect(lambda: feature_regularization_loss([])).to(raise_error(ShapeError))
