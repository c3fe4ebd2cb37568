from pathlib import Path

import torch
from expects import be_true, contain, equal, expect, raise_error

from uwdehaze.checkpoint import HEADER, load_checkpoint, read_checkpoint, save_checkpoint
from uwdehaze.config import TrainConfig
from uwdehaze.errors import CheckpointError
from uwdehaze.networks import ArchitectureConfig
from uwdehaze.state import build_state


def saved(config: TrainConfig, path: Path) -> Path:
    state = build_state(config)
    state.step, state.epoch = 7, 2
    state.rng.integers(100, size=5)

    return save_checkpoint(state, path)


def test_load_checkpoint_with_a_freshly_saved_state(
    tmp_path: Path, tiny_config: TrainConfig
) -> None:
    original = build_state(tiny_config)
    original.step = 12
    save_checkpoint(original, tmp_path / "state.uwhdn")
    loaded = load_checkpoint(tmp_path / "state.uwhdn")

    expect(loaded.step).to(equal(12))
    expect(loaded.config).to(equal(tiny_config))

    for name, value in original.snapshot().items():
        expect(torch.equal(loaded.snapshot()[name], value)).to(be_true)

    expect(int(loaded.rng.integers(1 << 30))).to(equal(int(original.rng.integers(1 << 30))))


def test_load_checkpoint_with_a_matching_config(tmp_path: Path, tiny_config: TrainConfig) -> None:
    path = saved(tiny_config, tmp_path / "state.uwhdn")
    loaded = load_checkpoint(path, tiny_config)

    expect((loaded.step, loaded.epoch)).to(equal((7, 2)))


def test_load_checkpoint_with_another_architecture(
    tmp_path: Path, tiny_config: TrainConfig
) -> None:
    path = saved(tiny_config, tmp_path / "state.uwhdn")
    wider = TrainConfig(
        patch=16,
        architecture=ArchitectureConfig(base_width=16, residual_blocks=1, discriminator_width=8),
    )

    expect(lambda: load_checkpoint(path, wider)).to(
        raise_error(CheckpointError, contain("config hash mismatch"))
    )


def test_load_checkpoint_with_a_truncated_file(tmp_path: Path, tiny_config: TrainConfig) -> None:
    path = saved(tiny_config, tmp_path / "state.uwhdn")
    path.write_bytes(path.read_bytes()[:-10])

    expect(lambda: load_checkpoint(path)).to(raise_error(CheckpointError, contain("truncated")))


def test_load_checkpoint_with_only_part_of_the_header(tmp_path: Path) -> None:
    path = tmp_path / "short.uwhdn"
    path.write_bytes(b"UWHDN\x01")

    expect(lambda: load_checkpoint(path)).to(raise_error(CheckpointError, contain("truncated")))


def test_load_checkpoint_with_a_flipped_payload_byte(
    tmp_path: Path, tiny_config: TrainConfig
) -> None:
    path = saved(tiny_config, tmp_path / "state.uwhdn")
    data = bytearray(path.read_bytes())
    data[HEADER.size + 20] ^= 0xFF
    path.write_bytes(bytes(data))

    expect(lambda: load_checkpoint(path)).to(raise_error(CheckpointError, contain("digest")))


def test_load_checkpoint_with_a_foreign_file(tmp_path: Path) -> None:
    path = tmp_path / "other.bin"
    path.write_bytes(b"PK\x03\x04" + bytes(200))

    expect(lambda: load_checkpoint(path)).to(raise_error(CheckpointError, contain("magic")))


def test_load_checkpoint_with_a_missing_file(tmp_path: Path) -> None:
    expect(lambda: load_checkpoint(tmp_path / "absent.uwhdn")).to(raise_error(CheckpointError))


def test_read_checkpoint_lists_every_section(tmp_path: Path, tiny_config: TrainConfig) -> None:
    contents = read_checkpoint(saved(tiny_config, tmp_path / "state.uwhdn"))

    expect(list(contents)).to(
        equal(
            [
                "architecture",
                "config",
                "hdn",
                "restoration",
                "generator_optimizer",
                "discriminator_optimizer",
                "counters",
                "rng",
            ]
        )
    )
