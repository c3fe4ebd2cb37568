from pathlib import Path

import pytest

from uwdehaze.checkpoint import save_checkpoint
from uwdehaze.cli import main
from uwdehaze.config import TrainConfig
from uwdehaze.state import build_state


@pytest.fixture
def tiny_flags() -> list[str]:
    return [
        "--base-width", "8",
        "--residual-blocks", "1",
        "--discriminator-width", "8",
        "--patch", "16",
        "--batch", "2",
        "--no-progress",
    ]  # fmt: skip


@pytest.fixture
def checkpoint(tmp_path: Path, tiny_config: TrainConfig) -> Path:
    return save_checkpoint(build_state(tiny_config), tmp_path / "fresh.uwhdn")


@pytest.fixture
def prepared(tmp_path: Path, dataset_root: Path) -> Path:
    out = tmp_path / "prepared"
    main(["prepare-data", "--root", str(dataset_root), "--kind", "synthetic", "--out", str(out)])

    return out
