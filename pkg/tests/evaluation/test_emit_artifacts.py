from pathlib import Path

from expects import be_false, be_true, contain, equal, expect
from PIL import Image

from uwdehaze.artifacts import emit_artifacts
from uwdehaze.config import TrainConfig
from uwdehaze.datasets import InMemoryImages, unpaired_split
from uwdehaze.evaluation import evaluate
from uwdehaze.state import build_state
from uwdehaze.training import LossTrace, train


def test_emit_artifacts_with_an_empty_trace(tmp_path: Path) -> None:
    written = emit_artifacts(LossTrace(), None, tmp_path)

    expect([path.name for path in written]).to(equal(["summary.txt"]))
    expect((tmp_path / "loss_curves.png").exists()).to(be_false)
    expect((tmp_path / "summary.txt").read_text()).to(contain("curves not drawn"))


def test_emit_artifacts_with_a_trace_and_a_report(
    tmp_path: Path, tiny_config: TrainConfig, pairs: InMemoryImages
) -> None:
    result = train(tiny_config, unpaired_split(pairs, seed=0), pairs)
    report = evaluate(result.state, pairs, keep_samples=4)
    written = emit_artifacts(result.trace, report, tmp_path)

    expect([path.name for path in written]).to(
        equal(["loss_curves.png", "comparison_grid.png", "summary.txt"])
    )

    with Image.open(tmp_path / "comparison_grid.png") as grid:
        # 4 rows and 5 columns of 32 pixel tiles with 2 pixel padding
        expect(grid.size).to(equal((5 * 34 + 2, 4 * 34 + 2)))

    expect((tmp_path / "summary.txt").read_text()).to(contain("evaluated images: 8"))


def test_emit_artifacts_with_an_untrained_report(
    tmp_path: Path, tiny_config: TrainConfig, pairs: InMemoryImages
) -> None:
    report = evaluate(build_state(tiny_config), pairs, keep_samples=0)
    written = emit_artifacts(LossTrace(), report, tmp_path)

    expect((tmp_path / "comparison_grid.png").exists()).to(be_false)
    expect(all(path.is_file() for path in written)).to(be_true)
