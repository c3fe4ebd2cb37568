from pathlib import Path

from expects import be_true, equal, expect

from uwdehaze.cli import EXIT_INVALID, EXIT_OK, main


def restore(checkpoint: Path, source: Path, out: Path) -> int:
    return main(
        ["restore", "--checkpoint", str(checkpoint), "--input", str(source), "--out", str(out)]
    )


def test_main_restore_with_a_fresh_checkpoint(
    tmp_path: Path, checkpoint: Path, dataset_root: Path
) -> None:
    out = tmp_path / "restored"

    expect(restore(checkpoint, dataset_root / "underwater", out)).to(equal(EXIT_OK))
    expect(len(list(out.glob("*_restored.png")))).to(equal(4))
    expect(len(list(out.glob("*_haze.png")))).to(equal(4))

    content = (out / "syn-00000_content.png").read_bytes()

    expect(content == (out / "syn-00000_restored.png").read_bytes()).to(be_true)


def test_main_restore_with_an_unreadable_file(
    tmp_path: Path, checkpoint: Path, dataset_root: Path
) -> None:
    inputs = tmp_path / "inputs"
    inputs.mkdir()
    (inputs / "good.png").write_bytes((dataset_root / "underwater" / "syn-00000.png").read_bytes())
    (inputs / "broken.png").write_bytes(b"not a png")
    out = tmp_path / "restored"

    expect(restore(checkpoint, inputs, out)).to(equal(EXIT_INVALID))
    expect((out / "good_restored.png").is_file()).to(be_true)


def test_main_restore_with_a_missing_checkpoint(tmp_path: Path, dataset_root: Path) -> None:
    expect(restore(tmp_path / "absent.uwhdn", dataset_root, tmp_path / "restored")).to(
        equal(EXIT_INVALID)
    )
