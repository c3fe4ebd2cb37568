from pathlib import Path

import pytest
from expects import contain, equal, expect

from uwdehaze.cli import OUT_ENV, build_parser, main

SUBCOMMANDS = ["prepare-data", "train", "restore", "evaluate", "diagnose", "synthesize"]


def exit_code(argv: list[str]) -> int | str | None:
    with pytest.raises(SystemExit) as raised:
        main(argv)

    return raised.value.code


def test_main_with_help(capsys: pytest.CaptureFixture[str]) -> None:
    expect(exit_code(["--help"])).to(equal(0))

    usage = capsys.readouterr().out

    for name in SUBCOMMANDS:
        expect(usage).to(contain(name))


@pytest.mark.parametrize("subcommand", SUBCOMMANDS)
def test_main_with_subcommand_help(subcommand: str, capsys: pytest.CaptureFixture[str]) -> None:
    expect(exit_code([subcommand, "--help"])).to(equal(0))
    expect(capsys.readouterr().out).to(contain("--out"))


def test_main_train_help_with_defaults(capsys: pytest.CaptureFixture[str]) -> None:
    exit_code(["train", "--help"])
    usage = capsys.readouterr().out

    for default in ("default: 128", "default: 4", "default: 0.0005", "default: 80"):
        expect(usage).to(contain(default))


def test_main_with_an_unknown_flag() -> None:
    expect(exit_code(["restore", "--checkpoint", "c", "--input", "i", "--colour"])).to(equal(2))


def test_build_parser_with_the_output_variable(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "elsewhere"))
    args = build_parser().parse_args(["diagnose", "--checkpoint", "c", "--manifest", "m"])

    expect(args.out).to(equal(tmp_path / "elsewhere"))


def test_main_train_help_with_every_flag_explained(capsys: pytest.CaptureFixture[str]) -> None:
    exit_code(["train", "--help"])
    usage = " ".join(capsys.readouterr().out.split())

    expect(usage).to(contain("log at DEBUG level (default: False)"))
    expect(usage).to(contain("YAML config file (default: None)"))
    expect(usage).to(contain("split.json (required)"))
    expect(usage).to(contain("checkpoint to continue training from (default: None)"))
