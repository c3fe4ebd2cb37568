import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import torch
import torch.nn.functional as F
from torchvision.utils import make_grid, save_image

from uwdehaze.evaluation import MetricReport
from uwdehaze.training import LOSS_SERIES, LossTrace

logger = logging.getLogger(__name__)

GRID_COLUMNS: tuple[str, ...] = ("underwater", "haze", "content", "restored", "reference")


def plot_loss_curves(trace: LossTrace, path: Path) -> Path:
    """One figure, one line per logged loss series, step on the x axis and a log-scaled y axis."""
    steps = trace.series("step")
    figure, axes = plt.subplots(figsize=(12, 6))

    for name in LOSS_SERIES:
        axes.plot(steps, trace.series(name), label=name, linewidth=1.0)

    axes.set_xlabel("step")
    axes.set_ylabel("loss")
    axes.set_yscale("symlog", linthresh=1e-3)
    axes.set_title("Training losses")
    axes.legend(loc="upper right", fontsize="small", ncols=2)
    figure.tight_layout()
    figure.savefig(path, dpi=100)
    plt.close(figure)

    return path


def comparison_grid(report: MetricReport, path: Path) -> Path:
    """
    Save one row per kept sample with the columns underwater, haze, content, restored and
    reference. Every tile is resized to the size of the first sample.
    """
    size = tuple(report.samples[0].underwater.shape[-2:])
    tiles: list[torch.Tensor] = []

    for sample in report.samples:
        for name in GRID_COLUMNS:
            tile = getattr(sample, name).detach().cpu().float()

            if tuple(tile.shape[-2:]) != size:
                tile = F.interpolate(tile[None], size=size, mode="bilinear", align_corners=False)[0]

            tiles.append(tile.clamp(0.0, 1.0))

    save_image(make_grid(torch.stack(tiles), nrow=len(GRID_COLUMNS), padding=2), path)

    return path


def _summary_lines(trace: LossTrace, report: MetricReport | None) -> list[str]:
    lines = [f"training steps logged: {len(trace)}"]

    if trace:
        last = trace[-1]
        lines.append(f"final step: {last.step}")
        lines.extend(f"final {name}: {getattr(last, name):.6f}" for name in LOSS_SERIES)
    else:
        lines.append("no loss trace; curves not drawn")

    if report is None:
        lines.append("no evaluation report")

        return lines

    lines.append(f"evaluated images: {report.count}")
    lines.append(f"skipped (no reference): {len(report.skipped)}")
    lines.append(f"identical outputs (infinite PSNR): {report.infinite_psnr_count}")

    for name in ("psnr_db", "ssim", "input_psnr_db", "input_ssim"):
        mean, std = report.mean(name), report.std(name)
        lines.append(
            f"{name}: n/a" if mean is None else f"{name}: mean {mean:.4f} std {std:.4f}"
        )

    return lines


def emit_artifacts(
    trace: LossTrace, report: MetricReport | None, out_dir: Path | str
) -> list[Path]:
    """
    Write ``loss_curves.png`` (when the trace has records), ``comparison_grid.png`` (when the
    report kept samples) and ``summary.txt`` into `out_dir`.

    :return: The paths written, in that order.
    :rtype: list[Path]
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if trace:
        written.append(plot_loss_curves(trace, out_dir / "loss_curves.png"))

    if report is not None and report.samples:
        written.append(comparison_grid(report, out_dir / "comparison_grid.png"))

    summary = out_dir / "summary.txt"
    summary.write_text("\n".join(_summary_lines(trace, report)) + "\n", encoding="utf-8")
    written.append(summary)
    logger.info("Wrote %s", ", ".join(path.name for path in written))

    return written
