"""
Held-out evaluation: test-time restoration, full-reference metrics per image and their
aggregates, and a diagnostic of how strongly the haze encoder responds to each domain.
"""

import csv
import json
import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
import torch.nn.functional as F

from uwdehaze.checkpoint import load_checkpoint
from uwdehaze.config import MIN_PATCH
from uwdehaze.datasets import DatasetManifest, InMemoryImages, ManifestImages
from uwdehaze.errors import ManifestError, ShapeError
from uwdehaze.hdn import HazeDisentanglementNetwork
from uwdehaze.identity import is_image
from uwdehaze.metrics import SSIM_WINDOW, mean_absolute_error, psnr, ssim
from uwdehaze.restoration import RestorationNetwork
from uwdehaze.state import TrainState

logger = logging.getLogger(__name__)

type EvaluationSource = DatasetManifest | InMemoryImages
type CheckpointSource = TrainState | Path | str

METRIC_COLUMNS: tuple[str, ...] = (
    "id",
    "psnr_db",
    "ssim",
    "input_psnr_db",
    "input_ssim",
    "content_l1",
    "input_l1",
)


def _padding(size: int, factor: int) -> int:
    return max(MIN_PATCH, math.ceil(size / factor) * factor) - size


def _device_of(module: torch.nn.Module) -> tuple[torch.device, torch.dtype]:
    parameter = next(module.parameters())

    return parameter.device, parameter.dtype


def _padded_batch(hdn: HazeDisentanglementNetwork, image: torch.Tensor) -> torch.Tensor:
    if not is_image(image):
        raise ShapeError(f"Expected a 3×H×W image, got {tuple(image.shape)}.")

    height, width = image.shape[-2:]
    factor = hdn.architecture.downsampling_factor
    pad_bottom, pad_right = _padding(height, factor), _padding(width, factor)
    mode = "reflect" if pad_bottom < height and pad_right < width else "replicate"
    device, dtype = _device_of(hdn)
    batch = image.to(device=device, dtype=dtype)[None]

    if pad_bottom or pad_right:
        batch = F.pad(batch, (0, pad_right, 0, pad_bottom), mode=mode)

    return batch


def restore_image(
    hdn: HazeDisentanglementNetwork,
    restoration: RestorationNetwork,
    image: torch.Tensor,
) -> tuple[torch.Tensor, torch.Tensor]:
    """
    Restore one underwater image of any size: it is padded on the bottom and right to the
    downsampling multiple (at least 8 pixels a side), passed through the content decoder and
    the clean generator, clamped to [0, 1] and cropped back.

    :return: The content image and the restored image, both 3×H×W on the CPU.
    :rtype: tuple[torch.Tensor, torch.Tensor]
    :raises ShapeError: If `image` is not a 3×H×W tensor.
    """
    batch = _padded_batch(hdn, image)
    height, width = image.shape[-2:]

    hdn.eval()
    restoration.eval()

    with torch.no_grad():
        content = hdn.content_image(batch).clamp(0.0, 1.0)
        restored = restoration.restore(content, clamp=True)

    return (
        content[0, :, :height, :width].cpu(),
        restored[0, :, :height, :width].cpu(),
    )


def separate_haze(hdn: HazeDisentanglementNetwork, image: torch.Tensor) -> torch.Tensor:
    """
    Render what the haze encoder extracted from one image of any size: its haze encoding is
    decoded on its own, with zero content, padded and cropped like `restore_image`.

    :return: The haze image, 3×H×W in [0, 1] on the CPU.
    :raises ShapeError: If `image` is not a 3×H×W tensor.
    """
    batch = _padded_batch(hdn, image)
    height, width = image.shape[-2:]
    hdn.eval()

    with torch.no_grad():
        haze = hdn.haze_image(batch)

    return haze[0, :, :height, :width].clamp(0.0, 1.0).cpu()


@dataclass(frozen=True)
class ImageMetrics:
    id: str
    psnr_db: float
    ssim: float
    input_psnr_db: float
    input_ssim: float
    content_l1: float
    input_l1: float

    def to_row(self) -> list[str]:
        values = [getattr(self, name) for name in METRIC_COLUMNS[1:]]

        return [self.id, *("inf" if math.isinf(value) else repr(value) for value in values)]


@dataclass(frozen=True)
class EvaluationSample:
    id: str
    underwater: torch.Tensor
    haze: torch.Tensor
    content: torch.Tensor
    restored: torch.Tensor
    reference: torch.Tensor


def _finite_stats(values: Iterable[float]) -> tuple[float | None, float | None]:
    finite = np.array([value for value in values if math.isfinite(value)], dtype=np.float64)

    if finite.size == 0:
        return None, None

    return float(finite.mean()), float(finite.std())


@dataclass(frozen=True)
class MetricReport:
    """
    Per-image metrics ordered by id. Aggregates leave out infinite PSNR values (identical
    images) and report how many there were.
    """

    rows: tuple[ImageMetrics, ...]
    skipped: tuple[str, ...] = ()
    samples: tuple[EvaluationSample, ...] = field(default=(), repr=False)

    @property
    def count(self) -> int:
        return len(self.rows)

    @property
    def infinite_psnr_count(self) -> int:
        return sum(1 for row in self.rows if math.isinf(row.psnr_db))

    def mean(self, name: str) -> float | None:
        return _finite_stats(getattr(row, name) for row in self.rows)[0]

    def std(self, name: str) -> float | None:
        return _finite_stats(getattr(row, name) for row in self.rows)[1]

    def summary(self) -> dict[str, Any]:
        summary: dict[str, Any] = {
            "count": self.count,
            "infinite_psnr_count": self.infinite_psnr_count,
            "skipped": len(self.skipped),
            "skipped_ids": list(self.skipped),
        }

        for name in METRIC_COLUMNS[1:]:
            summary[f"mean_{name}"] = self.mean(name)
            summary[f"std_{name}"] = self.std(name)

        return summary

    def write(self, out_dir: Path | str) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = out_dir / "metrics.csv"
        summary_path = out_dir / "summary.json"

        with metrics_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(METRIC_COLUMNS)
            writer.writerows(row.to_row() for row in self.rows)

        summary_path.write_text(json.dumps(self.summary(), indent=2) + "\n", encoding="utf-8")
        logger.info("Wrote %d metric rows to %s", self.count, metrics_path)

        return metrics_path, summary_path


@dataclass(frozen=True)
class DisentanglementDiagnostics:
    """
    Mean absolute haze-encoding response on clean and on underwater images. A well
    disentangled model responds far less to clean images, so `ratio` (clean over underwater)
    falls well below 1. The ratio is NaN and `ratio_defined` is False when the underwater
    response is zero.
    """

    mean_abs_haze_response_clean: float
    mean_abs_haze_response_underwater: float
    ratio: float
    ratio_defined: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_abs_haze_response_clean": self.mean_abs_haze_response_clean,
            "mean_abs_haze_response_underwater": self.mean_abs_haze_response_underwater,
            "ratio": self.ratio if self.ratio_defined else None,
            "ratio_defined": self.ratio_defined,
        }


def _as_images(source: EvaluationSource) -> InMemoryImages | ManifestImages:
    return ManifestImages(source) if isinstance(source, DatasetManifest) else source


def _has_reference(source: EvaluationSource, record_id: str) -> bool:
    if isinstance(source, DatasetManifest):
        return source.get(record_id).clean_path is not None

    return True


def _networks(
    checkpoint: CheckpointSource,
) -> tuple[HazeDisentanglementNetwork, RestorationNetwork]:
    state = checkpoint if isinstance(checkpoint, TrainState) else load_checkpoint(checkpoint)

    return state.hdn, state.restoration


def _haze_response(hdn: HazeDisentanglementNetwork, image: torch.Tensor) -> float:
    factor = hdn.architecture.downsampling_factor
    height, width = image.shape[-2:]
    pad_bottom, pad_right = _padding(height, factor), _padding(width, factor)
    device, dtype = _device_of(hdn)
    batch = image.to(device=device, dtype=dtype)[None]

    if pad_bottom or pad_right:
        batch = F.pad(batch, (0, pad_right, 0, pad_bottom), mode="replicate")

    return float(hdn.encode_haze(batch).final.abs().mean())


def disentanglement_diagnostics(
    checkpoint: CheckpointSource, source: EvaluationSource
) -> DisentanglementDiagnostics:
    """
    Measure the haze encoder on every record that has both images.

    :raises ManifestError: If no record carries a clean image.
    """
    hdn, _ = _networks(checkpoint)
    images = _as_images(source)
    record_ids = [record_id for record_id in images.ids() if _has_reference(source, record_id)]

    if not record_ids:
        raise ManifestError("Diagnostics need at least one record with a clean image.")

    hdn.eval()

    with torch.no_grad():
        clean = float(np.mean([_haze_response(hdn, images.clean(i)) for i in record_ids]))
        underwater = float(
            np.mean([_haze_response(hdn, images.underwater(i)) for i in record_ids])
        )

    defined = underwater > 0.0
    diagnostics = DisentanglementDiagnostics(
        mean_abs_haze_response_clean=clean,
        mean_abs_haze_response_underwater=underwater,
        ratio=clean / underwater if defined else math.nan,
        ratio_defined=defined,
    )
    logger.info(
        "Haze response clean %.6f underwater %.6f ratio %s",
        clean,
        underwater,
        f"{diagnostics.ratio:.4f}" if defined else "undefined",
    )

    return diagnostics


def evaluate(
    checkpoint: CheckpointSource,
    source: EvaluationSource,
    keep_samples: int = 4,
) -> MetricReport:
    """
    Restore every underwater test image and score it against its clean reference. Records
    without a readable reference, and images smaller than the SSIM window, are skipped and
    listed in the report. The report does not depend on the order of `source`.

    :param keep_samples: How many (lowest-id) images to keep for comparison grids.
    :rtype: MetricReport
    """
    hdn, restoration = _networks(checkpoint)
    images = _as_images(source)
    rows: list[ImageMetrics] = []
    skipped: list[str] = []
    samples: list[EvaluationSample] = []

    for record_id in sorted(images.ids()):
        if not _has_reference(source, record_id):
            logger.warning('Skipping "%s": no clean reference', record_id)
            skipped.append(record_id)
            continue

        try:
            underwater = images.underwater(record_id)
            reference = images.clean(record_id)
        except ManifestError as error:
            logger.warning('Skipping "%s": %s', record_id, error)
            skipped.append(record_id)
            continue

        if underwater.shape != reference.shape:
            raise ShapeError(
                f'The images of record "{record_id}" differ in shape: '
                f"{tuple(underwater.shape)} vs {tuple(reference.shape)}."
            )

        if min(underwater.shape[-2:]) < SSIM_WINDOW:
            logger.warning(
                'Skipping "%s": %d×%d is smaller than the %d-pixel SSIM window',
                record_id,
                *underwater.shape[-2:],
                SSIM_WINDOW,
            )
            skipped.append(record_id)
            continue

        content, restored = restore_image(hdn, restoration, underwater)
        rows.append(
            ImageMetrics(
                id=record_id,
                psnr_db=psnr(restored, reference),
                ssim=ssim(restored, reference),
                input_psnr_db=psnr(underwater, reference),
                input_ssim=ssim(underwater, reference),
                content_l1=mean_absolute_error(content, reference),
                input_l1=mean_absolute_error(underwater, reference),
            )
        )

        if len(samples) < keep_samples:
            haze = separate_haze(hdn, underwater)
            samples.append(
                EvaluationSample(record_id, underwater, haze, content, restored, reference)
            )

    report = MetricReport(tuple(rows), tuple(skipped), tuple(samples))
    logger.info(
        "Evaluated %d images (%d skipped): mean PSNR %s dB, mean SSIM %s",
        report.count,
        len(skipped),
        report.mean("psnr_db"),
        report.mean("ssim"),
    )

    return report
