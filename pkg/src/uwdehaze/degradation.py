"""
Synthetic underwater degradation, used to build self-contained paired datasets.

A clean image J is degraded per pixel and channel as

    I_c = J_c · t · a_c + B_c · (1 − t)

where t is a smooth transmission map, a_c a per-channel attenuation (red strongest) and B_c
the veiling background colour.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from uwdehaze.datasets import DatasetKind, InMemoryImages
from uwdehaze.identity import is_image
from uwdehaze.images import save_image

logger = logging.getLogger(__name__)

type Triplet = tuple[float, float, float]


@dataclass(frozen=True)
class DegradationParams:
    attenuation: Triplet
    background: Triplet
    transmission_smoothness: float = 16.0
    seed: int = 0
    transmission_range: tuple[float, float] = (0.2, 1.0)

    def __post_init__(self) -> None:
        if len(self.attenuation) != 3 or not all(0.0 < a <= 1.0 for a in self.attenuation):
            raise ValueError(
                f'The provided "attenuation" must be 3 values in (0, 1], got {self.attenuation}.'
            )

        red, green, blue = self.attenuation

        if red > green or red > blue:
            raise ValueError(
                f'The red "attenuation" must not exceed green or blue, got {self.attenuation}.'
            )

        if len(self.background) != 3 or not all(0.0 <= b <= 1.0 for b in self.background):
            raise ValueError(
                f'The provided "background" must be 3 values in [0, 1], got {self.background}.'
            )

        if not self.transmission_smoothness > 0.0:
            raise ValueError(
                f'The provided "transmission_smoothness" must be positive, got {self.transmission_smoothness}.'
            )

        low, high = self.transmission_range

        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(
                f'The provided "transmission_range" must satisfy 0 <= low <= high <= 1, got {self.transmission_range}.'
            )


def transmission_map(
    height: int,
    width: int,
    smoothness: float,
    rng: np.random.Generator,
    low: float = 0.2,
    high: float = 1.0,
) -> torch.Tensor:
    """
    Draw uniform noise in [low, high] on a coarse grid with cells of roughly `smoothness`
    pixels and upsample it bilinearly to height×width. Bilinear weights are convex, so the
    map stays inside [low, high].

    :return: An H×W float32 map.
    :rtype: torch.Tensor
    """
    if low == high:
        return torch.full((height, width), low, dtype=torch.float32)

    rows = max(1, math.ceil(height / smoothness)) + 1
    columns = max(1, math.ceil(width / smoothness)) + 1
    noise = torch.from_numpy(rng.uniform(low, high, size=(rows, columns))).float()
    upsampled = F.interpolate(
        noise[None, None], size=(height, width), mode="bilinear", align_corners=True
    )

    return upsampled[0, 0].clamp(low, high)


def apply_degradation(
    clean: torch.Tensor, transmission: torch.Tensor, params: DegradationParams
) -> torch.Tensor:
    if not is_image(clean):
        raise ValueError(
            f'The provided "clean" image must be 3×H×W, got shape {tuple(clean.shape)}.'
        )

    attenuation = torch.tensor(params.attenuation, dtype=clean.dtype).view(3, 1, 1)
    background = torch.tensor(params.background, dtype=clean.dtype).view(3, 1, 1)
    transmission = transmission.to(clean.dtype)

    degraded = clean * transmission * attenuation + background * (1.0 - transmission)

    return degraded.clamp(0.0, 1.0)


def synthesize_underwater(
    clean: torch.Tensor,
    params: DegradationParams,
    rng: np.random.Generator | None = None,
) -> torch.Tensor:
    """
    Degrade a clean 3×H×W image with a freshly drawn transmission map.

    :param rng: Generator for the transmission map; defaults to one seeded with `params.seed`.
    :rtype: torch.Tensor
    """
    rng = np.random.default_rng(params.seed) if rng is None else rng
    low, high = params.transmission_range
    height, width = clean.shape[-2:]
    transmission = transmission_map(
        height, width, params.transmission_smoothness, rng, low, high
    )

    return apply_degradation(clean, transmission, params)


def random_degradation_params(rng: np.random.Generator) -> DegradationParams:
    attenuation = (
        float(rng.uniform(0.2, 0.5)),
        float(rng.uniform(0.6, 0.9)),
        float(rng.uniform(0.7, 1.0)),
    )
    background = (
        float(rng.uniform(0.0, 0.15)),
        float(rng.uniform(0.3, 0.6)),
        float(rng.uniform(0.4, 0.7)),
    )

    return DegradationParams(
        attenuation=attenuation,
        background=background,
        transmission_smoothness=float(rng.uniform(8.0, 32.0)),
        seed=int(rng.integers(2**31)),
    )


def synthetic_scene(size: int, rng: np.random.Generator) -> torch.Tensor:
    """
    Paint a size×size clean scene: a two-colour linear gradient in a random direction with a
    handful of filled rectangles and discs on top.
    """
    coordinates = torch.linspace(0.0, 1.0, size)
    y, x = torch.meshgrid(coordinates, coordinates, indexing="ij")
    angle = rng.uniform(0.0, 2.0 * math.pi)
    ramp = (math.cos(angle) * x + math.sin(angle) * y).sub(-1.0).div(2.0).clamp(0.0, 1.0)
    start = torch.from_numpy(rng.uniform(0.1, 0.9, size=3)).float().view(3, 1, 1)
    end = torch.from_numpy(rng.uniform(0.1, 0.9, size=3)).float().view(3, 1, 1)
    scene = start * (1.0 - ramp) + end * ramp

    for _ in range(int(rng.integers(3, 7))):
        colour = torch.from_numpy(rng.uniform(0.0, 1.0, size=3)).float().view(3, 1, 1)
        cx, cy = rng.uniform(0.0, 1.0, size=2)
        extent = rng.uniform(0.05, 0.3)

        if rng.uniform() < 0.5:
            mask = ((x - cx).abs() <= extent) & ((y - cy).abs() <= extent * rng.uniform(0.5, 1.5))
        else:
            mask = (x - cx) ** 2 + (y - cy) ** 2 <= extent**2

        scene = torch.where(mask, colour, scene)

    return scene.clamp(0.0, 1.0).contiguous()


def synthesize_pairs(count: int, size: int, seed: int) -> InMemoryImages:
    """
    Generate `count` paired clean/underwater scenes of size×size, each degraded with its own
    random parameters. Ids are `syn-00000`, `syn-00001`, ...

    :rtype: InMemoryImages
    """
    if count < 1 or size < 1:
        raise ValueError(
            f'The provided "count" and "size" must be positive, got {count} and {size}.'
        )

    rng = np.random.default_rng(seed)
    underwater: dict[str, torch.Tensor] = {}
    clean: dict[str, torch.Tensor] = {}

    for index in range(count):
        record_id = f"syn-{index:05d}"
        scene = synthetic_scene(size, rng)
        params = random_degradation_params(rng)
        clean[record_id] = scene
        underwater[record_id] = synthesize_underwater(scene, params, rng)

    return InMemoryImages(underwater, clean, DatasetKind.SYNTHETIC)


def write_paired_dataset(images: InMemoryImages, root: Path | str) -> Path:
    """
    Write paired images as `root/underwater/<id>.png` and `root/clean/<id>.png`, the layout
    `build_manifest` reads.
    """
    root = Path(root)

    for record_id in images.ids():
        save_image(images.underwater(record_id), root / "underwater" / f"{record_id}.png")
        save_image(images.clean(record_id), root / "clean" / f"{record_id}.png")

    logger.info("Wrote %d synthetic pairs to %s", len(images), root)

    return root
