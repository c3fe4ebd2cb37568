import json
import logging
import math
from collections import OrderedDict
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any, Protocol, Self, overload

import numpy as np
import torch
import torch.nn.functional as F

from uwdehaze.errors import ManifestError, SplitError
from uwdehaze.images import is_image_file, load_image

logger = logging.getLogger(__name__)

DEFAULT_CACHE_SIZE = 256


class DatasetKind(StrEnum):
    UFO120 = "ufo120"
    UWNET = "uwnet"
    UWSCENES = "uwscenes"
    UIEB = "uieb"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, slots=True)
class ManifestRecord:
    id: str
    underwater_path: Path
    clean_path: Path | None

    def to_dict(self) -> dict[str, str | None]:
        return {
            "id": self.id,
            "underwater_path": str(self.underwater_path),
            "clean_path": None if self.clean_path is None else str(self.clean_path),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Self:
        try:
            clean_path = data.get("clean_path")

            return cls(
                id=str(data["id"]),
                underwater_path=Path(data["underwater_path"]),
                clean_path=None if clean_path is None else Path(clean_path),
            )
        except KeyError as error:
            raise ManifestError(
                f"Manifest record is missing the {error} field."
            ) from error


class IdSource(Protocol):
    def ids(self) -> tuple[str, ...]: ...


class ImageSource(Protocol):
    def underwater(self, record_id: str) -> torch.Tensor: ...

    def clean(self, record_id: str) -> torch.Tensor: ...


class DatasetManifest(Sequence[ManifestRecord]):
    """
    An immutable, id-ordered collection of paired dataset records.

    >>> manifest = DatasetManifest([ManifestRecord("b", Path("u/b.png"), Path("c/b.png")),
    ...                             ManifestRecord("a", Path("u/a.png"), Path("c/a.png"))])
    >>> manifest.ids()
    ('a', 'b')
    """

    __slots__ = ("_index", "_kind", "_records")

    def __init__(
        self,
        records: Iterable[ManifestRecord],
        kind: DatasetKind = DatasetKind.SYNTHETIC,
    ) -> None:
        ordered = tuple(sorted(records, key=lambda record: record.id))

        if not ordered:
            raise ManifestError("The manifest has no records.")

        index: dict[str, ManifestRecord] = {}

        for record in ordered:
            if record.id in index:
                raise ManifestError(f'The manifest id "{record.id}" is not unique.')

            index[record.id] = record

        self._records: tuple[ManifestRecord, ...] = ordered
        self._index: dict[str, ManifestRecord] = index
        self._kind: DatasetKind = DatasetKind(kind)

    @overload
    def __getitem__(self, item: int) -> ManifestRecord: ...

    @overload
    def __getitem__(self, item: slice) -> tuple[ManifestRecord, ...]: ...

    def __getitem__(
        self, item: int | slice
    ) -> ManifestRecord | tuple[ManifestRecord, ...]:
        return self._records[item]

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[ManifestRecord]:
        return iter(self._records)

    def __contains__(self, item: object) -> bool:
        if isinstance(item, str):
            return item in self._index

        return item in self._records

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, DatasetManifest):
            return NotImplemented

        return self._kind == other._kind and self._records == other._records

    def __repr__(self) -> str:
        return f"DatasetManifest(kind={self._kind.value!r}, records={len(self)})"

    @property
    def kind(self) -> DatasetKind:
        return self._kind

    def ids(self) -> tuple[str, ...]:
        return tuple(self._index)

    def get(self, record_id: str) -> ManifestRecord:
        try:
            return self._index[record_id]
        except KeyError:
            raise ManifestError(
                f'The id "{record_id}" is not in the manifest.'
            ) from None

    def subset(self, record_ids: Iterable[str]) -> "DatasetManifest":
        return DatasetManifest((self.get(record_id) for record_id in record_ids), self._kind)

    def to_jsonl(self) -> str:
        """
        Serialize the manifest as one JSON object per line, ordered by id.

        :return: The line-delimited manifest text, terminated by a newline.
        :rtype: str
        """
        lines = (
            json.dumps({**record.to_dict(), "kind": self._kind.value})
            for record in self._records
        )

        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Self:
        records: list[ManifestRecord] = []
        kinds: set[str] = set()

        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue

            try:
                data = json.loads(line)
            except json.JSONDecodeError as error:
                raise ManifestError(
                    f"Manifest line {number} is not valid JSON: {error.msg}."
                ) from error

            kinds.add(data.get("kind", DatasetKind.SYNTHETIC.value))
            records.append(ManifestRecord.from_dict(data))

        if len(kinds) > 1:
            raise ManifestError(
                f"The manifest mixes dataset kinds: {', '.join(sorted(kinds))}."
            )

        kind = DatasetKind(kinds.pop()) if kinds else DatasetKind.SYNTHETIC

        return cls(records, kind)

    def save(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")

        return path

    @classmethod
    def load(cls, path: Path | str) -> Self:
        path = Path(path)

        if not path.is_file():
            raise ManifestError(f'The manifest file "{path}" does not exist.')

        return cls.from_jsonl(path.read_text(encoding="utf-8"))


def _images_by_stem(directory: Path) -> dict[str, Path]:
    found: dict[str, Path] = {}

    for path in sorted(directory.iterdir()):
        if not is_image_file(path):
            continue

        if path.stem in found:
            raise ManifestError(
                f'The image id "{path.stem}" appears twice in "{directory}".'
            )

        found[path.stem] = path

    return found


def build_manifest(
    root: Path | str, kind: DatasetKind | str, verify_images: bool = True
) -> DatasetManifest:
    """
    Build a manifest from a dataset root holding `underwater/` and `clean/` directories whose
    images are matched by file name (without suffix).

    :param root: The dataset root directory.
    :param kind: Which public dataset (or the synthetic generator) the root holds.
    :param verify_images: Decode every file to confirm it is a readable image.
    :return: One record per matched pair, ordered by id.
    :rtype: DatasetManifest
    :raises ManifestError: If a directory is missing, a file is unmatched or undecodable, or
        there are no records.
    """
    root = Path(root)
    kind = DatasetKind(kind)
    underwater_dir = root / "underwater"
    clean_dir = root / "clean"

    for directory in (root, underwater_dir, clean_dir):
        if not directory.is_dir():
            raise ManifestError(f'The dataset directory "{directory}" does not exist.')

    underwater = _images_by_stem(underwater_dir)
    clean = _images_by_stem(clean_dir)

    if missing_clean := sorted(set(underwater) - set(clean)):
        raise ManifestError(
            f"No clean image matches the underwater id(s): {', '.join(missing_clean)}."
        )

    if missing_underwater := sorted(set(clean) - set(underwater)):
        raise ManifestError(
            f"No underwater image matches the clean id(s): {', '.join(missing_underwater)}."
        )

    if not underwater:
        raise ManifestError(f'The dataset root "{root}" has no records.')

    if verify_images:
        for record_id in sorted(underwater):
            load_image(underwater[record_id])
            load_image(clean[record_id])

    manifest = DatasetManifest(
        (
            ManifestRecord(record_id, underwater[record_id], clean[record_id])
            for record_id in underwater
        ),
        kind,
    )
    logger.info("Built %s manifest with %d records from %s", kind.value, len(manifest), root)

    return manifest


def holdout_split(
    manifest: DatasetManifest, train_count: int, seed: int
) -> tuple[DatasetManifest, DatasetManifest]:
    """
    Randomly pick `train_count` records for training and keep the rest for testing, for
    datasets that ship without a train/test split.

    :return: The training and the testing manifests.
    :rtype: tuple[DatasetManifest, DatasetManifest]
    """
    if not 0 < train_count < len(manifest):
        raise SplitError(
            f'The provided "train_count" must be between 1 and {len(manifest) - 1}, got {train_count}.'
        )

    ids = manifest.ids()
    chosen = np.random.default_rng(seed).choice(len(ids), size=train_count, replace=False)
    train_ids = {ids[index] for index in chosen}

    return (
        manifest.subset(record_id for record_id in ids if record_id in train_ids),
        manifest.subset(record_id for record_id in ids if record_id not in train_ids),
    )


@dataclass(frozen=True)
class UnpairedSplit:
    underwater_ids: frozenset[str]
    clean_ids: frozenset[str]
    seed: int

    def __post_init__(self) -> None:
        if overlap := self.underwater_ids & self.clean_ids:
            raise SplitError(
                f"The split sides overlap on id(s): {', '.join(sorted(overlap))}."
            )

    @property
    def total(self) -> int:
        return len(self.underwater_ids) + len(self.clean_ids)

    def verify(self, source: IdSource) -> None:
        """
        Re-check the split against the records it was drawn from.

        :raises SplitError: If an id is unknown or the side sizes break the half split.
        """
        ids = set(source.ids())

        if unknown := (self.underwater_ids | self.clean_ids) - ids:
            raise SplitError(
                f"The split names id(s) missing from the source: {', '.join(sorted(unknown))}."
            )

        if len(self.underwater_ids) != len(ids) // 2 or self.total != len(ids):
            raise SplitError(
                f"The split sizes {len(self.underwater_ids)}/{len(self.clean_ids)} do not "
                f"halve {len(ids)} records."
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "underwater_ids": sorted(self.underwater_ids),
            "clean_ids": sorted(self.clean_ids),
        }

    def save(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

        return path

    @classmethod
    def load(cls, path: Path | str) -> Self:
        path = Path(path)

        try:
            data = json.loads(path.read_text(encoding="utf-8"))

            return cls(
                underwater_ids=frozenset(data["underwater_ids"]),
                clean_ids=frozenset(data["clean_ids"]),
                seed=int(data["seed"]),
            )
        except FileNotFoundError as error:
            raise SplitError(f'The split file "{path}" does not exist.') from error
        except (json.JSONDecodeError, KeyError, TypeError) as error:
            raise SplitError(f'The split file "{path}" is malformed: {error}') from error


def unpaired_split(source: IdSource, seed: int) -> UnpairedSplit:
    """
    Select half of the records (rounded down) as the underwater side and keep the clean
    images of the remaining records, so that no record contributes both of its versions.

    >>> split = unpaired_split(manifest_of_four_records, seed=0)
    >>> len(split.underwater_ids), len(split.clean_ids)
    (2, 2)

    :param source: A manifest (or any object listing record ids).
    :param seed: Seed of the uniform selection; the same seed reproduces the same split.
    :rtype: UnpairedSplit
    :raises SplitError: If fewer than two records are available.
    """
    ids = tuple(sorted(source.ids()))

    if len(ids) < 2:
        raise SplitError(
            f"At least 2 records are needed to form both split sides, got {len(ids)}."
        )

    chosen = np.random.default_rng(seed).choice(len(ids), size=len(ids) // 2, replace=False)
    underwater_ids = frozenset(ids[index] for index in chosen)

    return UnpairedSplit(
        underwater_ids=underwater_ids,
        clean_ids=frozenset(ids) - underwater_ids,
        seed=seed,
    )


class ManifestImages:
    """
    Decode manifest images on first use. The `cache_size` most recently used images are kept
    for later requests; the least recently used one is dropped first.
    """

    __slots__ = ("_cache", "_cache_size", "_manifest")

    def __init__(self, manifest: DatasetManifest, cache_size: int = DEFAULT_CACHE_SIZE) -> None:
        if cache_size < 0:
            raise ValueError(f'The provided "cache_size" must not be negative, got {cache_size}.')

        self._manifest = manifest
        self._cache_size = cache_size
        self._cache: OrderedDict[tuple[str, str], torch.Tensor] = OrderedDict()

    @property
    def cached(self) -> int:
        return len(self._cache)

    def ids(self) -> tuple[str, ...]:
        return self._manifest.ids()

    def underwater(self, record_id: str) -> torch.Tensor:
        return self._load("underwater", self._manifest.get(record_id).underwater_path, record_id)

    def clean(self, record_id: str) -> torch.Tensor:
        clean_path = self._manifest.get(record_id).clean_path

        if clean_path is None:
            raise ManifestError(f'The record "{record_id}" has no clean reference.')

        return self._load("clean", clean_path, record_id)

    def _load(self, side: str, path: Path, record_id: str) -> torch.Tensor:
        key = (side, record_id)

        if key in self._cache:
            self._cache.move_to_end(key)

            return self._cache[key]

        image = load_image(path)

        if self._cache_size:
            self._cache[key] = image

            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)

        return image


@dataclass(frozen=True)
class InMemoryImages:
    """Paired images already decoded into 3×H×W tensors, keyed by record id."""

    underwater_images: dict[str, torch.Tensor]
    clean_images: dict[str, torch.Tensor]
    kind: DatasetKind = field(default=DatasetKind.SYNTHETIC)

    def __post_init__(self) -> None:
        if set(self.underwater_images) != set(self.clean_images):
            raise ManifestError("Every in-memory record needs both images.")

        if not self.underwater_images:
            raise ManifestError("The in-memory image set has no records.")

    def __len__(self) -> int:
        return len(self.underwater_images)

    def ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.underwater_images))

    def underwater(self, record_id: str) -> torch.Tensor:
        return self.underwater_images[record_id]

    def clean(self, record_id: str) -> torch.Tensor:
        return self.clean_images[record_id]

    def subset(self, record_ids: Iterable[str]) -> "InMemoryImages":
        record_ids = tuple(record_ids)

        return InMemoryImages(
            {record_id: self.underwater_images[record_id] for record_id in record_ids},
            {record_id: self.clean_images[record_id] for record_id in record_ids},
            self.kind,
        )


@dataclass(frozen=True)
class UnpairedBatch:
    underwater: torch.Tensor
    clean: torch.Tensor
    underwater_ids: tuple[str, ...] = ()
    clean_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.underwater.ndim != 4 or self.underwater.shape != self.clean.shape:
            raise ManifestError(
                f"Unpaired batch sides must share one B×3×H×W shape, got "
                f"{tuple(self.underwater.shape)} and {tuple(self.clean.shape)}."
            )

    @property
    def size(self) -> int:
        return self.underwater.shape[0]

    def to(self, device: torch.device | str, dtype: torch.dtype | None = None) -> "UnpairedBatch":
        return UnpairedBatch(
            self.underwater.to(device=device, dtype=dtype),
            self.clean.to(device=device, dtype=dtype),
            self.underwater_ids,
            self.clean_ids,
        )


def fit_to_patch(image: torch.Tensor, patch: int) -> torch.Tensor:
    """
    Bicubically upscale an image whose height or width is below `patch`, keeping its aspect
    ratio, so that at least one `patch`×`patch` crop exists. Larger images are returned as is.
    """
    height, width = image.shape[-2:]

    if height >= patch and width >= patch:
        return image

    scale = patch / min(height, width)
    size = (max(patch, math.ceil(height * scale)), max(patch, math.ceil(width * scale)))
    resized = F.interpolate(image[None], size=size, mode="bicubic", align_corners=False)

    return resized[0].clamp(0.0, 1.0)


def _sample_side(
    ids: Sequence[str],
    load: Any,
    patch: int,
    batch: int,
    rng: np.random.Generator,
) -> tuple[torch.Tensor, tuple[str, ...]]:
    patches: list[torch.Tensor] = []
    chosen: list[str] = []

    for _ in range(batch):
        record_id = ids[int(rng.integers(len(ids)))]
        image = fit_to_patch(load(record_id), patch)
        height, width = image.shape[-2:]
        top = int(rng.integers(height - patch + 1))
        left = int(rng.integers(width - patch + 1))
        patches.append(image[:, top : top + patch, left : left + patch])
        chosen.append(record_id)

    return torch.stack(patches).contiguous(), tuple(chosen)


def sample_patch_batch(
    split: UnpairedSplit,
    images: ImageSource,
    patch: int,
    batch: int,
    rng: np.random.Generator,
) -> UnpairedBatch:
    """
    Draw `batch` random `patch`×`patch` crops from each side of the split. Every slot picks its
    image and crop offset uniformly at random; the two sides are sampled independently, all
    underwater slots first.

    :param split: Which ids feed the underwater side and which the clean side.
    :param images: Resolves ids to decoded images.
    :param rng: The only source of randomness; a generator in the same state yields the same batch.
    :rtype: UnpairedBatch
    :raises SplitError: If either split side is empty.
    """
    if patch < 1 or batch < 1:
        raise ValueError(
            f'The provided "patch" and "batch" must be positive, got {patch} and {batch}.'
        )

    if not split.underwater_ids or not split.clean_ids:
        raise SplitError("Both split sides need at least one id to sample a batch.")

    underwater, underwater_ids = _sample_side(
        sorted(split.underwater_ids), images.underwater, patch, batch, rng
    )
    clean, clean_ids = _sample_side(sorted(split.clean_ids), images.clean, patch, batch, rng)

    return UnpairedBatch(underwater, clean, underwater_ids, clean_ids)


def derive_streams(seed: int, count: int) -> list[np.random.Generator]:
    """
    Spawn `count` independent generators from one seed, e.g. one per data worker. The same
    seed always yields the same streams.
    """
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(count)]
