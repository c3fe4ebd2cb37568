"""
End-to-end optimization of the disentanglement and restoration objectives.

Each step alternates two phases. First the three discriminators (feature, clean image,
underwater image) update on their own losses while the generator side is held fixed. Then the
encoders, decoder and both generators update on the weighted disentanglement loss plus the
weighted restoration loss, summed into a single objective, with the discriminators frozen.
"""

import csv
import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Self, overload

import torch
from tqdm import tqdm

from uwdehaze.checkpoint import load_checkpoint, save_checkpoint
from uwdehaze.config import TrainConfig
from uwdehaze.datasets import ImageSource, UnpairedBatch, UnpairedSplit, sample_patch_batch
from uwdehaze.errors import DivergenceError
from uwdehaze.hdn import feature_adversarial_loss, hdn_total_loss
from uwdehaze.restoration import image_adversarial_losses, restoration_total_loss
from uwdehaze.state import TrainState, build_state, set_requires_grad

logger = logging.getLogger(__name__)

LOSS_SERIES: tuple[str, ...] = (
    "feature_adversarial",
    "feature_regularization",
    "clean_reconstruction",
    "underwater_reconstruction",
    "clean_adversarial",
    "underwater_adversarial",
    "underwater_cycle",
    "clean_cycle",
    "feature_discriminator",
    "clean_discriminator",
    "underwater_discriminator",
)


@dataclass(frozen=True)
class LossRecord:
    step: int
    epoch: int
    feature_adversarial: float
    feature_regularization: float
    clean_reconstruction: float
    underwater_reconstruction: float
    clean_adversarial: float
    underwater_adversarial: float
    underwater_cycle: float
    clean_cycle: float
    feature_discriminator: float
    clean_discriminator: float
    underwater_discriminator: float
    disentanglement_total: float
    restoration_total: float
    generator_total: float

    @classmethod
    def header(cls) -> tuple[str, ...]:
        return tuple(field.name for field in fields(cls))

    def losses(self) -> dict[str, float]:
        return {name: value for name, value in asdict(self).items() if name not in ("step", "epoch")}

    def non_finite_fields(self) -> tuple[str, ...]:
        return tuple(name for name, value in self.losses().items() if not math.isfinite(value))

    def is_finite(self) -> bool:
        return not self.non_finite_fields()


class LossTrace(Sequence[LossRecord]):
    """
    An append-only sequence of loss records that mirrors itself into a CSV file when given
    one.
    """

    __slots__ = ("_path", "_records")

    def __init__(self, records: Iterable[LossRecord] = (), path: Path | None = None) -> None:
        self._records: list[LossRecord] = list(records)
        self._path = path

    @overload
    def __getitem__(self, item: int) -> LossRecord: ...

    @overload
    def __getitem__(self, item: slice) -> list[LossRecord]: ...

    def __getitem__(self, item: int | slice) -> LossRecord | list[LossRecord]:
        return self._records[item]

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[LossRecord]:
        return iter(self._records)

    def append(self, record: LossRecord) -> None:
        self._records.append(record)

        if self._path is not None:
            with self._path.open("a", newline="", encoding="utf-8") as handle:
                csv.writer(handle).writerow(asdict(record).values())

    def series(self, name: str) -> list[float]:
        if name not in LossRecord.header():
            raise KeyError(f'Unknown loss series "{name}".')

        return [getattr(record, name) for record in self._records]

    def to_csv(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(LossRecord.header())
            writer.writerows(asdict(record).values() for record in self._records)

        return path

    @classmethod
    def from_csv(cls, path: Path | str) -> Self:
        path = Path(path)

        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)

            if tuple(reader.fieldnames or ()) != LossRecord.header():
                raise ValueError(f'The loss trace "{path}" has an unexpected header.')

            records = [
                LossRecord(
                    **{
                        name: int(value) if name in ("step", "epoch") else float(value)
                        for name, value in row.items()
                    }
                )
                for row in reader
            ]

        return cls(records)

    def attach(self, path: Path | str, keep_before: int | None = None) -> None:
        """
        Start mirroring into `path`. Rows already in the file are kept when their step is
        below `keep_before` (the resume point) and dropped otherwise; a missing file gets the
        header.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        kept: list[LossRecord] = []

        if keep_before is not None and path.is_file():
            kept = [record for record in LossTrace.from_csv(path) if record.step < keep_before]

        LossTrace(kept).to_csv(path)
        self._records = kept + self._records
        self._path = path


@dataclass(frozen=True)
class TrainResult:
    state: TrainState
    trace: LossTrace
    last_checkpoint: Path | None


def scalar(value: torch.Tensor) -> float:
    """Read a one-element loss without keeping it attached to the graph."""
    return value.detach().item()


def train_step(batch: UnpairedBatch, state: TrainState) -> tuple[TrainState, LossRecord]:
    """
    Run one alternating discriminator/generator update in place.

    :return: The same (updated) state and the losses of this step. Discriminator losses are
        measured before their update, generator-side losses after it.
    :rtype: tuple[TrainState, LossRecord]
    :raises DivergenceError: If any loss is NaN or infinite; no generator update happens then.
    """
    config = state.config
    hdn, restoration = state.hdn, state.restoration
    batch = batch.to(config.device)
    hdn.train()
    restoration.train()

    with torch.no_grad():
        forward = hdn.forward_pass(batch)
        outputs = restoration.outputs(forward, hdn)

    set_requires_grad(state.discriminator_modules(), True)
    feature_discriminator = feature_adversarial_loss(
        forward.clean_content,
        forward.underwater_content,
        hdn.feature_discriminator,
        check_finite=False,
    ).discriminator_loss
    clean_discriminator = image_adversarial_losses(
        batch.clean,
        outputs.restored_underwater,
        restoration.clean_discriminator,
        check_finite=False,
    ).discriminator_loss
    underwater_discriminator = image_adversarial_losses(
        batch.underwater,
        outputs.regenerated_underwater,
        restoration.underwater_discriminator,
        check_finite=False,
    ).discriminator_loss
    discriminator_total = feature_discriminator + clean_discriminator + underwater_discriminator
    discriminators_finite = bool(torch.isfinite(discriminator_total))

    if discriminators_finite:
        state.discriminator_optimizer.zero_grad(set_to_none=True)
        discriminator_total.backward()
        state.discriminator_optimizer.step()

    set_requires_grad(state.discriminator_modules(), False)

    try:
        forward = hdn.forward_pass(batch)
        disentanglement = hdn_total_loss(
            batch, hdn, config.hdn_weights, forward, check_finite=False
        )
        restoration_losses = restoration_total_loss(
            batch, hdn, restoration, config.restoration_weights, forward, check_finite=False
        )
        generator_total = disentanglement.total + restoration_losses.total

        record = LossRecord(
            step=state.step,
            epoch=state.epoch,
            **{name: scalar(value) for name, value in disentanglement.terms.items()},
            **{name: scalar(value) for name, value in restoration_losses.terms.items()},
            feature_discriminator=scalar(feature_discriminator),
            clean_discriminator=scalar(clean_discriminator),
            underwater_discriminator=scalar(underwater_discriminator),
            disentanglement_total=scalar(disentanglement.total),
            restoration_total=scalar(restoration_losses.total),
            generator_total=scalar(generator_total),
        )

        if not (discriminators_finite and record.is_finite()):
            raise DivergenceError(record)

        state.generator_optimizer.zero_grad(set_to_none=True)
        generator_total.backward()
        state.generator_optimizer.step()
    finally:
        set_requires_grad(state.discriminator_modules(), True)

    state.step += 1

    return state, record


def steps_per_epoch(split: UnpairedSplit, batch: int) -> int:
    """One epoch covers the larger split side once; the smaller side is drawn with replacement."""
    return math.ceil(max(len(split.underwater_ids), len(split.clean_ids)) / batch)


def total_steps(config: TrainConfig, split: UnpairedSplit) -> int:
    planned = config.epochs * steps_per_epoch(split, config.batch)

    return planned if config.max_steps is None else min(planned, config.max_steps)


def checkpoint_path(out_dir: Path, step: int) -> Path:
    return out_dir / "checkpoints" / f"step_{step:08d}.uwhdn"


def _save(state: TrainState, out_dir: Path) -> Path:
    path = save_checkpoint(state, checkpoint_path(out_dir, state.step))
    save_checkpoint(state, out_dir / "checkpoints" / "latest.uwhdn")

    return path


def train(
    config: TrainConfig,
    split: UnpairedSplit,
    images: ImageSource,
    out_dir: Path | str | None = None,
    resume_from: Path | str | None = None,
) -> TrainResult:
    """
    Train for `config.epochs` epochs (or `config.max_steps` steps, whichever ends first).

    With `out_dir`, the loss trace is appended to `out_dir/loss_trace.csv` and checkpoints
    are written every `checkpoint_every` steps and after the last step.

    :param resume_from: A checkpoint to continue from; the trace file is cut back to its step.
    :rtype: TrainResult
    :raises DivergenceError: On a non-finite loss; `last_checkpoint` names the latest good
        checkpoint, which is left untouched.
    """
    state = load_checkpoint(resume_from, config) if resume_from is not None else build_state(config)
    out_dir = Path(out_dir) if out_dir is not None else None
    trace = LossTrace()
    last_checkpoint = Path(resume_from) if resume_from is not None else None

    if out_dir is not None:
        trace.attach(out_dir / "loss_trace.csv", keep_before=state.step if resume_from else 0)

    per_epoch = steps_per_epoch(split, config.batch)
    planned = total_steps(config, split)
    logger.info(
        "Training from step %d to %d (%d steps per epoch, patch %d, batch %d)",
        state.step,
        planned,
        per_epoch,
        config.patch,
        config.batch,
    )

    progress = tqdm(
        total=planned,
        initial=state.step,
        disable=not config.progress,
        desc="train",
        unit="step",
    )

    with progress:
        while state.step < planned:
            state.epoch = state.step // per_epoch
            batch = sample_patch_batch(split, images, config.patch, config.batch, state.rng)

            try:
                state, record = train_step(batch, state)
            except DivergenceError as error:
                error.last_checkpoint = last_checkpoint
                logger.error("%s Last good checkpoint: %s", error, last_checkpoint)
                raise

            trace.append(record)
            progress.update(1)

            if state.step % config.log_every == 0:
                logger.info(
                    "step %d epoch %d generator %.4f feature_d %.4f clean_d %.4f underwater_d %.4f",
                    record.step,
                    record.epoch,
                    record.generator_total,
                    record.feature_discriminator,
                    record.clean_discriminator,
                    record.underwater_discriminator,
                )

            if out_dir is not None and state.step % config.checkpoint_every == 0:
                last_checkpoint = _save(state, out_dir)

    if out_dir is not None and (last_checkpoint is None or state.step % config.checkpoint_every):
        last_checkpoint = _save(state, out_dir)

    return TrainResult(state, trace, last_checkpoint)
