from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from pathlib import Path

    from uwdehaze.training import LossRecord


class UwDehazeError(Exception):
    """Base class for every error raised on purpose by this package."""


class ManifestError(UwDehazeError, ValueError):
    pass


class SplitError(UwDehazeError, ValueError):
    pass


class ShapeError(UwDehazeError, ValueError):
    pass


class ConfigError(UwDehazeError, ValueError):
    pass


class CheckpointError(UwDehazeError, ValueError):
    pass


class DivergenceError(UwDehazeError, RuntimeError):
    """
    Raised when a training step produces a non-finite loss.

    :param record: The loss record of the step that diverged.
    :param last_checkpoint: The most recent checkpoint written before the divergence, if any.
    """

    def __init__(
        self, record: "LossRecord", last_checkpoint: "Path | None" = None
    ) -> None:
        non_finite = ", ".join(record.non_finite_fields()) or "unknown"
        super().__init__(
            f'Training diverged at step {record.step}: non-finite value(s) in "{non_finite}".'
        )
        self.record = record
        self.last_checkpoint = last_checkpoint
