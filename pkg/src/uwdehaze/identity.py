from typing import Any

import torch


def is_tensor(value: Any) -> bool:
    return isinstance(value, torch.Tensor)


def is_image(value: Any) -> bool:
    return is_tensor(value) and value.ndim == 3 and value.shape[0] == 3


def is_image_batch(value: Any) -> bool:
    return is_tensor(value) and value.ndim == 4 and value.shape[1] == 3


def is_feature_map(value: Any) -> bool:
    return is_tensor(value) and value.ndim == 4


def is_finite(value: torch.Tensor) -> bool:
    return bool(torch.isfinite(value).all())


def is_unit_range(value: torch.Tensor) -> bool:
    return value.numel() == 0 or (
        bool(value.min() >= 0.0) and bool(value.max() <= 1.0)
    )


def is_divisible_size(value: torch.Tensor, factor: int) -> bool:
    height, width = value.shape[-2:]

    return height % factor == 0 and width % factor == 0
