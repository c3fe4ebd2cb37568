from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from uwdehaze.errors import ManifestError, ShapeError
from uwdehaze.identity import is_image

IMAGE_SUFFIXES: tuple[str, ...] = (".png", ".jpg", ".jpeg")


def is_image_file(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES


def load_image(path: Path | str) -> torch.Tensor:
    """
    Decode an 8-bit PNG or JPEG file into a float32 tensor of shape 3×H×W with values in [0, 1].

    Greyscale and palette images are converted to RGB; an alpha channel is dropped.

    :param path: The image file to decode.
    :return: The decoded image.
    :rtype: torch.Tensor
    :raises ManifestError: If the file cannot be decoded.
    """
    path = Path(path)

    try:
        with Image.open(path) as image:
            pixels = np.asarray(image.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError) as error:
        raise ManifestError(f'Unable to decode image "{path}": {error}') from error

    return torch.from_numpy(pixels.copy()).permute(2, 0, 1).float().div(255.0)


def to_uint8(image: torch.Tensor) -> np.ndarray:
    """
    Quantize a 3×H×W image in [0, 1] into an H×W×3 array of 8-bit values.

    Values are clamped first and rounded to the nearest level, so any image that
    came from `load_image` maps back onto its original bytes.
    """
    if not is_image(image):
        raise ShapeError(
            f'The provided "image" must be a 3×H×W tensor, got shape {tuple(image.shape)}.'
        )

    scaled = image.detach().to("cpu", torch.float64).clamp(0.0, 1.0).mul(255.0)

    return scaled.round().to(torch.uint8).permute(1, 2, 0).numpy()


def save_image(image: torch.Tensor, path: Path | str) -> Path:
    """
    Encode a 3×H×W image in [0, 1] as an 8-bit PNG (or JPEG, by suffix).

    :return: The written path.
    :rtype: Path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(image)).save(path)

    return path
