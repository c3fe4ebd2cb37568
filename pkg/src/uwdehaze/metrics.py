"""
Full-reference quality metrics on RGB images in [0, 1], computed in float64.
"""

import math

import numpy as np
import torch
from scipy import signal

from uwdehaze.errors import ShapeError
from uwdehaze.identity import is_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(a: torch.Tensor, b: torch.Tensor) -> tuple[np.ndarray, np.ndarray]:
    if not (is_image(a) and is_image(b)):
        raise ShapeError('The provided "a" and "b" must both be 3×H×W images.')

    if a.shape != b.shape:
        raise ShapeError(
            f'The provided "a" and "b" differ in shape: {tuple(a.shape)} vs {tuple(b.shape)}.'
        )

    return (
        a.detach().cpu().to(torch.float64).numpy(),
        b.detach().cpu().to(torch.float64).numpy(),
    )


def psnr(a: torch.Tensor, b: torch.Tensor) -> float:
    """
    Peak signal-to-noise ratio in dB for a peak value of 1.

    Identical images have zero error and return ``math.inf``.

    >>> psnr(torch.zeros(3, 4, 4), torch.full((3, 4, 4), 0.1))  # doctest: +ELLIPSIS
    20.0...

    :rtype: float
    :raises ShapeError: If the images are not equally shaped 3×H×W tensors.
    """
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2))

    if mse == 0.0:
        return math.inf

    return 10.0 * math.log10(1.0 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    taps = np.exp(-(offsets**2) / (2.0 * sigma**2))
    taps /= taps.sum()

    return np.outer(taps, taps)


def _channel_ssim(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> float:
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2

    def blur(values: np.ndarray) -> np.ndarray:
        return signal.convolve2d(values, window, mode="valid")

    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x**2
    var_y = blur(y * y) - mu_y**2
    covariance = blur(x * y) - mu_x * mu_y

    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * covariance + c2)
    denominator = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)

    return float(np.mean(numerator / denominator))


def ssim(a: torch.Tensor, b: torch.Tensor) -> float:
    """
    Structural similarity with an 11-tap Gaussian window (sigma 1.5), k1 = 0.01, k2 = 0.03 and
    a dynamic range of 1. Local values are averaged over every full window position, per
    channel, then over channels.

    :rtype: float
    :raises ShapeError: If the shapes differ or either side is smaller than the window.
    """
    x, y = _pair(a, b)

    if min(x.shape[1:]) < SSIM_WINDOW:
        raise ShapeError(
            f"SSIM needs images of at least {SSIM_WINDOW}×{SSIM_WINDOW} pixels, got "
            f"{x.shape[1]}×{x.shape[2]}."
        )

    window = gaussian_window()

    return float(np.mean([_channel_ssim(x[c], y[c], window) for c in range(x.shape[0])]))


def mean_absolute_error(a: torch.Tensor, b: torch.Tensor) -> float:
    x, y = _pair(a, b)

    return float(np.mean(np.abs(x - y)))
