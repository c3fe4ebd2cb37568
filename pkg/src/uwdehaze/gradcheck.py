from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn


@dataclass(frozen=True)
class GradientCheck:
    parameter: str
    index: int
    analytic: float
    numeric: float
    passed: bool

    @property
    def error(self) -> float:
        return abs(self.analytic - self.numeric)


def check_parameter_gradients(
    loss_fn: Callable[[], torch.Tensor],
    module: nn.Module,
    count: int = 10,
    rng: np.random.Generator | None = None,
    step: float = 1e-5,
    rtol: float = 1e-4,
    atol: float = 1e-8,
) -> list[GradientCheck]:
    """
    Compare autograd gradients of a scalar loss against central finite differences for
    `count` scalar parameters of `module`, sampled uniformly without replacement.

    A sample passes when |analytic − numeric| <= atol + rtol · max(|analytic|, |numeric|).
    Parameters are restored to their exact original values after probing.

    :param loss_fn: Recomputes the loss from the current parameters; must be deterministic.
    :param module: The network whose parameters are probed.
    :param step: Finite-difference step; 1e-5 suits float64, 1e-3 float32.
    :rtype: list[GradientCheck]
    """
    rng = rng or np.random.default_rng(0)
    named = [(name, parameter) for name, parameter in module.named_parameters() if parameter.requires_grad]

    if not named:
        raise ValueError('The provided "module" has no trainable parameters.')

    sizes = np.array([parameter.numel() for _, parameter in named])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    count = min(count, int(offsets[-1]))
    picks = np.sort(rng.choice(int(offsets[-1]), size=count, replace=False))

    gradients = torch.autograd.grad(
        loss_fn(), [parameter for _, parameter in named], allow_unused=True
    )
    checks: list[GradientCheck] = []

    for pick in picks:
        which = int(np.searchsorted(offsets, pick, side="right") - 1)
        index = int(pick - offsets[which])
        name, parameter = named[which]
        gradient = gradients[which]
        analytic = 0.0 if gradient is None else float(gradient.reshape(-1)[index])

        with torch.no_grad():
            flat = parameter.view(-1)
            original = flat[index].clone()
            flat[index] = original + step
            plus = float(loss_fn())
            flat[index] = original - step
            minus = float(loss_fn())
            flat[index] = original

        numeric = (plus - minus) / (2.0 * step)
        passed = abs(analytic - numeric) <= atol + rtol * max(abs(analytic), abs(numeric))
        checks.append(GradientCheck(name, index, analytic, numeric, passed))

    return checks
