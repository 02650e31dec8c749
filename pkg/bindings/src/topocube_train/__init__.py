"""Array-in/array-out adapter for inserting the topology loss into training.

``bound_loss`` (or the reusable :class:`BoundLoss` handle) takes two
contiguous 3D float arrays and returns the combined loss together with its
gradient with respect to the prediction, delegating every computation to the
``topocube`` package. float64 C-contiguous inputs are wrapped without
copying; float32 inputs are widened.

A ``torch.autograd.Function`` wrapper for use as a custom differentiable
operation lives in :mod:`topocube_train.torch_op` (imported lazily so torch
stays optional).
"""

from __future__ import annotations

import numpy as np

from topocube import LossConfig, bce_loss, dice_loss, topological_loss
from topocube.errors import InvalidValue, SizeMismatch
from topocube.volume import volume_from_array

__all__ = ["BoundLoss", "LossConfig", "bound_loss", "make_config"]

__version__ = "0.1.0"


def make_config(
    p: float = 2.0,
    lam: float = 0.1,
    dims=(0, 1, 2),
    m: int | None = 16,
    geometric_loss: str = "none",
) -> LossConfig:
    """Construct a loss configuration (validated by the primary package)."""
    return LossConfig(p=p, lam=lam, dims=tuple(dims), m=m, geometric_loss=geometric_loss)


def _as_volume(arr: np.ndarray, name: str):
    if not isinstance(arr, np.ndarray):
        raise InvalidValue(f"{name} must be a numpy array, got {type(arr).__name__}")
    if arr.ndim != 3:
        raise SizeMismatch(f"{name} must be 3D, got ndim={arr.ndim}")
    if arr.dtype not in (np.float32, np.float64):
        raise InvalidValue(f"{name} must be float32 or float64, got {arr.dtype}")
    if not arr.flags.c_contiguous:
        raise InvalidValue(f"{name} must be C-contiguous")
    # float64 passes through without a copy; float32 is widened
    return volume_from_array(arr if arr.dtype == np.float64 else arr.astype(np.float64))


def bound_loss(true_array: np.ndarray, pred_array: np.ndarray, config: LossConfig | None = None):
    """Evaluate the combined loss; returns (value, gradient array).

    The value matches the ``total`` field of the CLI ``loss`` subcommand on
    the same data; the gradient is d(total)/d(prediction voxels) at the
    prediction's resolution.
    """
    if config is None:
        config = LossConfig()
    if true_array.shape != pred_array.shape:
        raise SizeMismatch(f"shapes differ: {true_array.shape} vs {pred_array.shape}")
    f_true = _as_volume(true_array, "true_array")
    f_pred = _as_volume(pred_array, "pred_array")

    report = topological_loss(f_true, f_pred, config)
    gradient = config.lam * report.gradient.data
    if config.geometric_loss == "bce":
        _, geom_grad = bce_loss(f_true, f_pred)
        gradient = gradient + geom_grad.data
    elif config.geometric_loss == "dice":
        _, geom_grad = dice_loss(f_true, f_pred)
        gradient = gradient + geom_grad.data
    return float(report.total), np.ascontiguousarray(gradient)


class BoundLoss:
    """A loss handle with a captured configuration.

    Calling it with (true, pred) arrays returns (value, gradient). Instances
    hold no mutable state and are safe to share across threads.
    """

    def __init__(self, config: LossConfig | None = None):
        self.config = config if config is not None else LossConfig()

    def __call__(self, true_array: np.ndarray, pred_array: np.ndarray):
        return bound_loss(true_array, pred_array, self.config)
