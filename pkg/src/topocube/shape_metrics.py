"""Shape-error metrics on thresholded volumes.

The prediction is Otsu-thresholded and compared against a binary ground
truth: IoU error, and relative errors of voxel volume, surface area, and
surface roughness. Surface voxels are foreground voxels with at least one
background 6-neighbour (out of bounds counts as background). Roughness is
the absolute surface-area change under Gaussian smoothing followed by
re-thresholding at 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateInput, SizeMismatch
from .volume import BinaryVolume, Volume, otsu_threshold


@dataclass(frozen=True)
class MetricsReport:
    iou_error: float
    volume_error: float
    surface_area_error: float
    roughness_error: float
    pred_volume: int
    true_volume: int
    pred_surface: int
    true_surface: int
    pred_roughness: int
    true_roughness: int


def surface_count(mask: np.ndarray) -> int:
    """Number of foreground voxels with a background 6-neighbour."""
    m = mask.astype(bool)
    padded = np.pad(m, 1, constant_values=False)
    interior = (
        padded[2:, 1:-1, 1:-1]
        & padded[:-2, 1:-1, 1:-1]
        & padded[1:-1, 2:, 1:-1]
        & padded[1:-1, :-2, 1:-1]
        & padded[1:-1, 1:-1, 2:]
        & padded[1:-1, 1:-1, :-2]
    )
    return int(np.count_nonzero(m & ~interior))


def smooth_mask(mask: np.ndarray, sigma: float = 1.0, truncate: float = 4.0) -> np.ndarray:
    """Gaussian-smooth a binary mask and re-threshold at 0.5."""
    blurred = gaussian_filter(
        mask.astype(np.float64), sigma=sigma, truncate=truncate, mode="constant", cval=0.0
    )
    return (blurred >= 0.5).astype(np.uint8)


def _roughness(mask: np.ndarray, sigma: float, truncate: float) -> int:
    return abs(surface_count(mask) - surface_count(smooth_mask(mask, sigma, truncate)))


def _relative_error(pred: float, true: float) -> float:
    if pred == true:
        return 0.0
    if true == 0:
        return float("inf")
    return abs(pred - true) / true


def evaluate_pair(
    pred: Volume,
    truth: BinaryVolume,
    sigma: float = 1.0,
    truncate: float = 4.0,
) -> MetricsReport:
    """Threshold the prediction and compute all four shape errors."""
    if pred.dims != truth.dims:
        raise SizeMismatch(f"volume dims differ: {pred.dims} vs {truth.dims}")
    true_mask = truth.data.astype(bool)
    if not true_mask.any():
        raise DegenerateInput("ground-truth mask is empty")
    _, pred_binary = otsu_threshold(pred)
    pred_mask = pred_binary.data.astype(bool)

    inter = int(np.count_nonzero(pred_mask & true_mask))
    union = int(np.count_nonzero(pred_mask | true_mask))
    iou_error = 1.0 - inter / union

    pred_volume = int(np.count_nonzero(pred_mask))
    true_volume = int(np.count_nonzero(true_mask))
    pred_surface = surface_count(pred_mask)
    true_surface = surface_count(true_mask)
    pred_rough = _roughness(pred_mask, sigma, truncate)
    true_rough = _roughness(true_mask, sigma, truncate)

    return MetricsReport(
        iou_error=iou_error,
        volume_error=_relative_error(pred_volume, true_volume),
        surface_area_error=_relative_error(pred_surface, true_surface),
        roughness_error=_relative_error(pred_rough, true_rough),
        pred_volume=pred_volume,
        true_volume=true_volume,
        pred_surface=pred_surface,
        true_surface=true_surface,
        pred_roughness=pred_rough,
        true_roughness=true_rough,
    )
