"""Topology-aware loss and its gradient with respect to prediction voxels.

The topological term sums, over the configured homology dimensions, the
p-Wasserstein distance between the diagrams of truth and prediction plus the
degree-p total persistence of the prediction's diagram. The combined loss is
``geometric + lambda * topological``.

Every diagram coordinate of the prediction is the volume value at a critical
vertex, so the loss is piecewise smooth in the prediction voxels and
gradients route through the critical vertices of the optimal matching:

* a matched pair contributes through the coordinate achieving the sup-norm
  ground distance (birth preferred on ties);
* a diagonally matched point pushes its birth and death toward each other;
* the total-persistence term pushes births down and deaths up;
* the death coordinate of an essential pair is a constant and receives
  nothing.

When a working-grid side ``m`` is configured, both volumes are resampled
before the diagrams are computed and the gradient is carried back to the
original voxels by the transpose of the (linear) interpolation map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagram_distance import Matching, total_persistence, wasserstein
from .errors import InvalidParameter, InvalidValue, SizeMismatch
from .filtration import build_superlevel_filtration
from .persistence import PersistenceDiagram, compute_persistence
from .volume import Volume, downsample_trilinear, resample_transpose

_GEOMETRIC_CHOICES = ("bce", "dice", "none")


@dataclass(frozen=True)
class LossConfig:
    """Configuration of the combined loss.

    ``p`` is the transport exponent (also used for the total-persistence
    term), ``lam`` the weight of the topological term, ``dims`` the homology
    dimensions entering the sum, ``m`` the working-grid side (``None``
    disables resampling), ``geometric_loss`` one of bce/dice/none.
    """

    p: float = 2.0
    lam: float = 0.1
    dims: tuple[int, ...] = (0, 1, 2)
    m: int | None = 16
    geometric_loss: str = "none"

    def __post_init__(self):
        if self.p < 1:
            raise InvalidParameter(f"p must be >= 1, got {self.p}")
        if self.lam <= 0:
            raise InvalidParameter(f"lambda must be > 0, got {self.lam}")
        dims = tuple(sorted(set(int(d) for d in self.dims)))
        if not dims or any(d not in (0, 1, 2) for d in dims):
            raise InvalidParameter(f"dims must be a non-empty subset of {{0,1,2}}, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        if self.m is not None and self.m < 2:
            raise InvalidParameter(f"working-grid side must be >= 2, got {self.m}")
        if self.geometric_loss not in _GEOMETRIC_CHOICES:
            raise InvalidParameter(
                f"geometric_loss must be one of {_GEOMETRIC_CHOICES}, got {self.geometric_loss!r}"
            )


@dataclass(frozen=True, eq=False)
class LossReport:
    """Loss values plus the gradient of the topological term.

    ``total = geometric + lam * topological``; ``per_dim`` maps each
    configured dimension to its (wasserstein, total_persistence) terms;
    ``gradient`` has the prediction's original dims.
    """

    total: float
    topological: float
    geometric: float
    per_dim: dict[int, tuple[float, float]]
    gradient: Volume


def _shared_essential_death(a: Volume, b: Volume) -> float:
    if a.value_range is not None and b.value_range is not None:
        return min(a.value_range[0], b.value_range[0])
    return float(min(a.data.min(), b.data.min()))


def _add_wasserstein_gradient(
    grad: np.ndarray,
    d_true: PersistenceDiagram,
    d_pred: PersistenceDiagram,
    matching: Matching,
    p: float,
    dist: float,
) -> None:
    if dist <= 0.0:
        return
    scale = dist ** (1.0 - p)

    if matching.pairs_direct:
        ti = np.fromiter((a for a, _ in matching.pairs_direct), dtype=np.int64)
        pj = np.fromiter((b for _, b in matching.pairs_direct), dtype=np.int64)
        db = d_pred.births[pj] - d_true.births[ti]
        dd = d_pred.deaths[pj] - d_true.deaths[ti]
        cost = np.maximum(np.abs(db), np.abs(dd))
        coeff = scale * cost ** (p - 1.0)
        use_birth = np.abs(db) >= np.abs(dd)
        g_birth = np.where(use_birth, np.sign(db), 0.0) * coeff
        g_death = np.where(use_birth, 0.0, np.sign(dd)) * coeff
        np.add.at(grad, d_pred.birth_vertices[pj], g_birth)
        live = ~d_pred.essential[pj]
        np.add.at(grad, d_pred.death_vertices[pj][live], g_death[live])

    if matching.to_diagonal_right:
        j = np.asarray(matching.to_diagonal_right, dtype=np.int64)
        spread = d_pred.births[j] - d_pred.deaths[j]
        cost = np.abs(spread) / 2.0
        coeff = scale * cost ** (p - 1.0) * 0.5 * np.sign(spread)
        np.add.at(grad, d_pred.birth_vertices[j], coeff)
        live = ~d_pred.essential[j]
        np.add.at(grad, d_pred.death_vertices[j][live], -coeff[live])


def _add_persistence_gradient(grad: np.ndarray, d_pred: PersistenceDiagram, p: float) -> None:
    spread = d_pred.births - d_pred.deaths
    coeff = np.zeros_like(spread)
    pos = spread > 0
    coeff[pos] = p * spread[pos] ** (p - 1.0)
    np.add.at(grad, d_pred.birth_vertices, coeff)
    live = ~d_pred.essential
    np.add.at(grad, d_pred.death_vertices[live], -coeff[live])


def topological_loss(f_true: Volume, f_pred: Volume, cfg: LossConfig | None = None) -> LossReport:
    """Evaluate the combined loss and the topological term's voxel gradient."""
    if cfg is None:
        cfg = LossConfig()
    if f_true.dims != f_pred.dims:
        raise SizeMismatch(f"volume dims differ: {f_true.dims} vs {f_pred.dims}")

    if cfg.m is not None:
        work_true = downsample_trilinear(f_true, cfg.m)
        work_pred = downsample_trilinear(f_pred, cfg.m)
    else:
        work_true, work_pred = f_true, f_pred

    essential_death = _shared_essential_death(work_true, work_pred)
    diags_true = compute_persistence(
        build_superlevel_filtration(work_true), essential_death=essential_death
    )
    diags_pred = compute_persistence(
        build_superlevel_filtration(work_pred), essential_death=essential_death
    )

    grad_work = np.zeros(work_pred.size)
    per_dim: dict[int, tuple[float, float]] = {}
    topological = 0.0
    for k in cfg.dims:
        dist, matching = wasserstein(diags_true[k], diags_pred[k], cfg.p)
        pers = total_persistence(diags_pred[k], cfg.p)
        per_dim[k] = (dist, pers)
        topological += dist + pers
        _add_wasserstein_gradient(grad_work, diags_true[k], diags_pred[k], matching, cfg.p, dist)
        _add_persistence_gradient(grad_work, diags_pred[k], cfg.p)

    grad = grad_work.reshape(work_pred.dims)
    if cfg.m is not None:
        grad = resample_transpose(grad, f_pred.dims, cfg.m)

    if cfg.geometric_loss == "bce":
        geometric, _ = bce_loss(f_true, f_pred)
    elif cfg.geometric_loss == "dice":
        geometric, _ = dice_loss(f_true, f_pred)
    else:
        geometric = 0.0

    return LossReport(
        total=geometric + cfg.lam * topological,
        topological=topological,
        geometric=geometric,
        per_dim=per_dim,
        gradient=Volume(grad, value_range=None),
    )


def topological_loss_gradient(f_true: Volume, f_pred: Volume, cfg: LossConfig | None = None) -> Volume:
    """Gradient of the topological term with respect to every prediction voxel.

    Exact wherever the matching and the critical vertices are locally
    constant, i.e. at volumes with pairwise distinct working-grid values.
    """
    return topological_loss(f_true, f_pred, cfg).gradient


def bce_loss(f_true: Volume, f_pred: Volume, eps: float = 1e-7) -> tuple[float, Volume]:
    """Mean binary cross entropy with the prediction clamped to [eps, 1-eps]."""
    if f_true.dims != f_pred.dims:
        raise SizeMismatch(f"volume dims differ: {f_true.dims} vs {f_pred.dims}")
    y = f_true.data
    if y.min() < 0.0 or y.max() > 1.0:
        raise InvalidValue("BCE requires truth values in [0, 1]")
    clamped = np.clip(f_pred.data, eps, 1.0 - eps)
    value = float(-np.mean(y * np.log(clamped) + (1.0 - y) * np.log(1.0 - clamped)))
    inside = (f_pred.data > eps) & (f_pred.data < 1.0 - eps)
    grad = np.where(inside, (clamped - y) / (clamped * (1.0 - clamped)) / y.size, 0.0)
    return value, Volume(grad, value_range=None)


def dice_loss(f_true: Volume, f_pred: Volume, smoothing: float = 1.0) -> tuple[float, Volume]:
    """Soft Dice loss 1 - 2*sum(y*yp) / (sum(y) + sum(yp) + s)."""
    if f_true.dims != f_pred.dims:
        raise SizeMismatch(f"volume dims differ: {f_true.dims} vs {f_pred.dims}")
    y = f_true.data
    yp = f_pred.data
    overlap = 2.0 * float((y * yp).sum())
    mass = float(y.sum() + yp.sum() + smoothing)
    value = 1.0 - overlap / mass
    grad = (overlap - 2.0 * y * mass) / (mass * mass)
    return value, Volume(grad, value_range=None)
