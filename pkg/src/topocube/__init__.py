"""Multi-scale topological descriptors and losses for 3D likelihood volumes.

Cubical persistent homology of superlevel-set filtrations, exact Wasserstein
and bottleneck distances between persistence diagrams, a differentiable
topology-aware loss with voxel gradients, and shape-error metrics on
thresholded volumes.
"""

from .diagram_distance import Matching, bottleneck, total_persistence, wasserstein
from .errors import (
    DegenerateInput,
    DimMismatch,
    FormatError,
    InvalidParameter,
    InvalidValue,
    SizeMismatch,
    TooLarge,
    TopocubeError,
)
from .filtration import Cell, Filtration, betti_numbers, build_superlevel_filtration
from .loss import (
    LossConfig,
    LossReport,
    bce_loss,
    dice_loss,
    topological_loss,
    topological_loss_gradient,
)
from .persistence import (
    DEFAULT_ENGINE,
    PersistenceDiagram,
    PersistencePair,
    available_engines,
    compute_persistence,
    diagram_from_pairs,
    diagrams_of,
    naive_reduce,
)
from .shape_metrics import MetricsReport, evaluate_pair
from .volume import (
    BinaryVolume,
    Volume,
    downsample_trilinear,
    load_volume,
    otsu_threshold,
    p_norm_diff,
    save_volume,
    upsample_repeat,
    volume_from_array,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryVolume",
    "Cell",
    "DEFAULT_ENGINE",
    "DegenerateInput",
    "DimMismatch",
    "Filtration",
    "FormatError",
    "InvalidParameter",
    "InvalidValue",
    "LossConfig",
    "LossReport",
    "Matching",
    "MetricsReport",
    "PersistenceDiagram",
    "PersistencePair",
    "SizeMismatch",
    "TooLarge",
    "TopocubeError",
    "Volume",
    "available_engines",
    "bce_loss",
    "betti_numbers",
    "bottleneck",
    "build_superlevel_filtration",
    "compute_persistence",
    "diagram_from_pairs",
    "diagrams_of",
    "dice_loss",
    "downsample_trilinear",
    "evaluate_pair",
    "load_volume",
    "naive_reduce",
    "otsu_threshold",
    "p_norm_diff",
    "save_volume",
    "topological_loss",
    "topological_loss_gradient",
    "total_persistence",
    "upsample_repeat",
    "volume_from_array",
    "wasserstein",
]
