"""Transport-based local image analysis.

Exact optimal transport between image patches and their one- or two-level
summaries yields noise-robust orientation histograms, edge-preserving
smoothing, edge strength maps and a directionality-entropy pipeline.
"""

from .analysis import (
    RoiSample,
    SurvivalRecord,
    directionality_entropy,
    logrank_test,
    median_split,
    sample_patches,
)
from .errors import (
    DegenerateInputError,
    EmptyRoiError,
    ImageFormatError,
    MassImbalanceError,
    UndefinedEntropyError,
)
from .hog_baseline import GradientField, block_normalize, gradients, hog_image, hog_patch
from .images import GrayImage, load_image, save_image
from .ot_core import (
    DensityVector,
    GridCostMatrix,
    TransportPlan,
    WorkMatrix,
    build_grid_cost,
    solve_surplus_transport,
    solve_transport,
    surplus_densities,
    transport_cost,
    work_matrix,
)
from .two_color import NoiseScoreMap, TwoColorModel, edge_map, fit_two_color, noise_scores, smooth_image
from .whog import (
    DirectionHistogram,
    PatchGrid,
    bin_work,
    patch_origins,
    pooled_histogram,
    route_direction,
    uniform_mean_target,
    whog_image,
    whog_patch,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateInputError",
    "DensityVector",
    "DirectionHistogram",
    "EmptyRoiError",
    "GradientField",
    "GrayImage",
    "GridCostMatrix",
    "ImageFormatError",
    "MassImbalanceError",
    "NoiseScoreMap",
    "PatchGrid",
    "RoiSample",
    "SurvivalRecord",
    "TransportPlan",
    "TwoColorModel",
    "UndefinedEntropyError",
    "WorkMatrix",
    "bin_work",
    "block_normalize",
    "build_grid_cost",
    "directionality_entropy",
    "edge_map",
    "fit_two_color",
    "gradients",
    "hog_image",
    "hog_patch",
    "load_image",
    "logrank_test",
    "median_split",
    "noise_scores",
    "patch_origins",
    "pooled_histogram",
    "route_direction",
    "sample_patches",
    "save_image",
    "smooth_image",
    "solve_surplus_transport",
    "solve_transport",
    "surplus_densities",
    "transport_cost",
    "uniform_mean_target",
    "whog_image",
    "whog_patch",
    "work_matrix",
]
