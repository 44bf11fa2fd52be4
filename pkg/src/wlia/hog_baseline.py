"""Conventional histogram-of-oriented-gradients baseline.

Central-difference derivative filters [1 0 -1] (and its transpose) with
replicate border padding, gradient-magnitude-weighted orientation binning
over [0, pi), and overlapping 2x2 block L2 normalization.  Used as the
comparison method for the transport-based histograms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .whog import DirectionHistogram, patch_origins

_BLOCK_NORM_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-pixel derivatives, magnitudes and orientations of an image region.

    ``orientation`` lies in [0, pi); pixels with zero gradient are flagged
    in ``defined`` and contribute nothing downstream.
    """

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    orientation: np.ndarray
    defined: np.ndarray

    def crop(self, r, c, side):
        return GradientField(
            gx=self.gx[r : r + side, c : c + side],
            gy=self.gy[r : r + side, c : c + side],
            magnitude=self.magnitude[r : r + side, c : c + side],
            orientation=self.orientation[r : r + side, c : c + side],
            defined=self.defined[r : r + side, c : c + side],
        )


def gradients(image):
    """Derivative field of an image under the printed [1 0 -1] kernels.

    gx(r, c) = I(r, c-1) - I(r, c+1) and gy(r, c) = I(r-1, c) - I(r+1, c)
    (correlation convention); borders use replicate padding.
    """
    img = image.as_2d() if hasattr(image, "as_2d") else np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError("image must be at least 3x3")
    padded = np.pad(img, 1, mode="edge")
    gx = padded[1:-1, :-2] - padded[1:-1, 2:]
    gy = padded[:-2, 1:-1] - padded[2:, 1:-1]
    magnitude = np.hypot(gx, gy)
    defined = (gx != 0.0) | (gy != 0.0)
    orientation = np.mod(np.arctan2(gy, gx), math.pi)
    orientation[orientation == math.pi] = 0.0
    orientation[~defined] = 0.0
    return GradientField(gx=gx, gy=gy, magnitude=magnitude, orientation=orientation, defined=defined)


def hog_patch(field, n_b):
    """Magnitude-weighted orientation histogram of a gradient field."""
    n_b = int(n_b)
    if n_b < 1:
        raise ValueError("bin count must be positive")
    idx = np.minimum(
        np.floor(field.orientation / (math.pi / n_b)).astype(np.int64), n_b - 1
    )
    idx = np.where(field.defined, idx, n_b)
    sums = np.bincount(idx.ravel(), weights=field.magnitude.ravel(), minlength=n_b + 1)
    return DirectionHistogram(bins=sums[:n_b].copy(), n_b=n_b)


def hog_image(image, patch_side, stride, n_b):
    """Per-patch gradient histograms over a full image tiling.

    The gradient field is computed once on the whole image (replicate
    padding at the image border only), then cropped per patch, matching the
    tiling used for the transport histograms.
    """
    img = image.as_2d() if hasattr(image, "as_2d") else np.asarray(image, dtype=np.float64)
    field = gradients(img)
    out = []
    for r, c in patch_origins(img.shape[0], img.shape[1], patch_side, stride):
        out.append(((r, c), hog_patch(field.crop(r, c, patch_side), n_b)))
    return out


def histogram_grid(results, n_b):
    """Arrange row-major (origin, histogram) pairs into an (R, C, n_b) array."""
    rows = sorted({o[0] for o, _ in results})
    cols = sorted({o[1] for o, _ in results})
    grid = np.zeros((len(rows), len(cols), int(n_b)))
    row_of = {r: k for k, r in enumerate(rows)}
    col_of = {c: k for k, c in enumerate(cols)}
    for (r, c), hist in results:
        grid[row_of[r], col_of[c]] = hist.bins
    return grid


def block_normalize(grid, block=2):
    """L2-normalize overlapping blocks of patch histograms.

    Input is an (R, C, n_b) array of per-patch histograms; output is an
    (R-1, C-1, block*block*n_b) array, one normalized concatenated vector
    per stride-1 block.  Each vector is divided by its Euclidean norm plus
    a small epsilon, so all-zero blocks stay zero.
    """
    if int(block) != 2:
        raise ValueError("only 2x2 blocks are supported")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 3 or grid.shape[0] < 2 or grid.shape[1] < 2:
        raise ValueError("need at least one full 2x2 block of histograms")
    n_rows, n_cols, n_b = grid.shape
    blocks = np.concatenate(
        (
            grid[:-1, :-1].reshape(n_rows - 1, n_cols - 1, n_b),
            grid[:-1, 1:].reshape(n_rows - 1, n_cols - 1, n_b),
            grid[1:, :-1].reshape(n_rows - 1, n_cols - 1, n_b),
            grid[1:, 1:].reshape(n_rows - 1, n_cols - 1, n_b),
        ),
        axis=2,
    )
    norms = np.sqrt((blocks**2).sum(axis=2, keepdims=True))
    return blocks / (norms + _BLOCK_NORM_EPS)
