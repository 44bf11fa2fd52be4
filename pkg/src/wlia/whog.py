"""Wasserstein histograms of orientations for image patches.

Each patch is transported to the flat patch holding its mean intensity;
the per-route workloads of the optimal plan are binned by route direction,
giving an orientation histogram whose bin sum equals the W1 distance to
the flat patch.  All functions here are pure, so patches may be processed
concurrently by callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError
from .ot_core import (
    DensityVector,
    grid_cost_cached,
    solve_transport,
    surplus_densities,
    work_matrix,
)

# Movable mass below this fraction of the patch mass is treated as zero
# (flat patches, numerical dust after shared-mass cancelling).
_FLAT_PATCH_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PatchGrid:
    """An n-by-n block of non-negative intensities cut from an image."""

    side: int
    pixels: np.ndarray
    origin: tuple = (0, 0)

    def __post_init__(self):
        side = int(self.side)
        if side < 1:
            raise ValueError("patch side must be positive")
        pix = np.ascontiguousarray(self.pixels, dtype=np.float64).copy()
        if pix.shape != (side, side):
            raise ValueError("pixels must be a (side, side) array")
        if not np.all(np.isfinite(pix)) or np.any(pix < 0.0):
            raise ValueError("patch pixels must be finite and non-negative")
        pix.setflags(write=False)
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "pixels", pix)
        object.__setattr__(self, "origin", (int(self.origin[0]), int(self.origin[1])))


@dataclass(frozen=True, eq=False)
class DirectionHistogram:
    """Non-negative masses over n_b orientation bins covering [0, pi)."""

    bins: np.ndarray
    n_b: int
    bin_width: float = field(init=False)

    def __post_init__(self):
        n_b = int(self.n_b)
        if n_b < 1:
            raise ValueError("bin count must be positive")
        bins = np.ascontiguousarray(self.bins, dtype=np.float64).copy()
        if bins.shape != (n_b,):
            raise ValueError("bins length must equal n_b")
        if np.any(bins < 0.0):
            raise ValueError("bins must be non-negative")
        bins.setflags(write=False)
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "n_b", n_b)
        object.__setattr__(self, "bin_width", math.pi / n_b)

    @property
    def total(self):
        return float(self.bins.sum())


def zero_histogram(n_b):
    return DirectionHistogram(bins=np.zeros(int(n_b)), n_b=int(n_b))


def uniform_mean_target(patch):
    """Flat density holding the patch mean at every pixel.

    The cached total is the patch total itself (sum first, divide once), so
    the pair (patch, target) is exactly balanced for the solver.
    """
    pix = patch.pixels
    total = float(pix.sum())
    if total <= 0.0:
        raise DegenerateInputError("patch has no mass")
    length = patch.side**2
    mean = total / length
    return DensityVector(masses=np.full(length, mean), total_mass=total)


def route_direction(i, j, side):
    """Orientation in [0, pi) of the transport route between flat indices.

    With (u, v) the row-major grid coordinates, the angle is
    arctan((v1 - v2) / (u1 - u2)) folded into [0, pi); same-row routes map
    to pi/2.
    """
    length = side * side
    if not (0 <= i < length and 0 <= j < length):
        raise ValueError("flat index out of range")
    if i == j:
        raise ValueError("stationary mass has no direction")
    u1, v1 = divmod(i, side)
    u2, v2 = divmod(j, side)
    theta = math.atan2(v1 - v2, u1 - u2) % math.pi
    return 0.0 if theta == math.pi else theta


@lru_cache(maxsize=32)
def _direction_bin_table(side, n_b):
    # Bin index per (i, j) route; the diagonal gets the overflow bin n_b,
    # which bin_work drops (its work entries are identically zero).
    length = side * side
    idx = np.arange(length)
    u = idx // side
    v = idx % side
    theta = np.arctan2(v[:, None] - v[None, :], u[:, None] - u[None, :])
    theta = np.mod(theta, np.pi)
    theta[theta == np.pi] = 0.0
    table = np.minimum(np.floor(theta / (math.pi / n_b)).astype(np.int64), n_b - 1)
    np.fill_diagonal(table, n_b)
    table.setflags(write=False)
    return table


def bin_work(work, side, n_b):
    """Accumulate off-diagonal workloads into orientation bins.

    Summation runs in fixed row-major order over the work matrix, so the
    result is bit-reproducible.
    """
    n_b = int(n_b)
    if n_b < 1:
        raise ValueError("bin count must be positive")
    entries = work.entries if hasattr(work, "entries") else np.asarray(work, dtype=np.float64)
    length = side * side
    if entries.shape != (length, length):
        raise ValueError("work matrix shape does not match the grid side")
    table = _direction_bin_table(int(side), n_b)
    sums = np.bincount(table.ravel(), weights=entries.ravel(), minlength=n_b + 1)
    return DirectionHistogram(bins=sums[:n_b].copy(), n_b=n_b)


def _lex_compare(a, b):
    diff = np.nonzero(a != b)[0]
    if diff.size == 0:
        return 0
    return -1 if a[diff[0]] < b[diff[0]] else 1


def _canonical_orientation(r0, r1):
    # A patch and its 180-degree rotation describe the same instance under
    # index reversal, and route directions are invariant to that reversal.
    # Solving the lexicographically smaller representative makes the
    # histogram exactly rotation-symmetric (and keeps it scale-equivariant,
    # since the comparison is numeric).
    c = _lex_compare(r0, r0[::-1])
    if c == 0:
        c = _lex_compare(r1, r1[::-1])
    if c > 0:
        return np.ascontiguousarray(r0[::-1]), np.ascontiguousarray(r1[::-1])
    return r0, r1


def whog_patch(patch, n_b):
    """Orientation histogram of the transport from a patch to its mean patch.

    Flat (or zero-mass) patches yield the all-zero histogram: their
    transport cost is genuinely zero.  Negative pixels are clamped to zero
    before densities are formed.
    """
    if patch.side < 2:
        raise ValueError("directional analysis needs side >= 2")
    pix = np.maximum(patch.pixels, 0.0).ravel()
    total = float(pix.sum())
    n_b = int(n_b)
    if n_b < 1:
        raise ValueError("bin count must be positive")
    if total <= 0.0:
        return zero_histogram(n_b)

    length = patch.side**2
    mean = total / length
    r0, r1 = surplus_densities(pix, np.full(length, mean))
    if float(r0.sum()) <= _FLAT_PATCH_RTOL * total or np.min(r1) < 0.0:
        return zero_histogram(n_b)

    r0, r1 = _canonical_orientation(r0, r1)
    cost = grid_cost_cached(patch.side)
    plan = solve_transport(DensityVector(r0), DensityVector(r1), cost)
    return bin_work(work_matrix(plan, cost), patch.side, n_b)


def patch_origins(height, width, side, stride):
    """Row-major origins of all patches fully inside a height-by-width image."""
    if side < 1 or stride < 1:
        raise ValueError("side and stride must be positive")
    if height < side or width < side:
        raise ValueError("image is smaller than one patch")
    rows = range(0, height - side + 1, stride)
    cols = range(0, width - side + 1, stride)
    return [(r, c) for r in rows for c in cols]


def whog_image(image, patch_side, stride, n_b):
    """Per-patch orientation histograms over a full image tiling.

    Returns a list of ``(origin, DirectionHistogram)`` in row-major origin
    order.  ``image`` may be a 2-D array or anything with ``as_2d()``.
    """
    img = image.as_2d() if hasattr(image, "as_2d") else np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be two-dimensional")
    out = []
    for r, c in patch_origins(img.shape[0], img.shape[1], patch_side, stride):
        patch = PatchGrid(side=patch_side, pixels=img[r : r + patch_side, c : c + patch_side], origin=(r, c))
        out.append(((r, c), whog_patch(patch, n_b)))
    return out


def pooled_histogram(histograms, n_b):
    """Sum a sequence of histograms (or raw bin arrays) into one."""
    bins = np.zeros(int(n_b))
    for h in histograms:
        bins += h.bins if hasattr(h, "bins") else np.asarray(h, dtype=np.float64)
    return DirectionHistogram(bins=bins, n_b=int(n_b))
