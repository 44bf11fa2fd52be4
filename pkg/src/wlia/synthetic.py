"""Synthetic test imagery: step edges, stripes and isotropic speckle.

The step-edge generator backs the noise-robustness benchmark when no input
image is given; the texture generators support cohort-style experiments.
"""

from __future__ import annotations

import numpy as np

from .whog import PatchGrid


def step_edge_array(height, width, edge_col=None, low=0.0, high=1.0):
    """Vertical step: columns left of ``edge_col`` hold ``low``, the rest ``high``."""
    if edge_col is None:
        edge_col = width // 2
    if not 0 < edge_col < width:
        raise ValueError("edge column must be interior")
    img = np.full((height, width), float(low))
    img[:, edge_col:] = float(high)
    return img


def step_edge_patch(side=8, low=0.0, high=1.0):
    """Square step-edge patch with the edge at the middle column."""
    return PatchGrid(side=side, pixels=step_edge_array(side, side, low=low, high=high))


def striped_array(height, width, period=2, low=0.0, high=1.0):
    """Vertical stripes alternating between two intensities."""
    if period < 1:
        raise ValueError("period must be positive")
    cols = (np.arange(width) // period) % 2
    return np.where(cols[None, :] == 0, float(low), float(high)) * np.ones((height, 1))


def speckle_array(height, width, seed, low=0.0, high=1.0):
    """Isotropic uniform-noise texture (no preferred direction)."""
    rng = np.random.default_rng(int(seed))
    return low + (high - low) * rng.random((height, width))
