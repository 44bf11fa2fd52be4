"""Two-level patch fitting: edge-preserving smoothing and edge strength.

For each patch we search for the binary-mask, two-intensity patch that is
nearest in W1 distance, subject to mass conservation.  Candidate masks are
the level sets of the patch intensities (pixels above each distinct
value); for a fixed mask the upper level is optimized by golden-section
search with the lower level pinned by mass conservation.  The fitted
levels drive smoothing (replace each patch by its two-level fit) and edge
detection (the level gap |a - b| per patch footprint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .ot_core import grid_cost_cached, solve_surplus_transport, transport_cost, work_matrix
from .whog import PatchGrid, patch_origins

_LEVEL_TOL = 1e-6   # golden-section interval tolerance, relative to the range
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class TwoColorModel:
    """Binary mask with two intensity levels fitted to a patch.

    Mass conservation binds: a*|z| + b*(n^2-|z|) equals the patch mass, and
    the constructor refuses triples that violate it.  Levels are canonical
    with a >= b.
    """

    mask: np.ndarray
    level_a: float
    level_b: float
    distance: float
    patch_mass: float

    def __post_init__(self):
        mask = np.ascontiguousarray(self.mask, dtype=bool).copy()
        mask.setflags(write=False)
        a = float(self.level_a)
        b = float(self.level_b)
        if a < 0.0 or b < 0.0:
            raise ValueError("levels must be non-negative")
        if a < b:
            raise ValueError("levels must satisfy a >= b (swap the mask)")
        if float(self.distance) < 0.0:
            raise ValueError("distance must be non-negative")
        total = float(self.patch_mass)
        k = int(mask.sum())
        fitted = a * k + b * (mask.size - k)
        if abs(fitted - total) > 1e-9 * max(total, 1e-300):
            raise ValueError("levels violate mass conservation")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "level_a", a)
        object.__setattr__(self, "level_b", b)
        object.__setattr__(self, "distance", float(self.distance))
        object.__setattr__(self, "patch_mass", total)

    def fitted_pixels(self):
        """Flat two-level intensity vector a*z + b*(1-z)."""
        return np.where(self.mask, self.level_a, self.level_b)


@dataclass(frozen=True, eq=False)
class NoiseScoreMap:
    """Per-pixel transport activity: row plus column sums of the work matrix."""

    scores: np.ndarray
    work_total: float


def _w1_distance(source_flat, target_flat, cost):
    return transport_cost(source_flat, target_flat, cost)


def _level_for_mask(pix, z, k, total, cost, flat_distance):
    # For a fixed mask, b is pinned by mass conservation, leaving the upper
    # level a free on [mean, total/k] (a >= b and b >= 0 respectively).  The
    # W1 objective is convex in a, so golden-section search applies; the
    # within-class mean is evaluated explicitly because it is exact for
    # genuinely two-valued patches.  At a = mean the target is flat for any
    # mask, so that endpoint value is shared by the caller.
    length = pix.size
    mean = total / length
    lo, hi = mean, total / k

    def target(a):
        # max() absorbs -1e-17-scale dust at the a = total/k endpoint
        b = max((total - a * k) / (length - k), 0.0)
        return np.where(z, a, b)

    def value(a):
        return _w1_distance(pix, target(a), cost)

    best_a = lo
    best_d = flat_distance
    for a in (hi, min(max(float(pix[z].mean()), lo), hi)):
        d = value(a)
        if d < best_d:
            best_d, best_a = d, a

    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = value(x1), value(x2)
    tol = _LEVEL_TOL * max(hi - lo, 1.0)
    a_lo, a_hi = lo, hi
    while a_hi - a_lo > tol:
        if f1 <= f2:
            a_hi, x2, f2 = x2, x1, f1
            x1 = a_hi - _GOLDEN * (a_hi - a_lo)
            f1 = value(x1)
            d, a = f1, x1
        else:
            a_lo, x1, f1 = x1, x2, f2
            x2 = a_lo + _GOLDEN * (a_hi - a_lo)
            f2 = value(x2)
            d, a = f2, x2
        if d < best_d:
            best_d, best_a = d, a

    b = (total - best_a * k) / (length - k)
    return best_d, best_a, max(b, 0.0)


def fit_two_color(patch):
    """Fit the nearest-in-W1 two-level patch by threshold-partition search.

    Candidate masks are the level sets ``pixels > t`` for every distinct
    intensity t below the maximum, plus the flat (all-one-level) model.
    Exactly two-valued patches are recovered with distance zero.
    """
    if patch.side < 2:
        raise ValueError("two-color fitting needs side >= 2")
    pix = patch.pixels.ravel()
    total = float(pix.sum())
    if total <= 0.0:
        raise DegenerateInputError("patch has no mass")
    length = pix.size
    mean = total / length
    values = np.unique(pix)

    if values.size == 1:
        return TwoColorModel(
            mask=np.ones(length, dtype=bool),
            level_a=float(values[0]),
            level_b=float(values[0]),
            distance=0.0,
            patch_mass=total,
        )

    cost = grid_cost_cached(patch.side)
    if values.size == 2:
        z = pix == values[1]
        return TwoColorModel(
            mask=z,
            level_a=float(values[1]),
            level_b=float(values[0]),
            distance=_w1_distance(pix, np.where(z, values[1], values[0]), cost),
            patch_mass=total,
        )

    # Flat model: no mask structure, both levels at the mean.
    flat_distance = _w1_distance(pix, np.full(length, mean), cost)
    best = (flat_distance, np.ones(length, dtype=bool), mean, mean)
    for t in values[:-1]:
        z = pix > t
        k = int(z.sum())
        d, a, b = _level_for_mask(pix, z, k, total, cost, flat_distance)
        if d < best[0]:
            best = (d, z, a, b)

    _, z, a, b = best
    k = int(z.sum())
    # Re-derive b from the final a so conservation holds to rounding, then
    # re-score through the plan-producing solver so the reported distance is
    # exactly its objective.
    b = max((total - a * k) / (length - k), 0.0) if k < length else a
    fitted = np.where(z, a, b)
    plan = solve_surplus_transport(pix, fitted, cost)
    distance = plan.objective if plan is not None else 0.0
    return TwoColorModel(mask=z, level_a=a, level_b=b, distance=distance, patch_mass=total)


def _fit_pixels_for_patch(crop):
    total = float(crop.sum())
    if total <= 0.0:
        return crop  # zero-mass patches pass through unchanged
    model = fit_two_color(PatchGrid(side=crop.shape[0], pixels=crop))
    return model.fitted_pixels().reshape(crop.shape)


def smooth_image(image, patch_side, stride):
    """Replace every patch by its two-level fit, averaging overlaps.

    Pixels not covered by any patch (possible when the stride does not
    divide the image cleanly) are passed through unchanged.
    """
    img = image.as_2d() if hasattr(image, "as_2d") else np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be two-dimensional")
    n = int(patch_side)
    acc = np.zeros_like(img)
    cover = np.zeros(img.shape, dtype=np.int64)
    for r, c in patch_origins(img.shape[0], img.shape[1], n, stride):
        acc[r : r + n, c : c + n] += _fit_pixels_for_patch(img[r : r + n, c : c + n])
        cover[r : r + n, c : c + n] += 1
    out = img.copy()
    covered = cover > 0
    out[covered] = acc[covered] / cover[covered]
    return out


def edge_map(image, patch_side, stride, threshold=None):
    """Per-pixel edge strength from the fitted level gap |a - b|.

    Each patch writes its gap over its footprint; overlaps are averaged and
    uncovered pixels stay zero.  With ``threshold`` the binary map
    ``strength > threshold`` is returned alongside the float map.
    """
    img = image.as_2d() if hasattr(image, "as_2d") else np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be two-dimensional")
    n = int(patch_side)
    acc = np.zeros_like(img)
    cover = np.zeros(img.shape, dtype=np.int64)
    for r, c in patch_origins(img.shape[0], img.shape[1], n, stride):
        crop = img[r : r + n, c : c + n]
        total = float(crop.sum())
        if total <= 0.0:
            gap = 0.0
        else:
            model = fit_two_color(PatchGrid(side=n, pixels=crop))
            gap = model.level_a - model.level_b
        acc[r : r + n, c : c + n] += gap
        cover[r : r + n, c : c + n] += 1
    strength = np.zeros_like(img)
    covered = cover > 0
    strength[covered] = acc[covered] / cover[covered]
    if threshold is None:
        return strength
    return strength, strength > float(threshold)


def noise_scores(patch, model, against="fit"):
    """Per-pixel transport activity of a patch against its fitted target.

    score(p) sums the work moved away from p plus the work received at p in
    the optimal plan; the total over all pixels is twice the transport
    work.  ``against="uniform"`` scores against the flat mean patch
    instead of the two-level fit.
    """
    if against not in ("fit", "uniform"):
        raise ValueError("against must be 'fit' or 'uniform'")
    pix = patch.pixels.ravel()
    if against == "fit":
        target = model.fitted_pixels()
    else:
        target = np.full(pix.size, float(pix.sum()) / pix.size)
    cost = grid_cost_cached(patch.side)
    plan = solve_surplus_transport(pix, target, cost)
    if plan is None:
        return NoiseScoreMap(scores=np.zeros(patch.pixels.shape), work_total=0.0)
    w = work_matrix(plan, cost).entries
    scores = w.sum(axis=1) + w.sum(axis=0)
    return NoiseScoreMap(
        scores=scores.reshape(patch.pixels.shape), work_total=float(w.sum())
    )


def otsu_threshold(values, bins=256):
    """Otsu's threshold over a sample of non-negative values."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    vals = vals[np.isfinite(vals)]
    if vals.size == 0 or vals.max() <= vals.min():
        return 0.0
    hist, edges = np.histogram(vals, bins=int(bins), range=(vals.min(), vals.max()))
    centers = (edges[:-1] + edges[1:]) / 2.0
    weights = hist.astype(np.float64) / hist.sum()
    w0 = np.cumsum(weights)
    w1 = 1.0 - w0
    cum_mean = np.cumsum(weights * centers)
    total_mean = cum_mean[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum_mean / w0
        mu1 = (total_mean - cum_mean) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[~np.isfinite(between)] = -1.0
    return float(centers[int(np.argmax(between))])
