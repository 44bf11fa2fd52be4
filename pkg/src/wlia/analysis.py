"""Directionality-entropy scoring and two-group survival comparison.

Regions of interest are summarised by the Shannon entropy (bits) of their
pooled orientation histogram; samples are split at the median entropy and
the two groups compared with the standard log-rank statistic.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRoiError, UndefinedEntropyError
from .whog import PatchGrid


@dataclass(frozen=True, eq=False)
class RoiSample:
    """One region of interest: its patch histograms and pooled entropy."""

    sample_id: str
    histograms: tuple
    entropy: float

    @classmethod
    def from_histograms(cls, sample_id, histograms):
        return cls(
            sample_id=str(sample_id),
            histograms=tuple(histograms),
            entropy=directionality_entropy(histograms),
        )


@dataclass(frozen=True)
class SurvivalRecord:
    """Follow-up time, event flag and group label for one sample."""

    sample_id: str
    time: float
    event: bool
    group: str

    def __post_init__(self):
        if not self.time > 0.0:
            raise ValueError("survival time must be positive")


def sample_patches(image, roi_mask, count, patch_side, seed):
    """Draw patch positions uniformly (with replacement) inside a mask.

    A position is valid when the whole patch lies inside the mask.  The
    draw uses a seeded PCG64 generator, so results are reproducible across
    runs and platforms.
    """
    img = image.as_2d() if hasattr(image, "as_2d") else np.asarray(image, dtype=np.float64)
    mask = roi_mask.as_2d() if hasattr(roi_mask, "as_2d") else np.asarray(roi_mask)
    mask = mask > 0
    if img.shape != mask.shape:
        raise ValueError("image and mask shapes differ")
    n = int(patch_side)
    if n < 1 or int(count) < 1:
        raise ValueError("patch side and count must be positive")
    if img.shape[0] < n or img.shape[1] < n:
        raise EmptyRoiError("image is smaller than one patch")

    window = np.lib.stride_tricks.sliding_window_view(mask, (n, n))
    valid = window.all(axis=(2, 3))
    origins = np.argwhere(valid)
    if origins.shape[0] == 0:
        raise EmptyRoiError("mask admits no fully-covered patch position")

    rng = np.random.default_rng(int(seed))
    picks = rng.integers(0, origins.shape[0], size=int(count))
    patches = []
    for k in picks:
        r, c = (int(x) for x in origins[k])
        patches.append(PatchGrid(side=n, pixels=img[r : r + n, c : c + n], origin=(r, c)))
    return patches


def directionality_entropy(histograms):
    """Shannon entropy (bits) of the pooled, normalized histogram."""
    histograms = list(histograms)
    if not histograms:
        raise UndefinedEntropyError("no histograms supplied")
    pooled = np.zeros_like(np.asarray(histograms[0].bins, dtype=np.float64))
    for h in histograms:
        pooled = pooled + h.bins
    total = float(pooled.sum())
    if total <= 0.0:
        raise UndefinedEntropyError("pooled histogram carries no mass")
    p = pooled / total
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def median_split(samples):
    """Split samples at the median entropy: strictly above goes high.

    Samples at exactly the median go to the low group; with an even count
    the median is the mean of the two central values.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("median split needs at least two samples")
    med = statistics.median(s.entropy for s in samples)
    high = [s for s in samples if s.entropy > med]
    low = [s for s in samples if s.entropy <= med]
    return high, low


def logrank_test(records):
    """Two-group log-rank test.

    At each distinct event time the observed-minus-expected events in the
    first group (labels sorted) accumulate against the hypergeometric
    variance; the statistic is chi-square with one degree of freedom and
    the p-value its upper tail.
    """
    records = list(records)
    groups = sorted({r.group for r in records})
    if len(groups) != 2:
        raise ValueError("log-rank test needs exactly two groups")
    g0 = groups[0]
    for g in groups:
        if not any(r.event for r in records if r.group == g):
            raise ValueError(f"group {g!r} has no events")

    times = np.array([r.time for r in records])
    events = np.array([r.event for r in records], dtype=bool)
    in_g0 = np.array([r.group == g0 for r in records], dtype=bool)

    observed_minus_expected = 0.0
    variance = 0.0
    for t in np.unique(times[events]):
        at_risk = times >= t
        n = int(at_risk.sum())
        n1 = int((at_risk & in_g0).sum())
        dead = events & (times == t)
        d = int(dead.sum())
        d1 = int((dead & in_g0).sum())
        frac = n1 / n
        observed_minus_expected += d1 - d * frac
        if n > 1:
            variance += d * frac * (1.0 - frac) * (n - d) / (n - 1)

    if variance <= 0.0:
        return 0.0, 1.0
    chi_square = observed_minus_expected**2 / variance
    return chi_square, chi_square_1df_pvalue(chi_square)


def chi_square_1df_pvalue(x):
    """Upper tail of the chi-square distribution with one degree of freedom.

    Closed form via the complementary error function, exact to machine
    precision.
    """
    if x < 0.0:
        raise ValueError("chi-square statistic must be non-negative")
    return math.erfc(math.sqrt(x / 2.0))
