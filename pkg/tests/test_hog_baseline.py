"""Gradient-histogram baseline: kernels, binning and block normalization."""

import math

import numpy as np
import pytest

from wlia.hog_baseline import block_normalize, gradients, histogram_grid, hog_image, hog_patch
from wlia.synthetic import step_edge_array

import oracles


class TestGradients:
    def test_constant_image(self):
        field = gradients(np.full((5, 5), 7.0))
        assert np.all(field.gx == 0.0)
        assert np.all(field.gy == 0.0)
        assert not field.defined.any()
        assert np.all(field.magnitude == 0.0)

    def test_horizontal_ramp(self):
        image = np.tile(np.arange(6, dtype=float), (5, 1))
        field = gradients(image)
        interior = field.gx[1:-1, 1:-1]
        assert np.all(interior == -2.0)
        assert np.all(field.gy == 0.0)
        assert np.all(field.orientation[field.defined] == 0.0)

    def test_matches_correlation_oracle(self):
        rng = np.random.default_rng(53)
        image = rng.random((8, 8))
        field = gradients(image)
        assert np.array_equal(field.gx, oracles.correlate_1x3(image, horizontal=True))
        assert np.array_equal(field.gy, oracles.correlate_1x3(image, horizontal=False))

    def test_pure_vertical_gradient_orientation(self):
        image = np.tile(np.arange(5, dtype=float)[:, None], (1, 5))
        field = gradients(image)
        inner = field.orientation[1:-1, 1:-1]
        assert np.allclose(inner, math.pi / 2.0)

    def test_small_image_rejected(self):
        with pytest.raises(ValueError):
            gradients(np.ones((2, 5)))

    def test_affine_intensity_invariance(self):
        rng = np.random.default_rng(59)
        image = rng.random((8, 8))
        base = gradients(image)
        scaled = gradients(2.0 * image + 5.0)
        assert np.array_equal(base.defined, scaled.defined)
        assert np.allclose(
            scaled.orientation[base.defined], base.orientation[base.defined], atol=1e-12
        )
        assert np.allclose(scaled.magnitude, 2.0 * base.magnitude, rtol=1e-12)


class TestHogPatch:
    def test_constant_patch_zero(self):
        hist = hog_patch(gradients(np.full((8, 8), 3.0)), 9)
        assert np.all(hist.bins == 0.0)

    def test_horizontal_ramp_bin_zero(self):
        image = np.tile(np.arange(8, dtype=float), (8, 1))
        hist = hog_patch(gradients(image), 9)
        assert hist.bins[0] == hist.total
        assert hist.total > 0.0

    def test_diagonal_ramp_bin_two(self):
        rows = np.arange(8, dtype=float)
        image = rows[:, None] + rows[None, :]
        field = gradients(image)
        hist = hog_patch(field, 9)
        # interior orientation is 45 degrees -> bin floor(45 / 20) = 2
        assert int(np.argmax(hist.bins)) == 2
        interior = field.orientation[1:-1, 1:-1]
        assert np.allclose(interior, math.pi / 4.0)

    def test_magnitude_weighting(self):
        image = step_edge_array(8, 8)
        hist = hog_patch(gradients(image), 9)
        assert hist.total == pytest.approx(float(gradients(image).magnitude.sum()), rel=1e-12)


class TestBlockNormalize:
    def test_single_block_equal_bins(self):
        grid = np.full((2, 2, 9), 2.0)
        blocks = block_normalize(grid)
        assert blocks.shape == (1, 1, 36)
        assert np.allclose(blocks, 1.0 / math.sqrt(36.0), atol=1e-5)

    def test_zero_histograms_stay_zero(self):
        blocks = block_normalize(np.zeros((3, 3, 9)))
        assert np.all(blocks == 0.0)

    def test_norms_near_one_for_nonzero_blocks(self):
        rng = np.random.default_rng(61)
        grid = rng.random((4, 5, 9)) + 0.1
        blocks = block_normalize(grid)
        norms = np.sqrt((blocks**2).sum(axis=2))
        assert np.all(norms <= 1.0)
        assert np.all(norms >= 1.0 - 1e-3)

    def test_requires_full_block(self):
        with pytest.raises(ValueError):
            block_normalize(np.zeros((1, 3, 9)))


class TestHogImage:
    def test_tiling_matches_whog_tiling(self):
        rng = np.random.default_rng(67)
        image = rng.random((16, 16))
        results = hog_image(image, 8, 8, 9)
        assert [origin for origin, _ in results] == [(0, 0), (0, 8), (8, 0), (8, 8)]

    def test_histogram_grid_layout(self):
        rng = np.random.default_rng(71)
        image = rng.random((16, 24))
        results = hog_image(image, 8, 8, 9)
        grid = histogram_grid(results, 9)
        assert grid.shape == (2, 3, 9)
        assert np.array_equal(grid[0, 1], dict(results)[(0, 8)].bins)
