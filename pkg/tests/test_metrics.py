"""FWHM, contrast, CNR, NMSE."""

import numpy as np
import pytest

from usproc.core import ImagingGrid
from usproc.errors import (
    EmptyRegionError,
    HalfLevelNotCrossedError,
    NoPeakError,
    ZeroMeanError,
    ZeroVarianceError,
)
from usproc.metrics import RegionSpec, cnr, contrast_db, fwhm, nmse


class TestFwhm:
    def test_gaussian(self):
        x = np.arange(-5e-3, 5e-3, 5e-5)
        sigma = 1e-3
        profile = np.exp(-x ** 2 / (2 * sigma ** 2))
        width = fwhm(profile, 5e-5)
        assert width == pytest.approx(2.3548 * sigma, rel=0.01)

    def test_rectangle(self):
        spacing = 0.1e-3
        profile = np.array([0, 0, 1, 1, 1, 0, 0], dtype=float)
        width = fwhm(profile, spacing)
        assert abs(width - 3 * spacing) <= spacing

    def test_triangle_half_base(self):
        profile = np.array([0, 1 / 3, 2 / 3, 1.0, 2 / 3, 1 / 3, 0])
        spacing = 1e-3
        width = fwhm(profile, spacing)
        assert abs(width - 3 * spacing) <= spacing

    def test_no_peak(self):
        with pytest.raises(NoPeakError, match="no-peak"):
            fwhm(np.zeros(8), 1.0)

    def test_half_level_not_crossed(self):
        with pytest.raises(HalfLevelNotCrossedError, match="half-level"):
            fwhm(np.array([0.9, 1.0, 0.9]), 1.0)


def make_grid():
    return ImagingGrid.regular(-5e-3, 5e-3, 21, 1e-3, 11e-3, 21)


class TestContrast:
    def test_identical_regions_zero_db(self):
        grid = make_grid()
        img = np.ones(grid.shape)
        region = RegionSpec(-2e-3, 2e-3, 2e-3, 6e-3)
        assert contrast_db(img, grid, region, region) == 0.0

    def test_ratio_ten_is_twenty_db(self):
        grid = make_grid()
        img = np.ones(grid.shape)
        img[grid.lateral_coords > 0, :] = 10.0
        a = RegionSpec(1e-3, 2e-3, 5e-3, 10e-3)
        b = RegionSpec(-5e-3, 2e-3, -1e-3, 10e-3)
        assert contrast_db(img, grid, a, b) == pytest.approx(20.0, abs=1e-12)

    def test_antisymmetry(self):
        grid = make_grid()
        rng = np.random.default_rng(0)
        img = rng.random(grid.shape) + 0.5
        a = RegionSpec(-4e-3, 2e-3, -1e-3, 6e-3)
        b = RegionSpec(1e-3, 2e-3, 4e-3, 6e-3)
        assert contrast_db(img, grid, a, b) == pytest.approx(
            -contrast_db(img, grid, b, a), abs=1e-12)

    def test_empty_region(self):
        grid = make_grid()
        far = RegionSpec(1.0, 1.0, 2.0, 2.0)
        with pytest.raises(EmptyRegionError, match="empty-region"):
            contrast_db(np.ones(grid.shape), grid, far, far)

    def test_zero_mean_reference(self):
        grid = make_grid()
        img = np.zeros(grid.shape)
        region = RegionSpec(-2e-3, 2e-3, 2e-3, 6e-3)
        with pytest.raises(ZeroMeanError, match="zero-mean-b"):
            contrast_db(img, grid, region, region)


class TestCnr:
    def test_constant_regions_error(self):
        grid = make_grid()
        img = np.ones(grid.shape)
        region = RegionSpec(-2e-3, 2e-3, 2e-3, 6e-3)
        with pytest.raises(ZeroVarianceError, match="zero-variance"):
            cnr(img, grid, region, region)

    def test_known_value(self):
        grid = make_grid()
        rng = np.random.default_rng(1)
        img = np.zeros(grid.shape)
        mask_a = grid.lateral_coords[:, None] > 0
        img = np.where(mask_a, 2.0, 0.0) + rng.normal(0, 1.0, grid.shape)
        a = RegionSpec(0.6e-3, 1e-3, 5e-3, 11e-3)
        b = RegionSpec(-5e-3, 1e-3, -0.6e-3, 11e-3)
        value = cnr(img, grid, a, b)
        assert value == pytest.approx(2 / np.sqrt(2), rel=0.2)

    def test_scale_invariance(self):
        grid = make_grid()
        rng = np.random.default_rng(2)
        img = rng.random(grid.shape) + 0.1
        a = RegionSpec(-4e-3, 2e-3, -1e-3, 6e-3)
        b = RegionSpec(1e-3, 2e-3, 4e-3, 6e-3)
        assert cnr(7.3 * img, grid, a, b) == pytest.approx(
            cnr(img, grid, a, b), rel=1e-12)


class TestNmse:
    def test_equal_is_zero(self):
        x = np.arange(6.0)
        assert nmse(x, x) == 0.0

    def test_zero_estimate_is_one(self):
        x = np.arange(1.0, 7.0)
        assert nmse(np.zeros(6), x) == pytest.approx(1.0)

    def test_double_is_one(self):
        x = np.arange(1.0, 7.0)
        assert nmse(2 * x, x) == pytest.approx(1.0)
