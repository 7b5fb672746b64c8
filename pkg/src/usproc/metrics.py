"""Image-quality measurements: FWHM, contrast, CNR, NMSE.

Contrast and CNR are computed on the linear envelope, never the
log-compressed image, so the stated dB numbers are unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ImagingGrid
from .errors import (
    EmptyRegionError,
    HalfLevelNotCrossedError,
    NoPeakError,
    ShapeMismatchError,
    ZeroMeanError,
    ZeroVarianceError,
)


@dataclass(frozen=True)
class RegionSpec:
    """Axis-aligned rectangle (x0, z0, x1, z1) in meters on an imaging grid."""

    x0: float
    z0: float
    x1: float
    z1: float

    def mask(self, grid: ImagingGrid) -> np.ndarray:
        mx = (grid.lateral_coords >= min(self.x0, self.x1)) \
            & (grid.lateral_coords <= max(self.x0, self.x1))
        mz = (grid.axial_coords >= min(self.z0, self.z1)) \
            & (grid.axial_coords <= max(self.z0, self.z1))
        return mx[:, None] & mz[None, :]

    def pixels(self, image: np.ndarray, grid: ImagingGrid) -> np.ndarray:
        if image.shape != grid.shape:
            raise ShapeMismatchError("shape-mismatch: image does not match grid")
        vals = np.asarray(image)[self.mask(grid)]
        if vals.size == 0:
            raise EmptyRegionError(
                f"empty-region: rectangle ({self.x0}, {self.z0})-({self.x1}, "
                f"{self.z1}) selects no grid pixels")
        return vals


def fwhm(profile, spacing: float) -> float:
    """Linear-interpolated full width of a peak at half its maximum.

    Walks outward from the (first) global maximum; raises ``no-peak`` when
    there is no positive peak and ``half-level-not-crossed`` when a flank
    never drops through the half level inside the profile.
    """
    p = np.asarray(profile, dtype=np.float64)
    if p.ndim != 1 or p.size < 3:
        raise NoPeakError("no-peak: need a 1-D profile of length >= 3")
    peak_idx = int(np.argmax(p))
    peak = p[peak_idx]
    if not peak > 0:
        raise NoPeakError("no-peak: profile maximum is not positive")
    half = 0.5 * peak

    def crossing(direction: int) -> float:
        i = peak_idx
        while 0 <= i + direction < p.size:
            j = i + direction
            if p[j] < half:
                # linear interpolation between samples i and j
                frac = (p[i] - half) / (p[i] - p[j])
                return i + direction * frac
            i = j
        raise HalfLevelNotCrossedError(
            "half-level-not-crossed: profile never drops below half maximum")

    return float((crossing(+1) - crossing(-1)) * spacing)


def contrast_db(image_envelope, grid: ImagingGrid, region_a: RegionSpec,
                region_b: RegionSpec) -> float:
    """20 log10(mean_a / mean_b) on envelope values."""
    a = region_a.pixels(image_envelope, grid)
    b = region_b.pixels(image_envelope, grid)
    mb = float(np.mean(b))
    if mb == 0.0:
        raise ZeroMeanError("zero-mean-b: reference region has zero mean")
    return float(20.0 * np.log10(np.mean(a) / mb))


def cnr(image_envelope, grid: ImagingGrid, region_a: RegionSpec,
        region_b: RegionSpec) -> float:
    """|mean_a - mean_b| / sqrt(var_a + var_b) on envelope values."""
    a = region_a.pixels(image_envelope, grid)
    b = region_b.pixels(image_envelope, grid)
    var = float(np.var(a) + np.var(b))
    if var == 0.0:
        raise ZeroVarianceError("zero-variance-both: regions are constant")
    return float(abs(np.mean(a) - np.mean(b)) / np.sqrt(var))


def nmse(estimate, reference) -> float:
    """||est - ref||^2 / ||ref||^2 over arrays of identical shape."""
    est = np.asarray(estimate)
    ref = np.asarray(reference)
    if est.shape != ref.shape:
        raise ShapeMismatchError(
            f"shape-mismatch: {est.shape} vs {ref.shape}")
    denom = float(np.sum(np.abs(ref) ** 2))
    if denom == 0.0:
        raise ZeroMeanError("zero-mean-b: reference has zero energy")
    return float(np.sum(np.abs(est - ref) ** 2) / denom)
