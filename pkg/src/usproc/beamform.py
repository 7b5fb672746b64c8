"""Beamformers over TOF-corrected data: DAS, MV, Wiener, CF, iMAP, compounding.

Every estimator is per pixel: given the focused channel vector y_r it
produces a reflectivity estimate.  Pixels whose focused vector is entirely
zero yield 0 (avoids 0/0 in the adaptive weights at empty corners).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ApodizationWindow, BeamformedImage, FocusedTensor
from .errors import GridMismatchError, ShapeMismatchError
from .numerics import solve_hermitian

MEAN = "mean"
MV = "mv"


@dataclass(frozen=True)
class CovarianceConfig:
    """Spatial-smoothing setup for the per-pixel covariance estimate."""

    subaperture_length: int      # L, 1 <= L <= C
    temporal_half_window: int = 2   # K axial neighbors on each side
    loading_fraction: float = 0.01  # epsilon, diagonal loading vs trace/L

    def __post_init__(self):
        if self.subaperture_length < 1:
            raise ValueError("subaperture length must be >= 1")
        if self.temporal_half_window < 0:
            raise ValueError("temporal half window must be >= 0")
        if self.loading_fraction < 0:
            raise ValueError("loading fraction must be >= 0")


def default_covariance_config(num_channels: int) -> CovarianceConfig:
    """Common stable choices: L = C/2 (floor, min 1), K = 2, eps = 0.01."""
    return CovarianceConfig(max(num_channels // 2, 1), 2, 0.01)


def das(focused: FocusedTensor, apod: ApodizationWindow) -> BeamformedImage:
    """Delay-and-sum: per-pixel x_r = (1/C) w^H y_r."""
    vals = focused.values
    c = focused.num_channels
    if apod.weights.shape != (c,):
        raise ShapeMismatchError(
            f"shape-mismatch: {apod.weights.size} weights for {c} channels")
    rf = np.einsum("c,cxz->xz", np.conj(apod.weights), vals) / c
    return BeamformedImage(rf, focused.grid)


def estimate_covariance(neighborhood, cfg: CovarianceConfig) -> np.ndarray:
    """L x L covariance averaged over subapertures and axial neighbors.

    ``neighborhood`` is (C, n) with the pixel's own channel vector and its
    clamped 2K+1 axial neighbors as columns.  Diagonal loading adds
    eps * trace / L to every diagonal entry.
    """
    nb = np.asarray(neighborhood, dtype=np.complex128)
    if nb.ndim == 1:
        nb = nb[:, None]
    c = nb.shape[0]
    ell = cfg.subaperture_length
    if ell > c:
        raise ShapeMismatchError(f"shape-mismatch: L={ell} exceeds C={c}")
    wins = np.lib.stride_tricks.sliding_window_view(nb, ell, axis=0)
    rows = wins.reshape(-1, ell)
    gamma = (rows.T @ rows.conj()) / rows.shape[0]
    gamma = 0.5 * (gamma + gamma.conj().T)
    if cfg.loading_fraction > 0:
        gamma = gamma + (cfg.loading_fraction * np.trace(gamma).real / ell) \
            * np.eye(ell)
    return gamma


def _neighborhood(vals, ix, iz, half) -> np.ndarray:
    lo = max(iz - half, 0)
    hi = min(iz + half + 1, vals.shape[2])
    return vals[:, ix, lo:hi]


def _mv_pixel(vals, ix, iz, cfg, covariance_fn):
    """Per-pixel MV solve; returns (estimate, weights, covariance)."""
    center = vals[:, ix, iz]
    if not np.any(center):
        return 0.0 + 0.0j, None, None
    gamma = covariance_fn(_neighborhood(vals, ix, iz, cfg.temporal_half_window), cfg)
    ell = gamma.shape[0]
    w = solve_hermitian(gamma, np.ones(ell, dtype=np.complex128), 0.0)
    w = w / np.sum(w)
    subs = np.lib.stride_tricks.sliding_window_view(center, ell)
    est = np.mean(subs @ np.conj(w))
    return est, w, gamma


def _column_map(fn, nx, threads):
    if threads <= 1:
        for ix in range(nx):
            fn(ix)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, range(nx)))


def mv(focused: FocusedTensor, cfg: CovarianceConfig | None = None,
       covariance_fn=estimate_covariance, threads: int = 1) -> BeamformedImage:
    """Minimum-variance (Capon) beamformer.

    Per pixel: w = Gamma^-1 1 normalized to unity gain (1^H w = 1), estimate
    averaged over the sliding subapertures.  ``covariance_fn`` may replace
    the default estimator (e.g. for analysis with a known covariance).
    """
    vals = focused.values
    if cfg is None:
        cfg = default_covariance_config(focused.num_channels)
    nx, nz = focused.grid.shape
    rf = np.zeros((nx, nz), dtype=np.complex128)

    def run_column(ix):
        for iz in range(nz):
            rf[ix, iz] = _mv_pixel(vals, ix, iz, cfg, covariance_fn)[0]

    _column_map(run_column, nx, threads)
    return BeamformedImage(rf, focused.grid)


def wiener(focused: FocusedTensor, cfg: CovarianceConfig | None = None,
           covariance_fn=estimate_covariance, threads: int = 1) -> BeamformedImage:
    """MV beamformer followed by the Wiener post-filter.

    The unknown signal power uses the plug-in estimate |x_MV|^2, scaling the
    MV output by H = sigma_x^2 / (sigma_x^2 + w^H Gamma w).
    """
    vals = focused.values
    if cfg is None:
        cfg = default_covariance_config(focused.num_channels)
    nx, nz = focused.grid.shape
    rf = np.zeros((nx, nz), dtype=np.complex128)

    def run_column(ix):
        for iz in range(nz):
            est, w, gamma = _mv_pixel(vals, ix, iz, cfg, covariance_fn)
            if w is None:
                continue
            sig = abs(est) ** 2
            if sig == 0.0:
                continue
            noise = (np.conj(w) @ gamma @ w).real
            rf[ix, iz] = sig / (sig + noise) * est

    _column_map(run_column, nx, threads)
    return BeamformedImage(rf, focused.grid)


def coherence_factor(focused: FocusedTensor) -> np.ndarray:
    """CF = |1^H y_r|^2 / (C y_r^H y_r) in [0, 1]; defined as 0 where y = 0."""
    vals = focused.values
    c = focused.num_channels
    num = np.abs(vals.sum(axis=0)) ** 2
    den = c * np.sum(np.abs(vals) ** 2, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cf = np.where(den > 0.0, num / np.maximum(den, 1e-300), 0.0)
    return np.minimum(cf, 1.0)


def cf_weighted_das(focused: FocusedTensor,
                    apod: ApodizationWindow) -> BeamformedImage:
    """Coherence-factor post-filtered DAS: x_CF = CF * x_DAS."""
    base = das(focused, apod)
    return BeamformedImage(coherence_factor(focused) * base.rf, focused.grid)


def imap(focused: FocusedTensor, iterations: int = 2) -> BeamformedImage:
    """Iterative MAP beamformer with data-driven variance estimates.

    Starting from the DAS estimate, alternate
    sigma_x^2 = |x|^2, sigma_n^2 = ||y - 1 x||^2 / C and
    x <- sigma_x^2 / (C sigma_x^2 + sigma_n^2) * 1^H y.
    Two iterations are the standard operating point.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    vals = focused.values
    c = focused.num_channels
    total = vals.sum(axis=0)          # 1^H y, fixed across iterations
    x = total / c                     # DAS initialization
    for _ in range(iterations):
        sig_x = np.abs(x) ** 2
        sig_n = np.mean(np.abs(vals - x[None]) ** 2, axis=0)
        den = c * sig_x + sig_n
        with np.errstate(invalid="ignore", divide="ignore"):
            x = np.where(den > 0.0, sig_x / np.maximum(den, 1e-300) * total, 0.0)
    return BeamformedImage(x, focused.grid)


def compound(images, mode: str = MEAN, cfg: CovarianceConfig | None = None,
             covariance_fn=None) -> BeamformedImage:
    """Aggregate per-transmit images: coherent mean or MV over transmits.

    MV mode estimates the transmit covariance per pixel from the
    (2K+1)^2 spatial neighborhood with diagonal loading eps.
    """
    images = list(images)
    if not images:
        raise ShapeMismatchError("shape-mismatch: need at least one image")
    grid = images[0].grid
    for img in images[1:]:
        if not (np.array_equal(img.grid.lateral_coords, grid.lateral_coords)
                and np.array_equal(img.grid.axial_coords, grid.axial_coords)):
            raise GridMismatchError("grid-mismatch: images share no common grid")
    stack = np.stack([img.rf for img in images])  # (E, Rx, Rz)
    if mode == MEAN:
        return BeamformedImage(stack.mean(axis=0), grid)
    if mode != MV:
        raise ValueError(f"unknown compounding mode {mode!r}")

    e_count = stack.shape[0]
    if cfg is None:
        cfg = CovarianceConfig(e_count, 2, 0.01)
    k = cfg.temporal_half_window
    eps = cfg.loading_fraction
    nx, nz = grid.shape
    rf = np.zeros((nx, nz), dtype=np.complex128)
    for ix in range(nx):
        xlo, xhi = max(ix - k, 0), min(ix + k + 1, nx)
        for iz in range(nz):
            center = stack[:, ix, iz]
            if not np.any(center):
                continue
            zlo, zhi = max(iz - k, 0), min(iz + k + 1, nz)
            patch = stack[:, xlo:xhi, zlo:zhi].reshape(e_count, -1)
            if covariance_fn is not None:
                gamma = covariance_fn(patch, cfg)
            else:
                gamma = (patch @ patch.conj().T) / patch.shape[1]
                gamma = 0.5 * (gamma + gamma.conj().T)
                if eps > 0:
                    gamma = gamma + (eps * np.trace(gamma).real / e_count) \
                        * np.eye(e_count)
            w = solve_hermitian(gamma, np.ones(e_count, dtype=np.complex128), 0.0)
            w = w / np.sum(w)
            rf[ix, iz] = np.conj(w) @ center
    return BeamformedImage(rf, grid)
