"""Ultrasound localization microscopy at desk scale.

Microbubbles are point scatterers on a high-resolution (HR) grid observed
through a Gaussian PSF and a block-averaging downsampler.  Localization is
either classic centroid detection on the low-resolution (LR) frame or sparse
coding: ISTA on the HR grid with forward = convolve-then-downsample, which
is what resolves bubbles below the diffraction-limited PSF width.

Coordinates are (x, z) = (axis 0, axis 1) fractional HR pixel indices
throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .sparse import Conv2Same, SparseProblem, ista


@dataclass(frozen=True)
class BubbleFrame:
    """One LR frame plus its ground-truth HR bubble positions."""

    image: np.ndarray   # (H0/f, H1/f) low-resolution frame
    truth: np.ndarray   # (n, 2) sub-pixel HR (x, z) positions

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.float64)
        tr = np.asarray(self.truth, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(tr)):
            raise ValueError("truth positions must be finite")
        img.flags.writeable = False
        tr.flags.writeable = False
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "truth", tr)


@dataclass(frozen=True)
class LocalizationSet:
    """Per-frame detections as an (n, 3) array of (x, z, intensity)."""

    detections: np.ndarray

    def __post_init__(self):
        det = np.asarray(self.detections, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(det)):
            raise ValueError("detections must be finite")
        det.flags.writeable = False
        object.__setattr__(self, "detections", det)

    def __len__(self):
        return self.detections.shape[0]


def gaussian_psf(sigma: float, radius: int | None = None) -> np.ndarray:
    """Unit-peak Gaussian kernel on (2r+1)^2 pixels, r defaulting to ceil(4 sigma)."""
    if sigma <= 0:
        raise ValueError("psf sigma must be > 0")
    r = int(math.ceil(4.0 * sigma)) if radius is None else int(radius)
    d = np.arange(-r, r + 1)
    return np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2.0 * sigma * sigma))


def block_average(x: np.ndarray, factor: int) -> np.ndarray:
    h0, h1 = x.shape
    if h0 % factor or h1 % factor:
        raise DimensionMismatchError(
            f"dimension-mismatch: shape {x.shape} not divisible by factor {factor}")
    return x.reshape(h0 // factor, factor, h1 // factor, factor).mean(axis=(1, 3))


def block_expand(y: np.ndarray, factor: int) -> np.ndarray:
    """Exact adjoint of :func:`block_average`: upsample and divide by f^2."""
    return np.repeat(np.repeat(y, factor, axis=0), factor, axis=1) / (factor * factor)


def render_frame(hr_shape, positions, sigma) -> np.ndarray:
    """Ground-truth HR frame: unit Gaussians at sub-pixel positions."""
    frame = np.zeros(hr_shape)
    if positions.size == 0:
        return frame
    gi = np.arange(hr_shape[0])[:, None]
    gj = np.arange(hr_shape[1])[None, :]
    for px, pz in positions:
        frame += np.exp(-((gi - px) ** 2 + (gj - pz) ** 2) / (2.0 * sigma * sigma))
    return frame


def reference_peak(psf_sigma: float, downsample_factor: int) -> float:
    """LR peak of one centered unit bubble; the SNR reference amplitude."""
    r = int(math.ceil(4.0 * psf_sigma)) + downsample_factor
    size = 2 * r * downsample_factor
    hr = render_frame((size, size), np.array([[size / 2.0, size / 2.0]]), psf_sigma)
    return float(block_average(hr, downsample_factor).max())


def simulate_bubbles(hr_shape, n_frames: int, mean_bubbles_per_frame: float,
                     psf_sigma: float, downsample_factor: int,
                     snr_db: float | None, seed: int) -> list[BubbleFrame]:
    """Poisson bubble counts at uniform sub-pixel HR positions, PSF-blurred,
    block-averaged to LR, plus white Gaussian noise at the given SNR
    (referenced to the LR peak of a single unit bubble)."""
    if downsample_factor < 1:
        raise ValueError("downsample factor must be >= 1")
    if psf_sigma <= 0:
        raise ValueError("psf sigma must be > 0")
    h0, h1 = hr_shape
    if h0 % downsample_factor or h1 % downsample_factor:
        raise DimensionMismatchError(
            f"dimension-mismatch: hr_shape {hr_shape} not divisible by "
            f"factor {downsample_factor}")
    rng = np.random.Generator(np.random.Philox(
        key=((seed & 0xFFFFFFFFFFFFFFFF) << 64) | 0xB0BB1E5))
    if snr_db is not None and math.isfinite(snr_db):
        noise_std = reference_peak(psf_sigma, downsample_factor) \
            * 10.0 ** (-snr_db / 20.0)
    else:
        noise_std = 0.0
    frames = []
    for _ in range(n_frames):
        count = int(rng.poisson(mean_bubbles_per_frame))
        pos = np.column_stack([rng.uniform(0.0, h0, count),
                               rng.uniform(0.0, h1, count)])
        lr = block_average(render_frame(hr_shape, pos, psf_sigma), downsample_factor)
        if noise_std > 0.0:
            lr = lr + noise_std * rng.standard_normal(lr.shape)
        frames.append(BubbleFrame(lr, pos))
    return frames


def max_correlation(frame, psf, downsample_factor: int) -> float:
    """||A^H y||_inf of the localization model; the natural lambda scale."""
    frame = np.asarray(frame, dtype=np.float64)
    f = int(downsample_factor)
    hr_shape = (frame.shape[0] * f, frame.shape[1] * f)
    op = Conv2Same(hr_shape, psf)
    return float(np.max(np.abs(op.adjoint(block_expand(frame, f)))))


def localize_sparse(frame, psf, lam: float, downsample_factor: int,
                    step: float | None = None, max_iters: int = 2000,
                    tol: float = 1e-6) -> np.ndarray:
    """Sparse-coding localization: ISTA on the HR grid, nonneg-clamped.

    ``psf`` must be normalized to unit peak.  Forward model: HR image
    convolved with the PSF, then block-averaged by ``downsample_factor``.
    """
    frame = np.asarray(frame, dtype=np.float64)
    psf = np.asarray(psf, dtype=np.float64)
    if abs(psf.max() - 1.0) > 1e-9:
        raise ValueError("psf must be normalized to unit peak")
    f = int(downsample_factor)
    hr_shape = (frame.shape[0] * f, frame.shape[1] * f)
    op = Conv2Same(hr_shape, psf)

    def forward(x):
        return block_average(op.forward(x).reshape(hr_shape), f).ravel()

    def adjoint(y):
        return op.adjoint(block_expand(y.reshape(frame.shape), f)).ravel()

    problem = SparseProblem(forward, adjoint, frame.ravel(), lam, step=step,
                            max_iters=max_iters, tol=tol)
    x, _, _ = ista(problem)
    return np.clip(np.real(x).reshape(hr_shape), 0.0, None)


def detect_centroids(frame, threshold_fraction: float,
                     window_radius: int) -> LocalizationSet:
    """Thresholded local maxima refined to intensity-weighted centroids.

    Maxima closer than ``window_radius`` (Euclidean) are merged keeping the
    brighter one; ties break to the smaller row then column index.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold fraction must lie in (0, 1)")
    if window_radius < 1:
        raise ValueError("window radius must be >= 1")
    frame = np.asarray(frame, dtype=np.float64)
    peak = frame.max() if frame.size else 0.0
    pad = np.pad(frame, 1, mode="constant", constant_values=-np.inf)
    is_max = np.ones(frame.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            shifted = pad[1 + di:1 + di + frame.shape[0],
                          1 + dj:1 + dj + frame.shape[1]]
            is_max &= frame >= shifted
    cand = np.argwhere(is_max & (frame > threshold_fraction * peak))
    order = np.lexsort((cand[:, 1], cand[:, 0], -frame[cand[:, 0], cand[:, 1]]))
    kept: list[np.ndarray] = []
    for idx in order:
        p = cand[idx]
        if all((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 >= window_radius ** 2
               for q in kept):
            kept.append(p)
    rows = []
    r = window_radius
    for p in kept:
        xlo, xhi = max(p[0] - r, 0), min(p[0] + r + 1, frame.shape[0])
        zlo, zhi = max(p[1] - r, 0), min(p[1] + r + 1, frame.shape[1])
        win = np.clip(frame[xlo:xhi, zlo:zhi], 0.0, None)
        total = win.sum()
        if total > 0:
            gi = np.arange(xlo, xhi)[:, None]
            gj = np.arange(zlo, zhi)[None, :]
            cx = float((win * gi).sum() / total)
            cz = float((win * gj).sum() / total)
        else:
            cx, cz = float(p[0]), float(p[1])
        rows.append([cx, cz, frame[p[0], p[1]]])
    return LocalizationSet(np.asarray(rows, dtype=np.float64).reshape(-1, 3))


def accumulate(sets, hr_shape) -> np.ndarray:
    """2-D histogram of detections on the HR grid; sums to the detection count."""
    out = np.zeros(hr_shape)
    for lset in sets:
        det = lset.detections if isinstance(lset, LocalizationSet) else \
            np.asarray(lset, dtype=np.float64).reshape(-1, 3)
        for x, z, _ in det:
            i = min(max(int(math.floor(x)), 0), hr_shape[0] - 1)
            j = min(max(int(math.floor(z)), 0), hr_shape[1] - 1)
            out[i, j] += 1.0
    return out


def score(detections, truth, match_radius: float):
    """Greedy nearest-first one-to-one matching within ``match_radius``.

    Returns (precision, recall, mean_error).  Conventions: no detections
    means no false positives (precision 1); empty truth means nothing to
    miss (recall 1); mean_error is 0 when nothing matched.
    """
    if match_radius <= 0:
        raise ValueError("match radius must be > 0")
    det = np.asarray(detections, dtype=np.float64).reshape(-1, 3) \
        if not isinstance(detections, LocalizationSet) else detections.detections
    tru = np.asarray(truth, dtype=np.float64).reshape(-1, 2)
    k, n = det.shape[0], tru.shape[0]
    if k == 0 or n == 0:
        return (1.0 if k == 0 else 0.0), (1.0 if n == 0 else 0.0), 0.0
    dist = np.sqrt((det[:, 0:1] - tru[None, :, 0]) ** 2
                   + (det[:, 1:2] - tru[None, :, 1]) ** 2)
    pairs = [(dist[i, j], i, j) for i in range(k) for j in range(n)
             if dist[i, j] <= match_radius]
    pairs.sort()
    used_d: set[int] = set()
    used_t: set[int] = set()
    errors = []
    for d, i, j in pairs:
        if i in used_d or j in used_t:
            continue
        used_d.add(i)
        used_t.add(j)
        errors.append(d)
    matched = len(errors)
    mean_error = float(np.mean(errors)) if errors else 0.0
    return matched / k, matched / n, mean_error
