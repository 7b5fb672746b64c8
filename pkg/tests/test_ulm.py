"""Bubble simulation, sparse localization, centroid detection, scoring."""

import numpy as np
import pytest

from usproc.ulm import (
    LocalizationSet,
    accumulate,
    block_average,
    block_expand,
    detect_centroids,
    gaussian_psf,
    localize_sparse,
    max_correlation,
    render_frame,
    score,
    simulate_bubbles,
)


class TestSimulateBubbles:
    def test_zero_mean_noise_only(self):
        frames = simulate_bubbles((16, 16), 4, 0.0, 1.5, 2, 30.0, 0)
        assert all(len(f.truth) == 0 for f in frames)
        assert all(np.std(f.image) > 0 for f in frames)  # noise present

    def test_single_bubble_factor_one_peak_at_truth(self):
        frames = simulate_bubbles((32, 32), 20, 1.0, 2.0, 1, None, 5)
        frame = next(f for f in frames if len(f.truth) == 1
                     and np.all((f.truth > 6) & (f.truth < 26)))
        i, j = np.unravel_index(np.argmax(frame.image), frame.image.shape)
        assert abs(i - frame.truth[0, 0]) <= 0.5 + 1e-9
        assert abs(j - frame.truth[0, 1]) <= 0.5 + 1e-9

    def test_same_seed_identical(self):
        a = simulate_bubbles((16, 16), 3, 2.0, 1.5, 2, 25.0, 9)
        b = simulate_bubbles((16, 16), 3, 2.0, 1.5, 2, 25.0, 9)
        for fa, fb in zip(a, b):
            assert np.array_equal(fa.image, fb.image)
            assert np.array_equal(fa.truth, fb.truth)


class TestBlockOps:
    def test_average_expand_adjoint(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((12, 8))
        y = rng.standard_normal((3, 2))
        lhs = np.sum(block_average(x, 4) * y)
        rhs = np.sum(x * block_expand(y, 4))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestLocalizeSparse:
    def test_zero_frame(self):
        psf = gaussian_psf(1.5)
        out = localize_sparse(np.zeros((8, 8)), psf, 0.1, 2)
        assert not np.any(out)

    def test_single_on_grid_bubble(self):
        psf = gaussian_psf(2.0)
        hr = render_frame((32, 32), np.array([[16.0, 12.0]]), 2.0)
        lr = block_average(hr, 4)
        lam = 0.05 * max_correlation(lr, psf, 4)
        x = localize_sparse(lr, psf, lam, 4, max_iters=2000, tol=1e-8)
        assert np.all(x >= 0.0)
        i, j = np.unravel_index(np.argmax(x), x.shape)
        assert abs(i - 16) <= 1 and abs(j - 12) <= 1

    def test_requires_unit_peak_psf(self):
        with pytest.raises(ValueError):
            localize_sparse(np.zeros((8, 8)), 0.5 * gaussian_psf(1.0), 0.1, 2)

    def test_output_support_bounded(self):
        frames = simulate_bubbles((32, 32), 1, 3.0, 2.0, 4, 30.0, 3)
        psf = gaussian_psf(2.0)
        lam = 0.05 * max_correlation(frames[0].image, psf, 4)
        x = localize_sparse(frames[0].image, psf, lam, 4, max_iters=500)
        assert np.all(x >= 0)
        assert np.count_nonzero(x) <= x.size


class TestDetectCentroids:
    def test_symmetric_blob_centroid(self):
        d = np.arange(-6, 7)
        blob = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2 * 1.5 ** 2))
        det = detect_centroids(blob, 0.2, 2).detections
        assert det.shape[0] == 1
        assert det[0, 0] == pytest.approx(6.0, abs=0.1)
        assert det[0, 1] == pytest.approx(6.0, abs=0.1)

    def test_zero_frame_no_detections(self):
        assert len(detect_centroids(np.zeros((8, 8)), 0.5, 2)) == 0

    def test_two_separated_blobs(self):
        frame = np.zeros((24, 24))
        d = np.arange(-3, 4)
        blob = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / 2.0)
        frame[2:9, 2:9] += blob
        frame[12:19, 12:19] += 0.8 * blob
        det = detect_centroids(frame, 0.3, 3).detections
        assert det.shape[0] == 2

    def test_count_non_increasing_in_threshold(self):
        rng = np.random.default_rng(1)
        frame = rng.random((20, 20))
        counts = [len(detect_centroids(frame, t, 1))
                  for t in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_merge_keeps_brighter(self):
        frame = np.zeros((10, 10))
        frame[4, 4] = 1.0
        frame[4, 5] = 0.9
        det = detect_centroids(frame, 0.5, 2).detections
        assert det.shape[0] == 1
        assert det[0, 2] == 1.0


class TestAccumulate:
    def test_zero_detections(self):
        assert not np.any(accumulate([], (8, 8)))

    def test_bin_count(self):
        dets = LocalizationSet(np.array([[2.2, 3.7, 1.0],
                                         [2.9, 3.1, 2.0],
                                         [5.0, 5.0, 1.0]]))
        out = accumulate([dets], (8, 8))
        assert out[2, 3] == 2.0
        assert out[5, 5] == 1.0

    def test_conservation(self):
        rng = np.random.default_rng(2)
        sets = [LocalizationSet(np.column_stack([
            rng.uniform(-1, 9, 5), rng.uniform(-1, 9, 5), np.ones(5)]))
            for _ in range(3)]
        out = accumulate(sets, (8, 8))
        assert out.sum() == 15.0


class TestScore:
    def test_perfect_match(self):
        truth = np.array([[1.0, 2.0], [5.0, 5.0]])
        det = np.column_stack([truth, np.ones(2)])
        p, r, e = score(det, truth, 1.0)
        assert (p, r, e) == (1.0, 1.0, 0.0)

    def test_empty_detections_convention(self):
        p, r, e = score(np.zeros((0, 3)), np.array([[1.0, 1.0]]), 1.0)
        assert p == 1.0 and r == 0.0 and e == 0.0

    def test_far_detection_matches_nothing(self):
        det = np.array([[9.0, 9.0, 1.0]])
        truth = np.array([[1.0, 1.0]])
        p, r, _ = score(det, truth, 1.0)
        assert p == 0.0 and r == 0.0

    def test_one_to_one_matching(self):
        truth = np.array([[0.0, 0.0], [0.0, 1.0]])
        det = np.array([[0.0, 0.4, 1.0], [0.0, 0.6, 1.0]])
        p, r, _ = score(det, truth, 1.0)
        assert p == 1.0 and r == 1.0

    def test_detection_order_invariance(self):
        rng = np.random.default_rng(3)
        truth = rng.uniform(0, 10, (6, 2))
        det = np.column_stack([truth + rng.normal(0, 0.1, (6, 2)), np.ones(6)])
        base = score(det, truth, 1.0)
        perm = rng.permutation(6)
        assert score(det[perm], truth, 1.0) == base
