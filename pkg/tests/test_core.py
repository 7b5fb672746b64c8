"""Domain-type invariants, validation, and the URF1 binary format."""

import numpy as np
import pytest

from usproc import io as uio
from usproc.core import (
    HAMMING,
    HANNING,
    RECTANGULAR,
    ApodizationWindow,
    BeamformedImage,
    ImagingGrid,
    RfDataCube,
    ScattererField,
    TransducerArray,
    TransmitEvent,
    validate,
)
from usproc.errors import (
    DimensionMismatchError,
    FileFormatError,
    NonFiniteSampleError,
    NonPositiveSpeedError,
)


def make_cube(e=1, c=2, nt=16, v=1540.0):
    events = [TransmitEvent.plane_wave(0.0) for _ in range(e)]
    return RfDataCube(np.zeros((e, c, nt)), 40e6, v, events)


class TestValidate:
    def test_well_formed_cube_ok(self):
        validate(make_cube())  # no raise

    def test_zero_speed_rejected(self):
        cube = make_cube(v=0.0)
        with pytest.raises(NonPositiveSpeedError, match="non-positive-speed"):
            validate(cube)

    def test_nan_sample_rejected(self):
        samples = np.zeros((1, 2, 16))
        samples[0, 1, 3] = np.nan
        cube = RfDataCube(samples, 40e6, 1540.0, [TransmitEvent.plane_wave(0.0)])
        with pytest.raises(NonFiniteSampleError, match="non-finite-sample"):
            validate(cube)

    def test_event_count_mismatch(self):
        cube = RfDataCube(np.zeros((2, 2, 4)), 40e6, 1540.0,
                          [TransmitEvent.plane_wave(0.0)])
        with pytest.raises(DimensionMismatchError, match="dimension-mismatch"):
            validate(cube)

    def test_idempotent(self):
        cube = make_cube()
        validate(cube)
        validate(cube)


class TestTypes:
    def test_array_requires_increasing_positions(self):
        pos = [[0.0, 0.0], [-1e-4, 0.0]]
        with pytest.raises(ValueError):
            TransducerArray(pos, 1e-4, 2, 5e6, 40e6)

    def test_array_requires_fs_above_nyquist(self):
        with pytest.raises(ValueError):
            TransducerArray.linear(4, 1e-4, 5e6, 9e6)

    def test_plane_wave_angle_range(self):
        with pytest.raises(ValueError):
            TransmitEvent.plane_wave(2.0)

    def test_grid_axial_positive(self):
        with pytest.raises(ValueError):
            ImagingGrid([0.0, 1e-3], [0.0, 1e-3])

    def test_scatterers_must_be_in_front(self):
        with pytest.raises(ValueError):
            ScattererField([[0.0, -1e-3, 1.0]])

    def test_types_are_immutable(self):
        cube = make_cube()
        with pytest.raises(ValueError):
            cube.samples[0, 0, 0] = 1.0

    def test_beamformed_image_envelope_invariant(self):
        grid = ImagingGrid([0.0], [1e-3])
        rf = np.array([[3.0 + 4.0j]])
        img = BeamformedImage(rf, grid, envelope=np.array([[5.0]]))
        assert img.envelope[0, 0] == 5.0
        with pytest.raises(ValueError):
            BeamformedImage(rf, grid, envelope=np.array([[1.0]]))


class TestApodization:
    @pytest.mark.parametrize("c", [2, 3, 8, 17, 64])
    def test_rectangular_all_ones(self, c):
        assert np.array_equal(ApodizationWindow(RECTANGULAR, c).weights,
                              np.ones(c))

    @pytest.mark.parametrize("kind", [HANNING, HAMMING])
    @pytest.mark.parametrize("c", [3, 8, 15, 64])
    def test_tapers_symmetric(self, kind, c):
        w = ApodizationWindow(kind, c).weights
        assert np.max(np.abs(w - w[::-1])) <= 1e-15

    def test_hanning_formula(self):
        w = ApodizationWindow(HANNING, 5).weights
        expect = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(5) / 4)
        assert np.allclose(w, expect, atol=1e-15)

    def test_odd_length_peak_is_one(self):
        # even lengths peak below 1 under the classical endpoint-zero formula
        assert ApodizationWindow(HANNING, 9).weights.max() == 1.0


class TestUrf1:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = rng.standard_normal((2, 3, 11)).astype(np.float32).astype(float)
        events = [TransmitEvent.plane_wave(a) for a in (0.0, 0.1)]
        cube = RfDataCube(samples, 40e6, 1540.0, events)
        path = tmp_path / "t.urf"
        uio.write_urf1(path, cube, 5e6)
        back, f0 = uio.read_urf1(path, events)
        assert f0 == 5e6
        assert back.fs == cube.fs and back.speed_of_sound == 1540.0
        assert np.array_equal(back.samples, samples)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.urf"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(FileFormatError, match="magic"):
            uio.read_urf1(path, [])

    def test_truncated_payload_rejected(self, tmp_path):
        cube = make_cube()
        path = tmp_path / "t.urf"
        uio.write_urf1(path, cube, 5e6)
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(FileFormatError, match="truncated payload"):
            uio.read_urf1(path, cube.events)


class TestUim1:
    def test_round_trip_f32_exact(self, tmp_path):
        img = np.arange(12, dtype=np.float64).reshape(3, 4) / 7.0
        path = tmp_path / "i.uim1"
        uio.write_uim1(path, img)
        back = uio.read_uim1(path)
        assert back.shape == (3, 4)
        assert np.array_equal(back, img.astype(np.float32).astype(np.float64))

    def test_sequence_round_trip(self, tmp_path):
        seq = np.arange(24, dtype=np.float32).reshape(4, 2, 3).astype(float)
        path = tmp_path / "s.uim1"
        uio.write_uim1_seq(path, seq)
        assert np.array_equal(uio.read_uim1_seq(path), seq)

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "i.uim1"
        uio.write_uim1(path, np.ones((4, 4)))
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(FileFormatError, match="truncated payload"):
            uio.read_uim1(path)


def test_scatterer_field_text_round_trip(tmp_path):
    field = ScattererField([[1e-3, 2e-3, 0.5], [-2e-3, 1e-2, -1.25]])
    path = tmp_path / "field.txt"
    uio.write_scatterer_field(path, field)
    back = uio.read_scatterer_field(path)
    assert np.array_equal(back.scatterers, field.scatterers)


def test_scatterer_file_comments_ignored(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("# header\n0.001 0.002 1.0  # trailing\n\n")
    field = uio.read_scatterer_field(path)
    assert len(field) == 1
