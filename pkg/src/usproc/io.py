"""Binary and text file formats.

URF1 raw RF cubes::

    bytes 0-3   ASCII "URF1"
    u32 E, u32 C, u32 Nt        (little endian)
    f64 fs, f64 v, f64 f0
    E*C*Nt f32 samples, event-major, channel-next, time-minor

The format intentionally carries no transmit-event metadata; readers attach
events supplied by the caller (the CLI reconstructs them from its config).

UIM1 images: ASCII "UIM1", u32 Rx, u32 Rz, then Rx*Rz f32 values in
lateral-major order.  Multi-frame sequences extend the header with u32 T
before the payload (T frames back to back).

PGM output is binary P5 with maxval 255.
"""

from __future__ import annotations

import struct

import numpy as np

from .core import RfDataCube, ScattererField, TransmitEvent, validate
from .errors import DimensionMismatchError, FileFormatError

_URF1_MAGIC = b"URF1"
_UIM1_MAGIC = b"UIM1"


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FileFormatError(f"truncated payload: expected {n} bytes of {what}")
    return data


def write_urf1(path, cube: RfDataCube, f0: float) -> None:
    validate(cube)
    e, c, nt = cube.samples.shape
    with open(path, "wb") as fh:
        fh.write(_URF1_MAGIC)
        fh.write(struct.pack("<III", e, c, nt))
        fh.write(struct.pack("<ddd", cube.fs, cube.speed_of_sound, f0))
        fh.write(cube.samples.astype("<f4").tobytes(order="C"))


def read_urf1(path, events: list[TransmitEvent]):
    """Read a URF1 file; returns (RfDataCube, f0).

    ``events`` must describe the E transmits (the file stores none).
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != _URF1_MAGIC:
            raise FileFormatError(f"wrong magic: {magic!r} is not URF1")
        e, c, nt = struct.unpack("<III", _read_exact(fh, 12, "dimensions"))
        fs, v, f0 = struct.unpack("<ddd", _read_exact(fh, 24, "header floats"))
        raw = _read_exact(fh, 4 * e * c * nt, "samples")
        if fh.read(1):
            raise FileFormatError("truncated payload: trailing bytes after samples")
    samples = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(e, c, nt)
    cube = RfDataCube(samples, fs, v, tuple(events))
    validate(cube)
    return cube, f0


def write_uim1(path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionMismatchError("dimension-mismatch: UIM1 image must be 2-D")
    with open(path, "wb") as fh:
        fh.write(_UIM1_MAGIC)
        fh.write(struct.pack("<II", img.shape[0], img.shape[1]))
        fh.write(img.astype("<f4").tobytes(order="C"))


def read_uim1(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != _UIM1_MAGIC:
            raise FileFormatError(f"wrong magic: {magic!r} is not UIM1")
        rx, rz = struct.unpack("<II", _read_exact(fh, 8, "dimensions"))
        raw = _read_exact(fh, 4 * rx * rz, "pixels")
        if fh.read(1):
            raise FileFormatError("truncated payload: trailing bytes after pixels")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(rx, rz)


def write_uim1_seq(path, frames: np.ndarray) -> None:
    seq = np.asarray(frames, dtype=np.float64)
    if seq.ndim != 3:
        raise DimensionMismatchError("dimension-mismatch: sequence must be (T, Rx, Rz)")
    t, rx, rz = seq.shape
    with open(path, "wb") as fh:
        fh.write(_UIM1_MAGIC)
        fh.write(struct.pack("<III", rx, rz, t))
        fh.write(seq.astype("<f4").tobytes(order="C"))  # frames back to back


def read_uim1_seq(path) -> np.ndarray:
    """Read a multi-frame UIM1 file; returns frames of shape (T, Rx, Rz)."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != _UIM1_MAGIC:
            raise FileFormatError(f"wrong magic: {magic!r} is not UIM1")
        rx, rz, t = struct.unpack("<III", _read_exact(fh, 12, "dimensions"))
        raw = _read_exact(fh, 4 * rx * rz * t, "pixels")
        if fh.read(1):
            raise FileFormatError("truncated payload: trailing bytes after pixels")
    data = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return data.reshape(t, rx, rz)


def write_pgm(path, log_db: np.ndarray, dynamic_range_db: float) -> None:
    """8-bit binary PGM of a log-compressed image (0 dB -> white)."""
    img = np.asarray(log_db, dtype=np.float64)
    scaled = np.clip((img + dynamic_range_db) / dynamic_range_db, 0.0, 1.0)
    pix = np.round(scaled * 255.0).astype(np.uint8)
    # PGM raster is row-by-row top to bottom: emit axial rows, lateral columns
    pix = pix.T
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes(order="C"))


def write_pgm_linear(path, image: np.ndarray) -> None:
    """8-bit binary PGM of a nonnegative map, linearly scaled to its peak."""
    img = np.asarray(image, dtype=np.float64)
    peak = img.max() if img.size else 0.0
    scaled = img / peak if peak > 0 else np.zeros_like(img)
    pix = np.round(np.clip(scaled, 0.0, 1.0) * 255.0).astype(np.uint8).T
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes(order="C"))


def read_scatterer_field(path) -> ScattererField:
    """Text scatterer table: one ``x_m z_m amplitude`` triple per line."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 3:
                raise FileFormatError(
                    f"scatterer file line {lineno}: expected 3 values, got {len(parts)}")
            rows.append([float(p) for p in parts])
    return ScattererField(np.asarray(rows, dtype=np.float64).reshape(-1, 3))


def write_scatterer_field(path, field: ScattererField) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# x_m z_m amplitude\n")
        for x, z, amp in field.scatterers:
            fh.write(f"{float(x)!r} {float(z)!r} {float(amp)!r}\n")
