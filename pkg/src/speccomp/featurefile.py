"""Binary feature file format.

Layout (all integers little-endian):

    magic     4 bytes  b"SCFT"
    version   u16
    T         u32      number of frames
    F         u32      number of channels
    window    u32      analysis window length in samples
    hop       u32      hop in samples
    n_fft     u32      transform size
    rate      u32      sample rate in Hz
    echo_len  u32      length of the UTF-8 config echo
    echo      bytes
    payload   T*F little-endian float32, row-major by frame
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import StateFormatError
from .frontend import FrameSpec

FEATURE_MAGIC = b"SCFT"
FEATURE_VERSION = 1
_HEADER = "<HIIIIIII"


@dataclass(frozen=True)
class FeatureData:
    """Contents of a feature file: float32 matrix plus framing metadata."""

    values: np.ndarray
    frame: FrameSpec
    sample_rate: int
    config_echo: str = ""


def write_feature_file(
    path, values, frame: FrameSpec, sample_rate: int, config_echo: str = ""
) -> None:
    """Write a (T, F) feature matrix; values are stored as float32."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {values.shape}")
    echo = config_echo.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(
            struct.pack(
                _HEADER,
                FEATURE_VERSION,
                values.shape[0],
                values.shape[1],
                frame.window_len,
                frame.hop,
                frame.n_fft,
                sample_rate,
                len(echo),
            )
        )
        fh.write(echo)
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_feature_file(path) -> FeatureData:
    """Read a feature file, validating magic, version and payload length."""
    with open(path, "rb") as fh:
        buf = io.BytesIO(fh.read())
    magic = buf.read(4)
    if magic != FEATURE_MAGIC:
        raise StateFormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    header = buf.read(struct.calcsize(_HEADER))
    if len(header) != struct.calcsize(_HEADER):
        raise StateFormatError(f"{path}: truncated header")
    version, n_frames, n_channels, window_len, hop, n_fft, rate, echo_len = struct.unpack(
        _HEADER, header
    )
    if version != FEATURE_VERSION:
        raise StateFormatError(f"{path}: unsupported feature format version {version}")
    echo_raw = buf.read(echo_len)
    if len(echo_raw) != echo_len:
        raise StateFormatError(f"{path}: truncated config echo")
    payload = buf.read()
    expected = n_frames * n_channels * 4
    if len(payload) != expected:
        raise StateFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(n_frames, n_channels).copy()
    return FeatureData(
        values=values,
        frame=FrameSpec(window_len=window_len, hop=hop, n_fft=n_fft),
        sample_rate=rate,
        config_echo=echo_raw.decode("utf-8"),
    )
