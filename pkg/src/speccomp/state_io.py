"""Binary and CSV serialization of compressor states and embedding heads.

Both binary formats are versioned, little-endian and platform independent.
Every file may carry a UTF-8 configuration echo so an artifact records the
exact run configuration that produced it.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .compression import CompressorKind, CompressorState, DesignMode
from .errors import StateFormatError

STATE_MAGIC = b"SCST"
HEAD_MAGIC = b"SCHD"
FORMAT_VERSION = 1

_KIND_CODES = {
    CompressorKind.LOG: 0,
    CompressorKind.OFFSET_LOG: 1,
    CompressorKind.POWER: 2,
    CompressorKind.DRC: 3,
}
_MODE_CODES = {
    DesignMode.STATIC: 0,
    DesignMode.CHANNEL_DEPENDENT: 1,
    DesignMode.MULTI_REGIME_CD: 2,
}
_KIND_FROM_CODE = {code: kind for kind, code in _KIND_CODES.items()}
_MODE_FROM_CODE = {code: mode for mode, code in _MODE_CODES.items()}


def _read_exact(buf, n: int, what: str) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise StateFormatError(f"truncated file while reading {what}")
    return data


def save_state(state: CompressorState, path, config_echo: str = "") -> None:
    """Write a compressor state to ``path`` in the versioned binary format."""
    echo = config_echo.encode("utf-8")
    out = io.BytesIO()
    out.write(STATE_MAGIC)
    out.write(
        struct.pack(
            "<HBBHId",
            FORMAT_VERSION,
            _KIND_CODES[state.kind],
            _MODE_CODES[state.mode],
            state.n_regimes,
            state.n_channels,
            state.input_floor,
        )
    )
    out.write(struct.pack("<I", len(echo)))
    out.write(echo)
    out.write(struct.pack("<B", len(state.params)))
    for name, values in state.params.items():
        encoded = name.encode("ascii")
        out.write(struct.pack("<B", len(encoded)))
        out.write(encoded)
        out.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(out.getvalue())


def load_state(path) -> tuple[CompressorState, str]:
    """Read a compressor state; returns ``(state, config_echo)``."""
    with open(path, "rb") as fh:
        buf = io.BytesIO(fh.read())
    magic = _read_exact(buf, 4, "magic")
    if magic != STATE_MAGIC:
        raise StateFormatError(f"bad magic {magic!r}, expected {STATE_MAGIC!r}")
    version, kind_code, mode_code, n_regimes, n_channels, input_floor = struct.unpack(
        "<HBBHId", _read_exact(buf, struct.calcsize("<HBBHId"), "header")
    )
    if version != FORMAT_VERSION:
        raise StateFormatError(f"unsupported state format version {version}")
    if kind_code not in _KIND_FROM_CODE or mode_code not in _MODE_FROM_CODE:
        raise StateFormatError(f"unknown kind/mode codes ({kind_code}, {mode_code})")
    (echo_len,) = struct.unpack("<I", _read_exact(buf, 4, "echo length"))
    echo = _read_exact(buf, echo_len, "config echo").decode("utf-8")
    (n_params,) = struct.unpack("<B", _read_exact(buf, 1, "parameter count"))
    params: dict[str, np.ndarray] = {}
    for _ in range(n_params):
        (name_len,) = struct.unpack("<B", _read_exact(buf, 1, "parameter name length"))
        name = _read_exact(buf, name_len, "parameter name").decode("ascii")
        raw = _read_exact(buf, 8 * n_regimes * n_channels, f"parameter {name!r}")
        params[name] = np.frombuffer(raw, dtype="<f8").reshape(n_regimes, n_channels)
    if buf.read(1):
        raise StateFormatError("trailing bytes after parameter payload")
    try:
        state = CompressorState(
            kind=_KIND_FROM_CODE[kind_code],
            mode=_MODE_FROM_CODE[mode_code],
            params=params,
            input_floor=input_floor,
        )
    except ValueError as exc:
        raise StateFormatError(f"inconsistent state payload: {exc}") from exc
    return state, echo


def _format_f32(value: float) -> str:
    # Shortest decimal that round-trips through float32.
    return str(np.float32(value))


def state_to_csv(state: CompressorState) -> str:
    """Per-channel CSV dump: one row per channel, one column per regime parameter.

    Columns are named after the parameter alone for single-regime designs
    and ``<name>_<regime>`` for multi-regime designs. Values are written as
    the shortest decimals that parse back to the same 32-bit floats.
    """
    columns: list[tuple[str, np.ndarray]] = []
    for name, values in state.params.items():
        n_regimes = values.shape[0]
        for i in range(n_regimes):
            label = name if n_regimes == 1 else f"{name}_{i}"
            columns.append((label, values[i]))
    lines = ["channel" + "".join(f",{label}" for label, _ in columns)]
    for channel in range(state.n_channels):
        row = [str(channel)]
        row.extend(_format_f32(col[channel]) for _, col in columns)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_params_csv(text: str) -> dict[str, np.ndarray]:
    """Parse a :func:`state_to_csv` dump back into float32 column arrays."""
    lines = [line for line in text.strip().splitlines() if line]
    if not lines:
        raise StateFormatError("empty parameter CSV")
    header = lines[0].split(",")
    if header[0] != "channel":
        raise StateFormatError("parameter CSV must start with a 'channel' column")
    names = header[1:]
    rows = [line.split(",") for line in lines[1:]]
    columns = {}
    for j, name in enumerate(names):
        columns[name] = np.array([np.float32(row[j + 1]) for row in rows], dtype=np.float32)
    return columns


def save_head(projection: np.ndarray, class_weights: np.ndarray, path, config_echo: str = "") -> None:
    """Write an embedding head (projection + class weights) to ``path``."""
    projection = np.asarray(projection, dtype=np.float64)
    class_weights = np.asarray(class_weights, dtype=np.float64)
    if projection.ndim != 2 or class_weights.ndim != 2:
        raise ValueError("projection and class_weights must be 2-D")
    if projection.shape[1] != class_weights.shape[0]:
        raise ValueError("projection embedding dim must match class_weights rows")
    echo = config_echo.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(HEAD_MAGIC)
        fh.write(
            struct.pack(
                "<HIII",
                FORMAT_VERSION,
                projection.shape[0],
                projection.shape[1],
                class_weights.shape[1],
            )
        )
        fh.write(struct.pack("<I", len(echo)))
        fh.write(echo)
        fh.write(np.ascontiguousarray(projection, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(class_weights, dtype="<f8").tobytes())


def load_head(path) -> tuple[np.ndarray, np.ndarray, str]:
    """Read an embedding head; returns ``(projection, class_weights, echo)``."""
    with open(path, "rb") as fh:
        buf = io.BytesIO(fh.read())
    magic = _read_exact(buf, 4, "magic")
    if magic != HEAD_MAGIC:
        raise StateFormatError(f"bad magic {magic!r}, expected {HEAD_MAGIC!r}")
    version, stats_dim, embed_dim, n_classes = struct.unpack(
        "<HIII", _read_exact(buf, struct.calcsize("<HIII"), "header")
    )
    if version != FORMAT_VERSION:
        raise StateFormatError(f"unsupported head format version {version}")
    (echo_len,) = struct.unpack("<I", _read_exact(buf, 4, "echo length"))
    echo = _read_exact(buf, echo_len, "config echo").decode("utf-8")
    projection = np.frombuffer(
        _read_exact(buf, 8 * stats_dim * embed_dim, "projection"), dtype="<f8"
    ).reshape(stats_dim, embed_dim)
    class_weights = np.frombuffer(
        _read_exact(buf, 8 * embed_dim * n_classes, "class weights"), dtype="<f8"
    ).reshape(embed_dim, n_classes)
    if buf.read(1):
        raise StateFormatError("trailing bytes after head payload")
    return projection.copy(), class_weights.copy(), echo
