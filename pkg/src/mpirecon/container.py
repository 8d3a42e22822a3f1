"""Portable binary container ("MPIR1") and 16-bit PGM export.

Layout: 6-byte magic ``MPIR1\\n``, ASCII ``key=value`` header lines
terminated by a blank line, then the raw little-endian payload (row-major).
``dtype`` is ``f64`` or ``c64`` (interleaved re/im f64 pairs).  Per-row
metadata arrays travel as base64-encoded little-endian f64 blocks in the
header.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np

from .solvers import ReconReport, SystemMatrix

__all__ = [
    "Container",
    "ContainerFormatError",
    "write_container",
    "read_container",
    "save_image",
    "load_image",
    "save_vector",
    "load_vector",
    "save_matrix",
    "load_matrix",
    "save_report",
    "write_pgm16",
]

MAGIC = b"MPIR1\n"
KINDS = ("matrix", "image", "vector", "report")
_ARRAY_META_PREFIX = "base64:"


class ContainerFormatError(ValueError):
    """Malformed or inconsistent container file."""


@dataclass
class Container:
    kind: str
    array: np.ndarray
    meta: dict = field(default_factory=dict)


def _encode_meta(value) -> str:
    if isinstance(value, np.ndarray):
        data = np.ascontiguousarray(value, dtype="<f8").tobytes()
        return _ARRAY_META_PREFIX + base64.b64encode(data).decode("ascii")
    return str(value)


def _decode_meta(text: str):
    if text.startswith(_ARRAY_META_PREFIX):
        raw = base64.b64decode(text[len(_ARRAY_META_PREFIX):])
        return np.frombuffer(raw, dtype="<f8").copy()
    return text


def write_container(path, kind: str, array: np.ndarray, meta: dict | None = None) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown container kind {kind!r}")
    array = np.asarray(array)
    if np.iscomplexobj(array):
        dtype_tag, payload = "c64", np.ascontiguousarray(array, dtype="<c16")
    else:
        dtype_tag, payload = "f64", np.ascontiguousarray(array, dtype="<f8")
    lines = [
        f"kind={kind}",
        f"dtype={dtype_tag}",
        "dims=" + ",".join(str(d) for d in array.shape),
    ]
    for key, value in (meta or {}).items():
        if key in ("kind", "dtype", "dims"):
            raise ValueError(f"reserved meta key {key!r}")
        text = _encode_meta(value)
        if "\n" in text or "=" in str(key):
            raise ValueError("meta entries must be single-line and '='-free keys")
        lines.append(f"{key}={text}")
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header)
        fh.write(payload.tobytes(order="C"))


def read_container(path) -> Container:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise ContainerFormatError("bad magic; not an MPIR1 container")
    body = blob[len(MAGIC):]
    sep = body.find(b"\n\n")
    if sep < 0:
        raise ContainerFormatError("missing header terminator")
    header, payload = body[:sep].decode("ascii"), body[sep + 2:]

    fields: dict[str, str] = {}
    for line in header.split("\n"):
        if "=" not in line:
            raise ContainerFormatError(f"malformed header line {line!r}")
        key, _, value = line.partition("=")
        if key in fields:
            raise ContainerFormatError(f"duplicate header key {key!r}")
        fields[key] = value

    try:
        kind = fields.pop("kind")
        dtype_tag = fields.pop("dtype")
        dims_text = fields.pop("dims")
    except KeyError as exc:
        raise ContainerFormatError(f"missing header key {exc}") from None
    if kind not in KINDS:
        raise ContainerFormatError(f"unknown kind {kind!r}")
    dims = tuple(int(v) for v in dims_text.split(",")) if dims_text else ()
    count = int(np.prod(dims)) if dims else 1
    if dtype_tag == "f64":
        np_dtype, width = "<f8", 8
    elif dtype_tag == "c64":
        np_dtype, width = "<c16", 16
    else:
        raise ContainerFormatError(f"unknown dtype {dtype_tag!r}")
    if len(payload) != count * width:
        raise ContainerFormatError("payload length does not match dims")
    array = np.frombuffer(payload, dtype=np_dtype).reshape(dims).copy()
    meta = {key: _decode_meta(value) for key, value in fields.items()}
    return Container(kind=kind, array=array, meta=meta)


def save_image(path, image: np.ndarray, meta: dict | None = None) -> None:
    write_container(path, "image", np.asarray(image, dtype=float), meta)


def load_image(path) -> np.ndarray:
    c = read_container(path)
    if c.kind != "image":
        raise ContainerFormatError(f"expected an image container, got {c.kind!r}")
    return c.array


def save_vector(path, vec: np.ndarray, meta: dict | None = None) -> None:
    write_container(path, "vector", np.asarray(vec), meta)


def load_vector(path) -> np.ndarray:
    c = read_container(path)
    if c.kind != "vector":
        raise ContainerFormatError(f"expected a vector container, got {c.kind!r}")
    return c.array


def save_matrix(path, A: SystemMatrix, meta: dict | None = None) -> None:
    full = dict(meta or {})
    full["grid_dims"] = ",".join(str(d) for d in A.grid_dims)
    if A.row_freq_hz is not None:
        full["row_freq_hz"] = A.row_freq_hz
    if A.row_snr is not None:
        full["row_snr"] = A.row_snr
    write_container(path, "matrix", A.entries, full)


def load_matrix(path) -> tuple[SystemMatrix, dict]:
    c = read_container(path)
    if c.kind != "matrix":
        raise ContainerFormatError(f"expected a matrix container, got {c.kind!r}")
    meta = dict(c.meta)
    try:
        grid_dims = tuple(int(v) for v in meta.pop("grid_dims").split(","))
    except KeyError:
        raise ContainerFormatError("matrix container lacks grid_dims") from None
    A = SystemMatrix.from_entries(
        c.array,
        grid_dims,
        row_snr=meta.pop("row_snr", None),
        row_freq_hz=meta.pop("row_freq_hz", None),
    )
    return A, meta


def save_report(path, report: ReconReport, meta: dict | None = None) -> None:
    """Persist per-epoch histories (rel change, residual, seconds) plus
    summary header fields."""
    table = np.column_stack(
        [report.rel_change_history, report.residual_history, report.time_history]
    )
    full = dict(meta or {})
    full.update(
        epochs_run=report.epochs_run,
        stopped_by=report.stopped_by,
        wall_time_s=repr(report.wall_time_s),
        columns="rel_change,residual,seconds",
    )
    write_container(path, "report", table, full)


def write_pgm16(path, image: np.ndarray) -> None:
    """16-bit binary PGM (P5), max-value scaled; big-endian sample order."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM export expects a 2D image")
    peak = float(img.max())
    if peak > 0:
        scaled = np.clip(img / peak, 0.0, 1.0) * 65535.0
    else:
        scaled = np.zeros_like(img)
    data = np.round(scaled).astype(">u2")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(data.tobytes(order="C"))
