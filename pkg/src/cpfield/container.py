"""CPTF: a minimal binary tensor container with a JSON metadata sidecar.

Layout (all integers little-endian, packed, no padding):

    offset  size  field
    0       4     magic "CPTF"
    4       2     version, uint16 (currently 1)
    6       1     dtype code, uint8 (2 = float64; 1 reserved for float32)
    7       1     ndim, uint8 (always 4)
    8       32    dims, four uint64 (t, x, y, var)
    40      -     payload: raw little-endian float64, row-major (t, x, y, var)

The sidecar ``<name>.json`` sits next to ``<name>.cpt`` and carries the
GridSpec keys ``t_out, nx, ny, nvar, variable_names, lead_hours`` (plus any
extra keys a caller records, e.g. alpha/n/strategy for quantile fields).
Writes round-trip bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import FieldTensor, GridSpec

__all__ = [
    "ContainerError",
    "BadMagicError",
    "BadVersionError",
    "BadDtypeError",
    "BadDimsError",
    "LengthMismatchError",
    "NonFiniteError",
    "SidecarError",
    "MAGIC",
    "VERSION",
    "HEADER_SIZE",
    "write_array",
    "read_array",
    "write_container",
    "read_container",
    "sidecar_path",
    "dump_sidecar",
    "load_sidecar",
]

MAGIC = b"CPTF"
VERSION = 1
DTYPE_FLOAT64 = 2
HEADER_SIZE = 4 + 2 + 1 + 1 + 4 * 8
_HEADER = struct.Struct("<4sHBB4Q")


class ContainerError(Exception):
    """Base class for CPTF format errors."""


class BadMagicError(ContainerError):
    pass


class BadVersionError(ContainerError):
    pass


class BadDtypeError(ContainerError):
    pass


class BadDimsError(ContainerError):
    pass


class LengthMismatchError(ContainerError):
    pass


class NonFiniteError(ContainerError):
    """Payload contains NaN/inf where finite values are required."""

    def __init__(self, path, flat_index: int, kind: str):
        self.flat_index = flat_index
        super().__init__(f"{path}: {kind} value at flat index {flat_index}")


class SidecarError(ContainerError):
    pass


def sidecar_path(path) -> Path:
    """``<name>.json`` for ``<name>.cpt`` (or any other suffix)."""
    p = Path(path)
    return p.with_suffix(".json") if p.suffix else p.with_name(p.name + ".json")


def dump_sidecar(meta: dict, path: Path) -> None:
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_sidecar(path: Path) -> dict:
    if not path.exists():
        raise SidecarError(f"missing sidecar {path}")
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SidecarError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(meta, dict):
        raise SidecarError(f"{path}: sidecar must be a JSON object")
    return meta


def write_array(arr: np.ndarray, path, meta: dict | None = None) -> None:
    """Write a 4D float64 array as CPTF; write ``meta`` as the sidecar.

    ``meta=None`` skips the sidecar (used by interval fields, which share a
    single sidecar across their two payload files).
    """
    path = Path(path)
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 4:
        raise BadDimsError(f"expected a 4D array, got ndim={arr.ndim}")
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_FLOAT64, 4, *arr.shape)
    payload = arr.astype("<f8", copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    if meta is not None:
        dump_sidecar(meta, sidecar_path(path))


def read_array(
    path, allow_infinite: bool = False, require_sidecar: bool = True
) -> tuple[np.ndarray, dict]:
    """Read a CPTF file; return (array, sidecar dict).

    NaN payload values are always rejected; +-inf is rejected unless
    ``allow_infinite`` (quantile and interval files legitimately hold inf).
    With ``require_sidecar=False`` a missing sidecar yields an empty dict
    (interval bound files share one sidecar under a different name).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < HEADER_SIZE:
            raise LengthMismatchError(f"{path}: truncated header ({len(head)} bytes)")
        magic, version, dtype_code, ndim, *dims = _HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise BadVersionError(f"{path}: unsupported version {version}")
        if dtype_code != DTYPE_FLOAT64:
            raise BadDtypeError(f"{path}: unsupported dtype code {dtype_code}")
        if ndim != 4:
            raise BadDimsError(f"{path}: expected ndim=4, got {ndim}")
        if any(d < 1 for d in dims):
            raise BadDimsError(f"{path}: non-positive dimension in {dims}")
        count = dims[0] * dims[1] * dims[2] * dims[3]
        payload = fh.read()
    if len(payload) != 8 * count:
        raise LengthMismatchError(
            f"{path}: payload is {len(payload)} bytes, header implies {8 * count}"
        )
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64, copy=False).reshape(dims)
    bad = np.isnan(arr) if allow_infinite else ~np.isfinite(arr)
    if bad.any():
        first = int(np.flatnonzero(bad.ravel())[0])
        kind = "NaN" if np.isnan(arr.ravel()[first]) else "non-finite"
        raise NonFiniteError(path, first, kind)
    side = sidecar_path(path)
    if not require_sidecar and not side.exists():
        return arr, {}
    meta = load_sidecar(side)
    return arr, meta


def write_container(tensor: FieldTensor, path, extra_meta: dict | None = None) -> None:
    """Persist a FieldTensor as ``<path>`` (CPTF) plus its JSON sidecar."""
    meta = tensor.spec.to_sidecar()
    if extra_meta:
        meta.update(extra_meta)
    write_array(tensor.data, path, meta)


def read_container(path) -> FieldTensor:
    """Load a FieldTensor written by write_container; validates everything.

    The sidecar dims must agree with the binary header.
    """
    arr, meta = read_array(path, allow_infinite=False)
    spec = GridSpec.from_sidecar(meta)
    if spec.shape != arr.shape:
        raise BadDimsError(
            f"{path}: header dims {arr.shape} disagree with sidecar {spec.shape}"
        )
    return FieldTensor(spec, arr)
