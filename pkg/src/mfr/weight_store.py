"""MFRW model container: bit-exact storage for raw and palettized tensors.

File layout (all integers little-endian):

    bytes 0..3    magic ``MFRW``
    bytes 4..7    format version (u32, currently 1)
    bytes 8..15   header length in bytes (u64)
    then          canonical-JSON header (UTF-8)
    then          zero padding to the next 16-byte boundary
    then          tensor blobs, each 16-byte aligned, in header order

The header is ``{"metadata": {...}, "tensors": [...]}`` where each tensor
entry carries ``name``, ``kind`` ("raw" or "pal"), ``dtype``, ``shape``,
``data_offset``, ``data_len`` and, for palettized tensors, ``n_bits``,
``lut_offset``, ``lut_len``. For a palettized tensor the LUT blob precedes
its index blob. Offsets are absolute file offsets. Serialization is a pure
function of the inputs, so re-writing the same tensors yields byte-identical
files.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .canonical import canonical_json_bytes

MAGIC = b"MFRW"
VERSION = 1
ALIGN = 16

DTYPES = {"f32": np.dtype("<f4"), "f16": np.dtype("<f2")}


class ArtifactError(Exception):
    """Raised for malformed, truncated or otherwise invalid artifacts."""


def _align_up(n: int) -> int:
    return (n + ALIGN - 1) // ALIGN * ALIGN


def _check_shape(shape) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0 or any(s < 1 for s in shape):
        raise ArtifactError(f"shape must be a non-empty list of positive ints, got {shape!r}")
    return shape


def _numel(shape: tuple[int, ...]) -> int:
    n = 1
    for s in shape:
        n *= s
    return n


@dataclass(frozen=True, eq=False)
class Tensor:
    """A named, shaped array of f32 or f16 values, stored flat in row-major order."""

    name: str
    dtype: str
    shape: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        if not self.name:
            raise ArtifactError("tensor name must be non-empty")
        if self.dtype not in DTYPES:
            raise ArtifactError(f"unsupported dtype {self.dtype!r}")
        object.__setattr__(self, "shape", _check_shape(self.shape))
        data = np.ascontiguousarray(self.data, dtype=DTYPES[self.dtype]).reshape(-1)
        object.__setattr__(self, "data", data)
        if data.size != _numel(self.shape):
            raise ArtifactError(
                f"tensor {self.name!r}: data length {data.size} != product(shape) {_numel(self.shape)}"
            )
        if not np.isfinite(data.astype(np.float64)).all():
            raise ArtifactError(f"tensor {self.name!r}: non-finite values")

    @property
    def numel(self) -> int:
        return self.data.size

    @property
    def payload_bytes(self) -> int:
        return self.data.size * DTYPES[self.dtype].itemsize

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tensor)
            and self.name == other.name
            and self.dtype == other.dtype
            and self.shape == other.shape
            and self.data.tobytes() == other.data.tobytes()
        )


def pack_indices(indices: np.ndarray, n_bits: int) -> bytes:
    """Pack indices at ``n_bits`` each: index i occupies bits [i*n, i*n+n),
    bit j living in byte j//8 at position j%8 (LSB first). Trailing bits of
    the final byte are zero."""
    if not 1 <= n_bits <= 8:
        raise ArtifactError(f"n_bits must be in [1,8], got {n_bits}")
    idx = np.asarray(indices, dtype=np.uint64)
    if idx.size and int(idx.max()) >= (1 << n_bits):
        raise ArtifactError(f"index {int(idx.max())} does not fit in {n_bits} bits")
    bits = ((idx[:, None] >> np.arange(n_bits, dtype=np.uint64)) & 1).astype(np.uint8)
    return np.packbits(bits.reshape(-1), bitorder="little").tobytes()


def unpack_indices(packed: bytes, n_bits: int, count: int) -> np.ndarray:
    """Inverse of :func:`pack_indices`; returns ``count`` indices as uint16."""
    need = (count * n_bits + 7) // 8
    if len(packed) != need:
        raise ArtifactError(f"packed index blob is {len(packed)} bytes, expected {need}")
    bits = np.unpackbits(np.frombuffer(packed, dtype=np.uint8), bitorder="little")
    bits = bits[: count * n_bits].reshape(count, n_bits).astype(np.uint16)
    return bits @ (1 << np.arange(n_bits, dtype=np.uint16))


@dataclass(frozen=True, eq=False)
class PalettizedTensor:
    """Bit-packed palette indices plus a lookup table of centroid values.

    The LUT always holds exactly ``2**n_bits`` entries, sorted ascending:
    a strictly increasing prefix of live centroids, padded by repeating the
    last centroid. Indices may only reference the live prefix.
    """

    name: str
    n_bits: int
    lut: np.ndarray
    lut_dtype: str
    shape: tuple[int, ...]
    packed_indices: bytes

    def __post_init__(self):
        if not self.name:
            raise ArtifactError("tensor name must be non-empty")
        if not 1 <= int(self.n_bits) <= 8:
            raise ArtifactError(f"tensor {self.name!r}: n_bits must be in [1,8]")
        if self.lut_dtype not in DTYPES:
            raise ArtifactError(f"tensor {self.name!r}: unsupported lut_dtype {self.lut_dtype!r}")
        object.__setattr__(self, "shape", _check_shape(self.shape))
        lut = np.ascontiguousarray(self.lut, dtype=DTYPES[self.lut_dtype]).reshape(-1)
        object.__setattr__(self, "lut", lut)
        object.__setattr__(self, "packed_indices", bytes(self.packed_indices))
        if lut.size != (1 << self.n_bits):
            raise ArtifactError(
                f"tensor {self.name!r}: LUT has {lut.size} entries, expected {1 << self.n_bits}"
            )
        wide = lut.astype(np.float64)
        if not np.isfinite(wide).all():
            raise ArtifactError(f"tensor {self.name!r}: non-finite LUT values")
        k = self.live_entries
        if not np.all(wide[k:] == wide[k - 1]):
            raise ArtifactError(f"tensor {self.name!r}: LUT is not sorted-ascending with repeated-tail padding")
        idx = unpack_indices(self.packed_indices, self.n_bits, self.numel)
        if idx.size and int(idx.max()) >= k:
            raise ArtifactError(
                f"tensor {self.name!r}: palette index out of range ({int(idx.max())} >= {k} live entries)"
            )

    @property
    def numel(self) -> int:
        return _numel(self.shape)

    @property
    def live_entries(self) -> int:
        """Number of live (strictly increasing) LUT entries before padding."""
        wide = self.lut.astype(np.float64)
        k = 1
        while k < wide.size and wide[k] > wide[k - 1]:
            k += 1
        return k

    @property
    def payload_bytes(self) -> int:
        return self.lut.size * DTYPES[self.lut_dtype].itemsize + len(self.packed_indices)

    def indices(self) -> np.ndarray:
        return unpack_indices(self.packed_indices, self.n_bits, self.numel)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PalettizedTensor)
            and self.name == other.name
            and self.n_bits == other.n_bits
            and self.lut_dtype == other.lut_dtype
            and self.shape == other.shape
            and self.lut.tobytes() == other.lut.tobytes()
            and self.packed_indices == other.packed_indices
        )


AnyTensor = Union[Tensor, PalettizedTensor]


def _check_metadata(metadata: dict) -> dict:
    for key, value in metadata.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise ArtifactError(f"metadata must map strings to strings, got {key!r}: {value!r}")
    return dict(metadata)


def _blobs_for(t: AnyTensor) -> list[bytes]:
    if isinstance(t, Tensor):
        return [t.data.tobytes()]
    return [t.lut.tobytes(), t.packed_indices]


def _entry_for(t: AnyTensor) -> dict:
    if isinstance(t, Tensor):
        return {"name": t.name, "kind": "raw", "dtype": t.dtype, "shape": list(t.shape)}
    return {
        "name": t.name,
        "kind": "pal",
        "dtype": t.lut_dtype,
        "shape": list(t.shape),
        "n_bits": t.n_bits,
    }


def write_artifact(tensors: list[AnyTensor], metadata: dict, path) -> None:
    """Write tensors plus metadata to ``path`` as an MFRW artifact.

    Output bytes are a pure function of the inputs. Tensor names must be
    unique; the write is atomic (temp file + rename).
    """
    metadata = _check_metadata(metadata)
    names = [t.name for t in tensors]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ArtifactError(f"duplicate tensor name(s): {', '.join(dup)}")

    entries = [_entry_for(t) for t in tensors]
    blob_lists = [_blobs_for(t) for t in tensors]

    # Offsets depend on the header length, which depends on the offsets'
    # digit counts; iterate to the (monotone, hence guaranteed) fixed point.
    header_len = 0
    while True:
        cursor = _align_up(16 + header_len)
        for entry, blobs in zip(entries, blob_lists):
            if entry["kind"] == "pal":
                entry["lut_offset"] = cursor
                entry["lut_len"] = len(blobs[0])
                cursor = _align_up(cursor + len(blobs[0]))
            entry["data_offset"] = cursor
            entry["data_len"] = len(blobs[-1])
            cursor = _align_up(cursor + len(blobs[-1]))
        header_bytes = canonical_json_bytes({"metadata": metadata, "tensors": entries})
        if len(header_bytes) == header_len:
            break
        header_len = len(header_bytes)

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(VERSION.to_bytes(4, "little"))
            f.write(len(header_bytes).to_bytes(8, "little"))
            f.write(header_bytes)
            pos = 16 + len(header_bytes)
            for entry, blobs in zip(entries, blob_lists):
                offsets = [entry.get("lut_offset"), entry["data_offset"]] if entry["kind"] == "pal" else [entry["data_offset"]]
                for off, blob in zip(offsets, blobs):
                    f.write(b"\x00" * (off - pos))
                    f.write(blob)
                    pos = off + len(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _decode_entry(entry: dict, raw: bytes) -> AnyTensor:
    name = entry["name"]
    dtype = entry["dtype"]
    if dtype not in DTYPES:
        raise ArtifactError(f"tensor {name!r}: unsupported dtype {dtype!r}")
    shape = _check_shape(entry["shape"])
    count = _numel(shape)
    data = raw[entry["data_offset"] : entry["data_offset"] + entry["data_len"]]
    if entry["kind"] == "raw":
        expected = count * DTYPES[dtype].itemsize
        if entry["data_len"] != expected:
            raise ArtifactError(f"tensor {name!r}: data_len {entry['data_len']} != {expected}")
        return Tensor(name, dtype, shape, np.frombuffer(data, dtype=DTYPES[dtype]))
    if entry["kind"] == "pal":
        n_bits = int(entry["n_bits"])
        if not 1 <= n_bits <= 8:
            raise ArtifactError(f"tensor {name!r}: n_bits out of range")
        lut_raw = raw[entry["lut_offset"] : entry["lut_offset"] + entry["lut_len"]]
        expected_lut = (1 << n_bits) * DTYPES[dtype].itemsize
        if entry["lut_len"] != expected_lut:
            raise ArtifactError(f"tensor {name!r}: lut_len {entry['lut_len']} != {expected_lut}")
        expected_data = (count * n_bits + 7) // 8
        if entry["data_len"] != expected_data:
            raise ArtifactError(f"tensor {name!r}: data_len {entry['data_len']} != {expected_data}")
        return PalettizedTensor(
            name=name,
            n_bits=n_bits,
            lut=np.frombuffer(lut_raw, dtype=DTYPES[dtype]),
            lut_dtype=dtype,
            shape=shape,
            packed_indices=data,
        )
    raise ArtifactError(f"tensor {name!r}: unknown kind {entry['kind']!r}")


_ENTRY_KEYS = {"name", "kind", "dtype", "shape", "data_offset", "data_len"}


def _parse(raw: bytes) -> tuple[list[dict], dict]:
    """Structural pass: validates preamble, header JSON, and blob regions."""
    if len(raw) < 16:
        raise ArtifactError("truncated header (file shorter than the 16-byte preamble)")
    if raw[:4] != MAGIC:
        raise ArtifactError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version = int.from_bytes(raw[4:8], "little")
    if version != VERSION:
        raise ArtifactError(f"unsupported version {version}")
    header_len = int.from_bytes(raw[8:16], "little")
    header_end = 16 + header_len
    if header_end > len(raw):
        raise ArtifactError("truncated header (declared header extends past end of file)")
    try:
        header = json.loads(raw[16:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"bad header json: {exc}") from exc
    if not isinstance(header, dict) or not isinstance(header.get("tensors"), list):
        raise ArtifactError("bad header json: expected object with 'tensors' list")
    metadata = header.get("metadata", {})
    if not isinstance(metadata, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in metadata.items()
    ):
        raise ArtifactError("bad metadata: must map strings to strings")

    cursor = header_end
    names = set()
    for entry in header["tensors"]:
        if not isinstance(entry, dict) or not _ENTRY_KEYS <= set(entry):
            raise ArtifactError("bad header json: incomplete tensor entry")
        name = entry["name"]
        if name in names:
            raise ArtifactError(f"duplicate tensor name(s): {name}")
        names.add(name)
        regions = []
        try:
            if entry["kind"] == "pal":
                if "lut_offset" not in entry or "lut_len" not in entry:
                    raise ArtifactError(f"tensor {name!r}: palettized entry lacks LUT region")
                regions.append((int(entry["lut_offset"]), int(entry["lut_len"]), "lut"))
            regions.append((int(entry["data_offset"]), int(entry["data_len"]), "data"))
        except (TypeError, ValueError) as exc:
            raise ArtifactError(f"bad header json: tensor {name!r} has non-integer region fields") from exc
        for offset, length, label in regions:
            if offset % ALIGN != 0:
                raise ArtifactError(f"tensor {name!r}: unaligned {label} region at offset {offset}")
            if offset < cursor:
                raise ArtifactError(f"tensor {name!r}: overlapping or out-of-order {label} region")
            if offset + length > len(raw):
                raise ArtifactError(f"tensor {name!r}: truncated {label} region (extends past end of file)")
            cursor = offset + length
    if cursor < len(raw):
        raise ArtifactError(f"trailing data: {len(raw) - cursor} unaccounted bytes at end of file")
    return header["tensors"], metadata


def read_artifact(path) -> tuple[list[AnyTensor], dict]:
    """Read an MFRW artifact; the exact inverse of :func:`write_artifact`.

    All type invariants (shape/length agreement, finiteness, LUT form,
    index ranges) are re-verified; violations raise :class:`ArtifactError`.
    """
    raw = Path(path).read_bytes()
    entries, metadata = _parse(raw)
    return [_decode_entry(entry, raw) for entry in entries], metadata


def verify_artifact(path) -> list[str]:
    """Validate ``path`` and return a violation report (empty iff loadable).

    Violations are data, not errors: unreadable or corrupt files yield
    messages rather than exceptions.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        return [f"unreadable: {exc}"]
    try:
        entries, _ = _parse(raw)
    except ArtifactError as exc:
        return [str(exc)]
    violations = []
    for entry in entries:
        try:
            _decode_entry(entry, raw)
        except ArtifactError as exc:
            violations.append(str(exc))
    return violations
