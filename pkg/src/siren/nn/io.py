"""Binary model file.

Layout (all integers little-endian)::

    b"SIREN-MLP"                 magic
    u32                          format version
    32 bytes                     feature-layout hash
    u32 + utf-8                  architecture descriptor, layer specs joined by ","
    u32 n, n x f32               standardization mean
    u32 n, n x f32               standardization std
    u32                          tensor record count
      u16 + utf-8 name, u8 ndim, ndim x u32 shape, prod(shape) x f32 (row-major)
    8 bytes                      blake2b-64 of everything above
"""

from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path

import numpy as np

from siren.errors import ModelFormatError
from siren.features import layout_hash
from siren.nn.model import LayerSpec, ModelParams

MAGIC = b"SIREN-MLP"
FORMAT_VERSION = 1
_CHECKSUM_BYTES = 8


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=_CHECKSUM_BYTES).digest()


def _write_blob(buf: io.BytesIO, data: bytes, width: str = "<I") -> None:
    buf.write(struct.pack(width, len(data)))
    buf.write(data)


def _write_vector(buf: io.BytesIO, v: np.ndarray) -> None:
    buf.write(struct.pack("<I", v.size))
    buf.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def dumps(params: ModelParams) -> bytes:
    """Serialize; tensors are stored as float32."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    buf.write(layout_hash())
    _write_blob(buf, ",".join(s.describe() for s in params.layers).encode())
    _write_vector(buf, params.feature_mean)
    _write_vector(buf, params.feature_std)
    buf.write(struct.pack("<I", len(params.tensors)))
    for name, arr in params.tensors.items():
        _write_blob(buf, name.encode(), "<H")
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    body = buf.getvalue()
    return body + _checksum(body)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError("model file is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def blob(self, width: str = "<I") -> bytes:
        (n,) = self.unpack(width)
        return self.take(n)

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float32)


def loads(data: bytes) -> ModelParams:
    if not data.startswith(MAGIC):
        raise ModelFormatError("not a siren model file (bad magic)")
    if len(data) < len(MAGIC) + _CHECKSUM_BYTES:
        raise ModelFormatError("model file is truncated")
    body, tail = data[:-_CHECKSUM_BYTES], data[-_CHECKSUM_BYTES:]
    if _checksum(body) != tail:
        raise ModelFormatError("model checksum mismatch")
    r = _Reader(body)
    r.take(len(MAGIC))
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    if r.take(32) != layout_hash():
        raise ModelFormatError("model was trained on a different feature layout")
    layers = tuple(LayerSpec.parse(s) for s in r.blob().decode().split(","))
    mean = r.floats(r.unpack("<I")[0])
    std = r.floats(r.unpack("<I")[0])
    (count,) = r.unpack("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.blob("<H").decode()
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        tensors[name] = r.floats(int(np.prod(shape, dtype=np.int64))).reshape(shape)
    if r.pos != len(body):
        raise ModelFormatError("trailing bytes after tensor records")
    return ModelParams(layers, tensors, mean, std)


def save_model(params: ModelParams, path: str | Path) -> None:
    Path(path).write_bytes(dumps(params))


def load_model(path: str | Path) -> ModelParams:
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"model file not found: {path}")
    return loads(path.read_bytes())
