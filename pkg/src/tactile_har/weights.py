"""MSW1 binary model-weights format.

Layout (little-endian throughout)::

    "MSW1"  version:u8=1  record_count:u32
    record*: kind:u8 (1 MS-GCN, 2 G3D, 3 head)
             c_in:u32 c_out:u32 scales:u32 [tau:u32 if G3D] matrices:u32
             matrices x (c_in*c_out f32, row-major)
             bias (c_out f32, layers only)
    checksum:u32 = sum of every byte between the version byte and the checksum, mod 2**32

``scales`` is the declared K+1 and ``matrices`` the count actually stored;
they must agree. The head is a single matrix, comes last and appears once.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import (
    BadMagic,
    ChecksumMismatch,
    DimChainBroken,
    MalformedRecord,
    TruncatedStream,
    VersionUnsupported,
)
from .gcn import G3DLayer, Head, ModelWeights, MSGCNLayer

MAGIC = b"MSW1"
VERSION = 1
KIND_MSGCN = 0x01
KIND_G3D = 0x02
KIND_HEAD = 0x03
HEADER_SIZE = len(MAGIC) + 1


def payload_checksum(payload: bytes) -> int:
    return sum(payload) & 0xFFFFFFFF


def _f32(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f4").tobytes()


def save_weights(model: ModelWeights) -> bytes:
    payload = bytearray(struct.pack("<I", len(model.layers) + 1))
    for layer in model.layers:
        kind = KIND_G3D if isinstance(layer, G3DLayer) else KIND_MSGCN
        payload += struct.pack("<BIII", kind, layer.in_channels, layer.out_channels, layer.num_scales)
        if kind == KIND_G3D:
            payload += struct.pack("<I", layer.tau)
        payload += struct.pack("<I", len(layer.weights))
        for w in layer.weights:
            payload += _f32(w)
        payload += _f32(layer.bias)
    head = model.head
    payload += struct.pack("<BIIII", KIND_HEAD, head.in_channels, head.num_classes, 1, 1)
    payload += _f32(head.weights)
    return MAGIC + bytes([VERSION]) + bytes(payload) + struct.pack("<I", payload_checksum(payload))


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedStream(
                f"need {n} bytes at offset {self.pos}, only {len(self.data) - self.pos} remain"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def reals(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        values = np.frombuffer(self.take(4 * count), dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise MalformedRecord(f"non-finite weight near offset {self.pos}")
        return values.reshape(shape)


def load_weights(data) -> ModelWeights:
    """Parse and validate an MSW1 byte string (or binary stream)."""
    if hasattr(data, "read"):
        data = data.read()
    data = bytes(data)
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        if len(data) < len(MAGIC) and MAGIC.startswith(data):
            raise TruncatedStream("stream ends inside the magic bytes")
        raise BadMagic(f"expected magic {MAGIC!r}, got {data[:len(MAGIC)]!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedStream("stream ends before the version byte")
    if data[len(MAGIC)] != VERSION:
        raise VersionUnsupported(f"MSW version {data[len(MAGIC)]} is not supported")

    r = _Reader(data, HEADER_SIZE)
    count = r.u32()
    if count < 1:
        raise DimChainBroken("model has no head record")
    layers = []
    head = None
    for n in range(count):
        kind = r.u8()
        if kind not in (KIND_MSGCN, KIND_G3D, KIND_HEAD):
            raise MalformedRecord(f"record {n}: unknown layer kind 0x{kind:02x}")
        if head is not None:
            raise DimChainBroken(f"record {n} follows the head record")
        c_in, c_out, scales = r.u32(), r.u32(), r.u32()
        tau = r.u32() if kind == KIND_G3D else None
        n_mats = r.u32()
        if n_mats != scales:
            raise DimChainBroken(f"record {n}: declares {scales} scales but stores {n_mats} matrices")
        if kind == KIND_HEAD and scales != 1:
            raise DimChainBroken(f"record {n}: head must hold exactly one matrix")
        if min(c_in, c_out, scales) < 1:
            raise DimChainBroken(f"record {n}: zero-sized dimension")
        mats = tuple(r.reals((c_in, c_out)) for _ in range(n_mats))
        if kind == KIND_HEAD:
            head = Head(mats[0])
            continue
        bias = r.reals((c_out,))
        layers.append(G3DLayer(tau, mats, bias) if kind == KIND_G3D else MSGCNLayer(mats, bias))
    if head is None:
        raise DimChainBroken("model has no head record")
    stored = r.u32()
    if r.pos != len(data):
        raise MalformedRecord(f"{len(data) - r.pos} trailing bytes after checksum")
    expected = payload_checksum(data[HEADER_SIZE:-4])
    if stored != expected:
        raise ChecksumMismatch(f"checksum 0x{stored:08x} does not match payload 0x{expected:08x}")
    return ModelWeights(tuple(layers), head)


def read_weights_file(path) -> ModelWeights:
    with open(path, "rb") as fh:
        return load_weights(fh.read())


def write_weights_file(model: ModelWeights, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_weights(model))


def random_model(rng: np.random.Generator, num_classes: int, in_channels: int = 3,
                 hidden: int = 8, ms_hops: int = 3, g3d_tau: int = 3, g3d_hops: int = 1,
                 scale: float = 0.5) -> ModelWeights:
    """Default toy architecture (MS-GCN -> G3D -> head) with float32-exact random weights."""

    def mat(*shape):
        return rng.normal(0.0, scale, size=shape).astype(np.float32).astype(np.float64)

    ms = MSGCNLayer(tuple(mat(in_channels, hidden) for _ in range(ms_hops + 1)), mat(hidden))
    g3d = G3DLayer(g3d_tau, tuple(mat(hidden, hidden) for _ in range(g3d_hops + 1)), mat(hidden))
    return ModelWeights((ms, g3d), Head(mat(hidden, num_classes)))
