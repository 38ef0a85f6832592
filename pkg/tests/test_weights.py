import struct

import numpy as np
import pytest

from oracles import random_model
from tactile_har.errors import (
    BadMagic,
    ChecksumMismatch,
    DimChainBroken,
    MalformedRecord,
    TruncatedStream,
    VersionUnsupported,
)
from tactile_har.gcn import Head, ModelWeights, MSGCNLayer
from tactile_har.weights import load_weights, payload_checksum, save_weights


def _tiny() -> ModelWeights:
    layer = MSGCNLayer((np.array([[1.0, -2.0]]), np.array([[0.5, 0.25]])), np.array([0.0, 1.0]))
    return ModelWeights((layer,), Head(np.array([[1.0], [2.0]])))


def test_hand_assembled_layout():
    data = save_weights(_tiny())
    f = lambda *v: struct.pack(f"<{len(v)}f", *v)
    payload = (
        struct.pack("<I", 2)
        + struct.pack("<BIIII", 1, 1, 2, 2, 2) + f(1, -2) + f(0.5, 0.25) + f(0, 1)
        + struct.pack("<BIIII", 3, 2, 1, 1, 1) + f(1, 2)
    )
    assert data == b"MSW1\x01" + payload + struct.pack("<I", sum(payload) % 2**32)


def test_round_trip_random(rng):
    for _ in range(100):
        model = random_model(rng)
        data = save_weights(model)
        back = load_weights(data)
        assert back == model
        assert save_weights(back) == data


def test_fixture_round_trip(fixture_dir):
    data = (fixture_dir / "model.msw").read_bytes()
    assert save_weights(load_weights(data)) == data


def test_every_truncation_detected():
    data = save_weights(_tiny())
    for n in range(len(data)):
        with pytest.raises(TruncatedStream):
            load_weights(data[:n])


def test_bad_magic_and_version():
    data = save_weights(_tiny())
    with pytest.raises(BadMagic):
        load_weights(b"MSX1" + data[4:])
    with pytest.raises(VersionUnsupported):
        load_weights(data[:4] + b"\x02" + data[5:])


def test_checksum_mismatch():
    data = bytearray(save_weights(_tiny()))
    data[-1] ^= 0xFF
    with pytest.raises(ChecksumMismatch):
        load_weights(bytes(data))


def _with_checksum(payload: bytes) -> bytes:
    return b"MSW1\x01" + payload + struct.pack("<I", payload_checksum(payload))


def test_scale_count_disagrees_with_matrices():
    # layer declares K=2 (3 scales) but stores only 2 matrices
    payload = (
        struct.pack("<I", 2)
        + struct.pack("<BIIII", 1, 1, 1, 3, 2) + struct.pack("<3f", 1, 1, 0)
        + struct.pack("<BIIII", 3, 1, 1, 1, 1) + struct.pack("<f", 1)
    )
    with pytest.raises(DimChainBroken):
        load_weights(_with_checksum(payload))


def test_broken_chain_between_layers():
    payload = (
        struct.pack("<I", 2)
        + struct.pack("<BIIII", 1, 1, 2, 1, 1) + struct.pack("<4f", 1, 1, 0, 0)
        + struct.pack("<BIIII", 3, 3, 1, 1, 1) + struct.pack("<3f", 1, 1, 1)
    )
    with pytest.raises(DimChainBroken):
        load_weights(_with_checksum(payload))


def test_missing_head_and_record_after_head():
    with pytest.raises(DimChainBroken):
        load_weights(_with_checksum(struct.pack("<I", 0)))
    layer = struct.pack("<BIIII", 1, 1, 1, 1, 1) + struct.pack("<2f", 1, 0)
    head = struct.pack("<BIIII", 3, 1, 1, 1, 1) + struct.pack("<f", 1)
    with pytest.raises(DimChainBroken):
        load_weights(_with_checksum(struct.pack("<I", 2) + head + layer))
    with pytest.raises(DimChainBroken):
        load_weights(_with_checksum(struct.pack("<I", 1) + layer))


def test_unknown_kind_and_trailing_bytes():
    with pytest.raises(MalformedRecord):
        load_weights(_with_checksum(struct.pack("<I", 1) + b"\x07" + b"\0" * 16))
    with pytest.raises(MalformedRecord):
        load_weights(save_weights(_tiny()) + b"\0")


def test_non_finite_weight_rejected():
    payload = struct.pack("<I", 1) + struct.pack("<BIIII", 3, 1, 1, 1, 1) + struct.pack("<f", float("nan"))
    with pytest.raises(MalformedRecord):
        load_weights(_with_checksum(payload))
