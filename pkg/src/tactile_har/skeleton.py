"""Skeleton sequences: SKL1 text I/O, Kinect v1 -> v2 joint fill-in and
preprocessing (global translation, scale normalization, temporal resampling).

Joint numbering is 1-based and follows the Kinect v2 layout; a Kinect v1
capture provides joints 1..20 and joints 21..25 are v2-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TextIO

import numpy as np

from .errors import (
    DegenerateBone,
    EmptySequence,
    FrameCountMismatch,
    InvalidJoint,
    MalformedHeader,
    MalformedRecord,
    NonFiniteCoordinate,
    UnsupportedJointCount,
    WrongJointCount,
    ZeroTargetLength,
)

NUM_JOINTS_V1 = 20
NUM_JOINTS_V2 = 25
SUPPORTED_JOINT_COUNTS = (NUM_JOINTS_V1, NUM_JOINTS_V2)

# v2-only joint <- v1 joint whose coordinates it receives (1-based)
V1_FILL_TABLE = {21: 3, 22: 7, 23: 7, 24: 11, 25: 11}

SPINE_BASE = 1
SPINE_MID = 2
# reference bone for scale normalization
REFERENCE_BONE = (SPINE_BASE, SPINE_MID)
MIN_BONE_LENGTH = 1e-6

SKL_MAGIC = "skl"
SKL_VERSION = 1
DEFAULT_FRAME_RATE = 30.0


def _check_joint(joint: int, limit: int = NUM_JOINTS_V2) -> int:
    if not isinstance(joint, (int, np.integer)) or not 1 <= joint <= limit:
        raise InvalidJoint(f"joint index must be in 1..{limit}, got {joint!r}")
    return int(joint)


@dataclass(frozen=True, eq=False)
class SkeletonFrame:
    """One body pose: ``joints`` is (J, 3) in meters, ``valid`` is (J,)."""

    joints: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        joints = np.array(self.joints, dtype=np.float64)
        if joints.ndim != 2 or joints.shape[1] != 3:
            raise WrongJointCount(f"expected (J, 3) joint array, got shape {joints.shape}")
        if not np.all(np.isfinite(joints)):
            raise NonFiniteCoordinate("joint coordinates must be finite")
        if self.valid is None:
            valid = np.ones(len(joints), dtype=bool)
        else:
            valid = np.array(self.valid, dtype=bool)
        if valid.shape != (len(joints),):
            raise WrongJointCount("validity flags do not match the joint count")
        joints.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "valid", valid)

    @property
    def num_joints(self) -> int:
        return len(self.joints)

    def joint(self, index: int) -> np.ndarray:
        """Position of a 1-based joint."""
        return self.joints[_check_joint(index, self.num_joints) - 1]

    def __eq__(self, other):
        if not isinstance(other, SkeletonFrame):
            return NotImplemented
        return np.array_equal(self.joints, other.joints) and np.array_equal(self.valid, other.valid)


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    frames: tuple[SkeletonFrame, ...]
    frame_rate_hz: float = DEFAULT_FRAME_RATE
    subject_id: int | None = None
    label: int | None = None

    def __post_init__(self):
        frames = tuple(self.frames)
        if frames and len({f.num_joints for f in frames}) != 1:
            raise WrongJointCount("all frames must have the same joint count")
        if not (self.frame_rate_hz > 0 and math.isfinite(self.frame_rate_hz)):
            raise MalformedHeader(f"frame rate must be positive, got {self.frame_rate_hz!r}")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_arrays(cls, joints, valid=None, **kwargs) -> "SkeletonSequence":
        """Build from a (T, J, 3) coordinate array and optional (T, J) flags."""
        joints = np.asarray(joints, dtype=np.float64)
        if valid is None:
            valid = np.ones(joints.shape[:2], dtype=bool)
        return cls(tuple(SkeletonFrame(j, v) for j, v in zip(joints, valid)), **kwargs)

    def __len__(self):
        return len(self.frames)

    @property
    def num_joints(self) -> int:
        return self.frames[0].num_joints if self.frames else 0

    def coordinates(self) -> np.ndarray:
        """(T, J, 3) array of all joint positions."""
        if not self.frames:
            return np.zeros((0, 0, 3))
        return np.stack([f.joints for f in self.frames])

    def validity(self) -> np.ndarray:
        if not self.frames:
            return np.zeros((0, 0), dtype=bool)
        return np.stack([f.valid for f in self.frames])

    def _replace_coordinates(self, joints: np.ndarray) -> "SkeletonSequence":
        return SkeletonSequence.from_arrays(
            joints, self.validity(),
            frame_rate_hz=self.frame_rate_hz, subject_id=self.subject_id, label=self.label,
        )

    def __eq__(self, other):
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        return (
            self.frames == other.frames
            and self.frame_rate_hz == other.frame_rate_hz
            and self.subject_id == other.subject_id
            and self.label == other.label
        )


# ---------------------------------------------------------------------------
# SKL1 text format

# SKL1 stores single-precision values: 9 significant digits identify a
# float32 exactly, so parse -> serialize is lossless.

def _format_real(x: float) -> str:
    return f"{float(np.float32(x)):.9g}"


def _single(a):
    return np.asarray(a, dtype=np.float64).astype(np.float32).astype(np.float64)


def parse_skeleton_file(stream: TextIO | str) -> SkeletonSequence:
    """Parse an SKL1 text stream (or string) into a sequence.

    20-joint files are returned as-is; call :func:`remap_sequence` to fill in
    the v2-only joints.
    """
    text = stream if isinstance(stream, str) else stream.read()
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append((lineno, line))
    if not lines:
        raise MalformedHeader("empty skeleton file")

    lineno, header = lines[0]
    tokens = header.split()
    if len(tokens) not in (4, 5) or tokens[0] != SKL_MAGIC:
        raise MalformedHeader(f"line {lineno}: expected 'skl <version> <frames> <joints> [<rate>]'")
    try:
        version, num_frames, num_joints = (int(t) for t in tokens[1:4])
        frame_rate = float(_single(float(tokens[4]))) if len(tokens) == 5 else DEFAULT_FRAME_RATE
    except ValueError as exc:
        raise MalformedHeader(f"line {lineno}: {exc}") from None
    if version != SKL_VERSION:
        raise MalformedHeader(f"unsupported SKL version {version}")
    if num_frames < 1:
        raise MalformedHeader("skeleton file declares no frames")
    if num_joints not in SUPPORTED_JOINT_COUNTS:
        raise UnsupportedJointCount(f"{num_joints} joints per frame (expected 20 or 25)")
    if not (frame_rate > 0 and math.isfinite(frame_rate)):
        raise MalformedHeader(f"frame rate must be positive, got {tokens[4]}")

    body = lines[1:]
    expected = num_frames * num_joints
    if len(body) != expected:
        raise FrameCountMismatch(
            f"header declares {num_frames} frames x {num_joints} joints = {expected} "
            f"joint lines, found {len(body)}"
        )

    joints = np.empty((expected, 3))
    valid = np.ones(expected, dtype=bool)
    for n, (lineno, line) in enumerate(body):
        parts = line.split()
        if len(parts) not in (3, 4):
            raise MalformedRecord(f"line {lineno}: expected 'x y z [v]'")
        try:
            joints[n] = [float(p) for p in parts[:3]]
        except ValueError:
            raise MalformedRecord(f"line {lineno}: bad coordinate") from None
        if len(parts) == 4:
            if parts[3] not in ("0", "1"):
                raise MalformedRecord(f"line {lineno}: validity flag must be 0 or 1")
            valid[n] = parts[3] == "1"
    if not np.all(np.isfinite(joints)):
        bad = body[int(np.argwhere(~np.isfinite(joints))[0, 0])][0]
        raise NonFiniteCoordinate(f"line {bad}: non-finite coordinate")

    return SkeletonSequence.from_arrays(
        _single(joints).reshape(num_frames, num_joints, 3),
        valid.reshape(num_frames, num_joints),
        frame_rate_hz=frame_rate,
    )


def serialize_skeleton(seq: SkeletonSequence) -> str:
    if not seq.frames:
        raise EmptySequence("cannot serialize an empty sequence")
    out = [f"{SKL_MAGIC} {SKL_VERSION} {len(seq)} {seq.num_joints} {_format_real(seq.frame_rate_hz)}"]
    for frame in seq.frames:
        for (x, y, z), v in zip(frame.joints, frame.valid):
            out.append(f"{_format_real(x)} {_format_real(y)} {_format_real(z)} {int(v)}")
    return "\n".join(out) + "\n"


def read_skeleton_file(path) -> SkeletonSequence:
    with open(path, encoding="utf-8") as fh:
        return parse_skeleton_file(fh)


def write_skeleton_file(seq: SkeletonSequence, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_skeleton(seq))


# ---------------------------------------------------------------------------
# joint fill-in

def remap_v1_to_v2(frame: SkeletonFrame) -> SkeletonFrame:
    """Extend a 20-joint Kinect v1 frame to the 25-joint v2 layout.

    The v2-only joints copy their nearest v1 neighbour and are flagged invalid.
    """
    if frame.num_joints != NUM_JOINTS_V1:
        raise WrongJointCount(f"expected {NUM_JOINTS_V1} joints, got {frame.num_joints}")
    joints = np.empty((NUM_JOINTS_V2, 3))
    joints[:NUM_JOINTS_V1] = frame.joints
    valid = np.zeros(NUM_JOINTS_V2, dtype=bool)
    valid[:NUM_JOINTS_V1] = frame.valid
    for target, source in V1_FILL_TABLE.items():
        joints[target - 1] = frame.joints[source - 1]
    return SkeletonFrame(joints, valid)


def remap_sequence(seq: SkeletonSequence) -> SkeletonSequence:
    """Remap every frame of a 20-joint sequence; 25-joint input is returned unchanged."""
    if seq.num_joints == NUM_JOINTS_V2:
        return seq
    if seq.num_joints != NUM_JOINTS_V1:
        raise UnsupportedJointCount(f"{seq.num_joints} joints per frame")
    return SkeletonSequence(
        tuple(remap_v1_to_v2(f) for f in seq.frames),
        frame_rate_hz=seq.frame_rate_hz, subject_id=seq.subject_id, label=seq.label,
    )


# ---------------------------------------------------------------------------
# preprocessing

def center_translate(seq: SkeletonSequence, ref_joint: int = SPINE_BASE) -> SkeletonSequence:
    """Shift the whole sequence so the first frame's ``ref_joint`` sits at the origin."""
    _check_joint(ref_joint, NUM_JOINTS_V1)
    if not seq.frames:
        raise EmptySequence("cannot translate an empty sequence")
    coords = seq.coordinates()
    return seq._replace_coordinates(coords - coords[0, ref_joint - 1])


def bone_length(frame: SkeletonFrame, bone: tuple[int, int] = REFERENCE_BONE) -> float:
    a, b = bone
    return float(np.linalg.norm(frame.joint(b) - frame.joint(a)))


def normalize_scale(seq: SkeletonSequence, bone: tuple[int, int] = REFERENCE_BONE) -> SkeletonSequence:
    """Divide every coordinate by the first frame's reference bone length."""
    if not seq.frames:
        raise EmptySequence("cannot normalize an empty sequence")
    length = bone_length(seq.frames[0], bone)
    if length < MIN_BONE_LENGTH:
        raise DegenerateBone(f"reference bone {bone} has length {length:.3g} m in frame 0")
    return seq._replace_coordinates(seq.coordinates() / length)


def resample_indices(n: int, target_len: int) -> list[int]:
    """Frame schedule used by :func:`resample_temporal`."""
    if n == target_len:
        return list(range(n))
    if n < target_len:
        return [i % n for i in range(target_len)]
    # round half up, so the schedule never depends on banker's rounding
    return [min(math.floor(i * n / target_len + 0.5), n - 1) for i in range(target_len)]


def resample_temporal(seq: SkeletonSequence, target_len: int) -> SkeletonSequence:
    """Loop-pad short sequences and subsample long ones to exactly ``target_len`` frames."""
    if not seq.frames:
        raise EmptySequence("cannot resample an empty sequence")
    if target_len < 1:
        raise ZeroTargetLength(f"target length must be positive, got {target_len}")
    idx = resample_indices(len(seq), target_len)
    return SkeletonSequence(
        tuple(seq.frames[i] for i in idx),
        frame_rate_hz=seq.frame_rate_hz, subject_id=seq.subject_id, label=seq.label,
    )


def preprocess(seq: SkeletonSequence, target_len: int, ref_joint: int = SPINE_BASE) -> SkeletonSequence:
    """Full skeleton preprocessing chain: remap, center, scale, resample."""
    seq = remap_sequence(seq)
    seq = center_translate(seq, ref_joint)
    seq = normalize_scale(seq)
    return resample_temporal(seq, target_len)


def file_precision(seq: SkeletonSequence) -> SkeletonSequence:
    """Round coordinates to the precision an SKL1 file holds.

    ``parse(serialize(s)) == file_precision(s)`` for every sequence, so a
    consumer of a written stage file sees exactly these values.
    """
    return replace(seq, frames=tuple(SkeletonFrame(_single(f.joints), f.valid) for f in seq.frames))
