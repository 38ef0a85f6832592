"""Depth stream: frame stacks, Depth Motion Images, ROI cropping and a
nearest-centroid baseline classifier that stands in for a CNN.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    AllBelowThreshold,
    DimMismatch,
    DimMismatchAcrossFrames,
    EmptySequence,
    MalformedImage,
    NoCentroids,
)
from .pgm import read_pgm
from .scores import ScoreVector, softmax

DEFAULT_NEAR_MM = 500
DEFAULT_FAR_MM = 4500
DEFAULT_SIDE = 64


def quantize_depth(raw, near: float = DEFAULT_NEAR_MM, far: float = DEFAULT_FAR_MM) -> np.ndarray:
    """Map millimetre depth linearly from [near, far] onto 0..255.

    A zero reading means "no depth" on Kinect sensors and is sent to 255
    (far background) so it cannot masquerade as the nearest surface.
    """
    if not far > near:
        raise ValueError(f"far ({far}) must exceed near ({near})")
    raw = np.asarray(raw, dtype=np.float64)
    q = np.floor((raw - near) * 255.0 / (far - near) + 0.5)
    q = np.clip(q, 0, 255)
    q[raw == 0] = 255
    return q.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class DepthSequence:
    """Stack of 8-bit depth frames, shape (frames, height, width)."""

    frames: np.ndarray
    start: int = 0
    count: int | None = None

    def __post_init__(self):
        frames = self.frames
        if isinstance(frames, (list, tuple)):
            if not frames:
                raise EmptySequence("depth sequence has no frames")
            shapes = {np.shape(f) for f in frames}
            if len(shapes) != 1:
                raise DimMismatchAcrossFrames(f"frames have differing shapes {sorted(shapes)}")
        frames = np.array(frames)
        if frames.ndim != 3 or frames.shape[0] == 0:
            raise EmptySequence(f"expected a non-empty (N, H, W) stack, got shape {frames.shape}")
        if frames.shape[1] == 0 or frames.shape[2] == 0:
            raise MalformedImage("depth frames must be non-empty")
        if frames.min() < 0 or frames.max() > 255:
            raise MalformedImage("depth values must be quantized to 0..255")
        frames = frames.astype(np.uint8)
        frames.flags.writeable = False
        count = frames.shape[0] - self.start if self.count is None else self.count
        if self.start < 0 or count < 1 or self.start + count > frames.shape[0]:
            raise EmptySequence(f"window start={self.start} count={count} outside {frames.shape[0]} frames")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "count", count)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames.shape[1:]

    def window(self) -> np.ndarray:
        return self.frames[self.start:self.start + self.count]


def load_depth_directory(path, near: float = DEFAULT_NEAR_MM, far: float = DEFAULT_FAR_MM) -> DepthSequence:
    """Read every ``*.pgm`` in ``path``; lexicographic filename order is time order."""
    files = sorted(Path(path).glob("*.pgm"))
    if not files:
        raise EmptySequence(f"no .pgm frames in {path}")
    frames = []
    for f in files:
        pixels, maxval = read_pgm(f)
        frames.append(quantize_depth(pixels, near, far) if maxval > 255 else pixels)
    return DepthSequence(frames)


@dataclass(frozen=True, eq=False)
class DepthMotionImage:
    values: np.ndarray
    roi: tuple[int, int, int, int] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or 0 in values.shape:
            raise MalformedImage(f"DMI must be a non-empty 2-D array, got shape {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.roi is not None:
            object.__setattr__(self, "roi", tuple(int(v) for v in self.roi))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def compute_dmi(seq: DepthSequence) -> DepthMotionImage:
    """255 minus the per-pixel minimum over the sequence window."""
    return DepthMotionImage(255.0 - seq.window().min(axis=0).astype(np.float64))


def normalize_dmi(img: DepthMotionImage) -> DepthMotionImage:
    peak = img.values.max()
    if peak <= 0:
        return DepthMotionImage(np.zeros_like(img.values), img.roi)
    return DepthMotionImage(img.values / peak, img.roi)


def crop_roi(img: DepthMotionImage, threshold: float = 0.0) -> DepthMotionImage:
    """Crop to the tightest box around pixels strictly above ``threshold``.

    ``roi`` is (x0, y0, x1, y1), inclusive, in the coordinates of the image
    the DMI was computed from.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    mask = img.values > threshold
    if not mask.any():
        raise AllBelowThreshold(f"no pixel above threshold {threshold}")
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    y0, y1, x0, x1 = rows[0], rows[-1], cols[0], cols[-1]
    ox, oy = (img.roi[0], img.roi[1]) if img.roi else (0, 0)
    return DepthMotionImage(img.values[y0:y1 + 1, x0:x1 + 1], (ox + x0, oy + y0, ox + x1, oy + y1))


def resize_nearest(values: np.ndarray, side: int) -> np.ndarray:
    """Nearest-neighbour resize to side x side (pixel-centre sampling)."""
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    rows = np.minimum(((np.arange(side) + 0.5) * h / side).astype(int), h - 1)
    cols = np.minimum(((np.arange(side) + 0.5) * w / side).astype(int), w - 1)
    return values[np.ix_(rows, cols)]


@dataclass(frozen=True, eq=False)
class Centroids:
    """Per-class mean DMIs, shape (classes, H, W)."""

    images: np.ndarray
    class_ids: tuple[int, ...]
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        images = np.array(self.images, dtype=np.float64)
        if images.ndim != 3 or images.shape[0] == 0:
            raise NoCentroids("centroid set is empty")
        if len(self.class_ids) != images.shape[0]:
            raise DimMismatch(f"{images.shape[0]} centroids for {len(self.class_ids)} class ids")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            np.savez(fh, images=self.images, class_ids=np.array(self.class_ids),
                     class_names=np.array(self.class_names or (), dtype=str))

    @classmethod
    def load(cls, path) -> "Centroids":
        with np.load(path, allow_pickle=False) as data:
            names = tuple(str(n) for n in data["class_names"]) or None
            return cls(data["images"], tuple(int(c) for c in data["class_ids"]), names)


def nearest_centroid_classify(img: DepthMotionImage, centroids: Centroids | Sequence[np.ndarray],
                              temperature: float = 1.0, side: int | None = DEFAULT_SIDE) -> ScoreVector:
    """softmax(-||img - centroid||^2 / temperature) over classes.

    With ``side`` set, the image and every centroid are first resized to
    side x side; with ``side=None`` they must already share dimensions.
    """
    if not isinstance(centroids, Centroids):
        if len(centroids) == 0:
            raise NoCentroids("no centroids given")
        centroids = Centroids(np.stack([np.asarray(c, dtype=np.float64) for c in centroids]),
                              tuple(range(1, len(centroids) + 1)))
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    x = img.values
    refs = centroids.images
    if side is not None:
        x = resize_nearest(x, side)
        refs = np.stack([resize_nearest(c, side) for c in refs])
    if refs.shape[1:] != x.shape:
        raise DimMismatch(f"image is {x.shape}, centroids are {refs.shape[1:]}")
    d2 = ((refs - x) ** 2).sum(axis=(1, 2))
    return ScoreVector(softmax(-d2 / temperature), centroids.class_ids, centroids.class_names)
