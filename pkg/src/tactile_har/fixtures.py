"""Deterministic generator for the bundled end-to-end fixture set.

Layout written under the target directory::

    config.yaml  model.msw  centroids.npz
    skeleton/<id>.skl          SKL1, 20- or 25-joint
    depth/<id>/<nnn>.pgm       8- or 16-bit PGM frames (some ids have none)
    depth_pair/<nnn>.pgm       two hand-written 16-bit frames for the DMI commands
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .depth import Centroids, compute_dmi, crop_roi, load_depth_directory, normalize_dmi, resize_nearest
from .pgm import write_pgm
from .skeleton import SkeletonSequence, write_skeleton_file
from .tactile import read_registry_file
from .config import default_registry_path
from .weights import random_model, write_weights_file

FIXTURE_SEED = 20211
DEPTH_SIDE = 16
CENTROID_SIDE = 16

# Kinect v2 rest pose in metres, joints 1..25
REST_POSE = np.array([
    (0.00, 0.00, 3.00), (0.00, 0.30, 3.00), (0.00, 0.55, 3.00), (0.00, 0.70, 3.00),
    (-0.18, 0.48, 3.00), (-0.25, 0.22, 3.00), (-0.28, 0.00, 3.00), (-0.29, -0.07, 3.00),
    (0.18, 0.48, 3.00), (0.25, 0.22, 3.00), (0.28, 0.00, 3.00), (0.29, -0.07, 3.00),
    (-0.09, -0.05, 3.00), (-0.10, -0.45, 3.00), (-0.10, -0.85, 3.00), (-0.10, -0.90, 2.90),
    (0.09, -0.05, 3.00), (0.10, -0.45, 3.00), (0.10, -0.85, 3.00), (0.10, -0.90, 2.90),
    (0.00, 0.48, 3.00), (-0.30, -0.15, 3.00), (-0.27, -0.10, 2.97), (0.30, -0.15, 3.00),
    (0.27, -0.10, 2.97),
])

# (sequence id, joints, frames, moving joints, depth bit depth or None)
SEQUENCES = (
    ("seq01", 20, 12, (10, 11, 12), 16),
    ("seq02", 25, 40, (14, 15, 16), 8),
    ("seq03", 20, 20, (6, 7, 8, 10, 11, 12), None),
    ("seq04", 25, 8, (6, 7, 8), 16),
)


def synthetic_skeleton(rng, num_joints: int, frames: int, moving) -> SkeletonSequence:
    t = np.arange(frames)[:, None]
    pose = np.repeat(REST_POSE[None, :num_joints], frames, axis=0)
    pose = pose + rng.normal(0, 0.005, size=pose.shape)
    for j in moving:
        if j <= num_joints:
            phase = rng.uniform(0, 2 * np.pi)
            pose[:, j - 1, 1] += 0.2 * np.sin(2 * np.pi * t[:, 0] / 10 + phase)
            pose[:, j - 1, 2] -= 0.1 * (1 + np.cos(2 * np.pi * t[:, 0] / 10 + phase))
    # float32-exact values survive the 9-digit SKL1 text round trip
    pose = pose.astype(np.float32).astype(np.float64)
    return SkeletonSequence.from_arrays(pose, frame_rate_hz=30.0)


def synthetic_depth(rng, frames: int, bits: int) -> list[np.ndarray]:
    """A near blob drifting across a far background, in millimetres (16-bit) or 0..255 (8-bit)."""
    yy, xx = np.mgrid[:DEPTH_SIDE, :DEPTH_SIDE]
    out = []
    cx0, cy = rng.uniform(4, 6), rng.uniform(6, 10)
    for f in range(frames):
        cx = cx0 + 6 * f / max(frames - 1, 1)
        blob = ((xx - cx) ** 2 + (yy - cy) ** 2) <= 9
        mm = np.full((DEPTH_SIDE, DEPTH_SIDE), 4500.0)
        mm[blob] = 1500 + 300 * np.hypot(xx - cx, yy - cy)[blob]
        mm[0, 0] = 0  # dropout pixel
        if bits == 16:
            out.append(mm.astype(np.uint16))
        else:
            q = np.clip(np.floor((mm - 500) * 255 / 4000 + 0.5), 0, 255)
            q[mm == 0] = 255
            out.append(q.astype(np.uint8))
    return out


# two 4x5 frames in millimetres; 0 is a sensor dropout
DEPTH_PAIR = (
    np.array([[4500, 4500, 4500, 4500, 4500],
              [4500, 1500, 1600, 4500, 4500],
              [4500, 1700, 1800, 4500, 0],
              [4500, 4500, 4500, 4500, 4500]], dtype=np.uint16),
    np.array([[4500, 4500, 4500, 4500, 4500],
              [4500, 4500, 1200, 1300, 4500],
              [4500, 4500, 2500, 900, 0],
              [4500, 4500, 4500, 4500, 600]], dtype=np.uint16),
)


def make_fixtures(target, seed: int = FIXTURE_SEED) -> Path:
    target = Path(target)
    rng = np.random.default_rng(seed)
    registry = read_registry_file(default_registry_path())
    class_ids = registry.class_ids
    (target / "skeleton").mkdir(parents=True, exist_ok=True)
    (target / "depth").mkdir(exist_ok=True)

    write_weights_file(random_model(rng, len(class_ids)), target / "model.msw")

    dmis = []
    for sid, joints, frames, moving, bits in SEQUENCES:
        write_skeleton_file(synthetic_skeleton(rng, joints, frames, moving), target / "skeleton" / f"{sid}.skl")
        if bits is None:
            continue
        ddir = target / "depth" / sid
        ddir.mkdir(exist_ok=True)
        for n, img in enumerate(synthetic_depth(rng, min(frames, 10), bits)):
            write_pgm(ddir / f"{n:03d}.pgm", img)
        img = crop_roi(normalize_dmi(compute_dmi(load_depth_directory(ddir))))
        dmis.append(resize_nearest(img.values, CENTROID_SIDE))

    # class centroids: noise, except a few classes seeded near the fixture DMIs
    images = rng.uniform(0, 1, size=(len(class_ids), CENTROID_SIDE, CENTROID_SIDE))
    for k, dmi in enumerate(dmis):
        images[(5 * k + 2) % len(class_ids)] = np.clip(dmi + rng.normal(0, 0.05, dmi.shape), 0, 1)
    Centroids(images, class_ids, registry.class_names).save(target / "centroids.npz")

    (target / "depth_pair").mkdir(exist_ok=True)
    for n, img in enumerate(DEPTH_PAIR):
        write_pgm(target / "depth_pair" / f"{n:03d}.pgm", img)

    config = {
        "model": "model.msw",
        "centroids": "centroids.npz",
        "frames": 16,
        "scales": 3,
        "window": 3,
        "alpha": 0.5,
        "temperature": 4.0,
        "centroid_side": CENTROID_SIDE,
        "roi_threshold": 0.0,
    }
    with open(target / "config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(config, fh, sort_keys=False)
    return target
