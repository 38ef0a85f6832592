"""End-to-end recognition: skeleton (+ optional depth) -> fused scores ->
class -> tactile glyph -> TGF1 frame."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import depth as dstream
from .config import PipelineConfig
from .errors import ClassListMismatch, ConfigError, StageError, TactileHarError
from .fusion import FusionConfig, fuse_scores, top_prediction
from .gcn import G3DLayer, ModelWeights, infer
from .graph import MultiScaleAdjacency, multiscale_adjacency
from .scores import ScoreVector
from .skeleton import (
    center_translate,
    file_precision,
    normalize_scale,
    read_skeleton_file,
    remap_sequence,
    resample_temporal,
)
from .tactile import LabelRegistry, TactileGlyph, encode_frame, lookup_label, read_registry_file
from .weights import read_weights_file

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SequenceInput:
    sequence_id: str
    skeleton_path: Path
    depth_dir: Path | None = None
    depth_scores: ScoreVector | None = None


@dataclass(frozen=True)
class PipelineResult:
    sequence_id: str
    class_id: int
    class_name: str
    scores: ScoreVector
    glyph: TactileGlyph
    frame: bytes

    @property
    def score(self) -> float:
        return float(self.scores.scores[self.scores.class_ids.index(self.class_id)])

    def to_record(self) -> str:
        return f"{self.sequence_id}\t{self.class_id}\t{self.class_name}\t{self.score:.6f}\t{self.frame.hex()}"


def _stage(name, fn, *args, sequence_id=None, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TactileHarError as exc:
        raise StageError(name, exc, sequence_id) from exc
    except OSError as exc:
        cause = ConfigError(f"{exc.filename}: {exc.strerror}")
        raise StageError(name, cause, sequence_id) from exc


@dataclass(frozen=True)
class Pipeline:
    """Loaded, immutable resources shared by every sequence."""

    cfg: PipelineConfig
    model: ModelWeights
    adjacency: MultiScaleAdjacency
    registry: LabelRegistry
    class_ids: tuple[int, ...]
    class_names: tuple[str, ...]
    centroids: dstream.Centroids | None = None

    @classmethod
    def load(cls, cfg: PipelineConfig) -> "Pipeline":
        if cfg.model_path is None:
            raise StageError("load-model", ConfigError("no model path configured"))
        model = _stage("load-model", read_weights_file, cfg.model_path)
        registry = _stage("load-registry", read_registry_file, cfg.registry)
        class_ids = cfg.classes or registry.class_ids
        for cid in class_ids:
            _stage("load-registry", registry.__getitem__, cid)
        if len(class_ids) != model.num_classes:
            raise StageError("configure", ConfigError(
                f"model predicts {model.num_classes} classes but {len(class_ids)} class ids are configured"))
        for layer in model.layers:
            if isinstance(layer, G3DLayer) and cfg.window is not None and layer.tau != cfg.window:
                raise StageError("configure", ConfigError(
                    f"configured window {cfg.window} differs from model window {layer.tau}"))
        scales = model.max_hop if cfg.scales is None else cfg.scales
        if scales < model.max_hop:
            raise StageError("configure", ConfigError(
                f"configured scales {scales} below the model's {model.max_hop} hops"))
        adjacency = multiscale_adjacency(max_hop=scales)
        centroids = None
        if cfg.centroids_path is not None:
            centroids = _stage("load-centroids", dstream.Centroids.load, cfg.centroids_path)
            if centroids.class_ids != tuple(class_ids):
                raise StageError("load-centroids", ClassListMismatch(
                    "centroid class ids differ from the model's class list"))
        return cls(cfg, model, adjacency, registry, tuple(class_ids),
                   tuple(registry[c].name for c in class_ids), centroids)

    def skeleton_scores(self, path, sequence_id=None) -> ScoreVector:
        sid = dict(sequence_id=sequence_id)
        seq = _stage("parse", read_skeleton_file, path, **sid)
        seq = _stage("remap", remap_sequence, seq, **sid)
        seq = _stage("center", center_translate, seq, self.cfg.ref_joint, **sid)
        seq = _stage("scale", normalize_scale, seq, **sid)
        seq = _stage("resample", resample_temporal, seq, self.cfg.frames, **sid)
        # the staged CLI path hands the model an SKL1 file; match it exactly
        seq = file_precision(seq)
        return _stage("infer", infer, seq, self.model, self.adjacency,
                      self.class_ids, self.class_names, **sid)

    def depth_scores(self, depth_dir, sequence_id=None) -> ScoreVector:
        sid = dict(sequence_id=sequence_id)
        if self.centroids is None:
            raise StageError("classify", ConfigError("depth input given but no centroids configured"), sequence_id)
        stack = _stage("load-depth", dstream.load_depth_directory, depth_dir,
                       self.cfg.depth_near, self.cfg.depth_far, **sid)
        img = _stage("dmi", dstream.compute_dmi, stack, **sid)
        img = _stage("normalize", dstream.normalize_dmi, img, **sid)
        img = _stage("crop", dstream.crop_roi, img, self.cfg.roi_threshold, **sid)
        return _stage("classify", dstream.nearest_centroid_classify, img, self.centroids,
                      self.cfg.temperature, self.cfg.centroid_side, **sid)

    def run_one(self, item: SequenceInput) -> PipelineResult:
        sid = dict(sequence_id=item.sequence_id)
        s_skel = self.skeleton_scores(item.skeleton_path, item.sequence_id)
        s_depth = item.depth_scores
        if s_depth is None and item.depth_dir is not None:
            s_depth = self.depth_scores(item.depth_dir, item.sequence_id)
        if s_depth is None:
            fused = _stage("fuse", fuse_scores, s_skel, s_skel, FusionConfig(1.0), **sid)
        else:
            if s_depth.class_names is None:
                s_depth = ScoreVector(s_depth.scores, s_depth.class_ids, self.class_names)
            cfg = FusionConfig(self.cfg.alpha, self.cfg.fusion_rule)
            fused = _stage("fuse", fuse_scores, s_skel, s_depth, cfg, **sid)
        class_id = _stage("predict", top_prediction, fused, **sid)
        glyph = _stage("label", lookup_label, class_id, self.registry, **sid)
        frame = _stage("encode", encode_frame, glyph, **sid)
        log.debug("sequence %s -> class %d", item.sequence_id, class_id)
        return PipelineResult(item.sequence_id, class_id, self.registry[class_id].name, fused, glyph, frame)

    def run(self, items: Sequence[SequenceInput], jobs: int = 1) -> list[PipelineResult]:
        """Process every sequence; results come back in input order."""
        if jobs <= 1 or len(items) <= 1:
            return [self.run_one(item) for item in items]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(self.run_one, items))


def discover_inputs(skeleton: Path, depth: Path | None = None,
                    depth_scores: Mapping[str, ScoreVector] | None = None) -> list[SequenceInput]:
    """Pair skeleton files with depth frame directories by sequence id (file stem).

    ``skeleton`` may be one SKL1 file or a directory of ``*.skl`` files.
    Depth frames for sequence ``s`` live in ``depth/s/``.
    """
    skeleton = Path(skeleton)
    if skeleton.is_dir():
        files = sorted(skeleton.glob("*.skl"))
        if not files:
            raise StageError("discover", ConfigError(f"no .skl files in {skeleton}"))
    elif skeleton.exists():
        files = [skeleton]
    else:
        raise StageError("discover", ConfigError(f"skeleton input {skeleton} does not exist"))
    if depth is not None and not Path(depth).is_dir():
        raise StageError("discover", ConfigError(f"depth input {depth} is not a directory"))
    items = []
    for f in files:
        sid = f.stem
        ddir = Path(depth) / sid if depth is not None else None
        items.append(SequenceInput(
            sid, f,
            ddir if ddir is not None and ddir.is_dir() else None,
            (depth_scores or {}).get(sid),
        ))
    return items


def run_pipeline(cfg: PipelineConfig, skeleton_input, depth_input=None,
                 depth_scores: Mapping[str, ScoreVector] | None = None, jobs: int = 1) -> list[PipelineResult]:
    pipeline = Pipeline.load(cfg)
    items = discover_inputs(Path(skeleton_input), None if depth_input is None else Path(depth_input), depth_scores)
    return pipeline.run(items, jobs)
