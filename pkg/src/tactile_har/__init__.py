"""Skeleton + depth action recognition that ends in tactile glyph frames."""
from .depth import DepthMotionImage, DepthSequence, compute_dmi, crop_roi, nearest_centroid_classify, normalize_dmi
from .fusion import FusionConfig, confusion_matrix, fuse_scores, top_prediction, trial_tally
from .gcn import ModelWeights, g3d_layer, global_pool_and_classify, infer, ms_gcn_layer
from .graph import (
    MultiScaleAdjacency,
    SkeletonGraph,
    base_adjacency,
    k_hop_adjacency,
    normalize_adjacency,
    st_graph,
    window_adjacency,
)
from .pipeline import Pipeline, run_pipeline
from .scores import ScoreVector
from .skeleton import (
    SkeletonFrame,
    SkeletonSequence,
    center_translate,
    normalize_scale,
    parse_skeleton_file,
    remap_v1_to_v2,
    resample_temporal,
    serialize_skeleton,
)
from .tactile import (
    LabelRegistry,
    NodeState,
    TactileGlyph,
    decode_frame,
    encode_frame,
    lookup_label,
    parse_registry,
    render_ascii,
    validate_glyph,
)
from .weights import load_weights, save_weights

__all__ = [
    "base_adjacency",
    "center_translate",
    "compute_dmi",
    "confusion_matrix",
    "crop_roi",
    "decode_frame",
    "DepthMotionImage",
    "DepthSequence",
    "encode_frame",
    "fuse_scores",
    "FusionConfig",
    "g3d_layer",
    "global_pool_and_classify",
    "infer",
    "k_hop_adjacency",
    "LabelRegistry",
    "load_weights",
    "lookup_label",
    "ModelWeights",
    "ms_gcn_layer",
    "MultiScaleAdjacency",
    "nearest_centroid_classify",
    "NodeState",
    "normalize_adjacency",
    "normalize_dmi",
    "normalize_scale",
    "parse_registry",
    "parse_skeleton_file",
    "Pipeline",
    "remap_v1_to_v2",
    "render_ascii",
    "resample_temporal",
    "run_pipeline",
    "save_weights",
    "ScoreVector",
    "serialize_skeleton",
    "SkeletonFrame",
    "SkeletonGraph",
    "SkeletonSequence",
    "st_graph",
    "TactileGlyph",
    "top_prediction",
    "trial_tally",
    "validate_glyph",
    "window_adjacency",
]

__version__ = "0.1.0"
