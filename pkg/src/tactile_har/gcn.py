"""Multi-scale graph convolution forward pass.

Feature tensors are numpy arrays of shape (T, V, C). Two layer kinds are
supported: a spatial multi-scale layer that sums per-hop propagations with
independent weights, and a unified space-time layer that applies the same
aggregation to a sliding window of tau frames treated as one graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimChainBroken, DimMismatch, EvenWindow
from .graph import MultiScaleAdjacency, WindowAdjacency, normalize_adjacency, window_adjacency
from .scores import ScoreVector, softmax
from .skeleton import SkeletonSequence

INPUT_CHANNELS = 3


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MSGCNLayer:
    weights: tuple[np.ndarray, ...]
    bias: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(_frozen(w) for w in self.weights))
        object.__setattr__(self, "bias", _frozen(self.bias))
        _check_scales(self.weights, self.bias)

    @property
    def num_scales(self) -> int:
        return len(self.weights)

    @property
    def in_channels(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_channels(self) -> int:
        return self.weights[0].shape[1]


@dataclass(frozen=True, eq=False)
class G3DLayer:
    tau: int
    weights: tuple[np.ndarray, ...]
    bias: np.ndarray

    def __post_init__(self):
        if self.tau < 1 or self.tau % 2 == 0:
            raise EvenWindow(f"window length must be odd, got {self.tau}")
        object.__setattr__(self, "weights", tuple(_frozen(w) for w in self.weights))
        object.__setattr__(self, "bias", _frozen(self.bias))
        _check_scales(self.weights, self.bias)

    num_scales = MSGCNLayer.num_scales
    in_channels = MSGCNLayer.in_channels
    out_channels = MSGCNLayer.out_channels


@dataclass(frozen=True, eq=False)
class Head:
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2 or 0 in w.shape:
            raise DimChainBroken(f"head matrix must be 2-D and non-empty, got shape {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def in_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]


def _check_scales(weights, bias):
    if not weights:
        raise DimChainBroken("layer has no scale matrices")
    shape = weights[0].shape
    if len(shape) != 2 or 0 in shape:
        raise DimChainBroken(f"scale matrix must be 2-D and non-empty, got shape {shape}")
    if any(w.shape != shape for w in weights):
        raise DimChainBroken("scale matrices of one layer must share a shape")
    if bias.shape != (shape[1],):
        raise DimChainBroken(f"bias has shape {bias.shape}, expected ({shape[1]},)")
    for a in (*weights, bias):
        if not np.all(np.isfinite(a)):
            raise DimChainBroken("weights must be finite")


Layer = MSGCNLayer | G3DLayer


@dataclass(frozen=True, eq=False)
class ModelWeights:
    layers: tuple[Layer, ...]
    head: Head

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        channels = layers[0].in_channels if layers else self.head.in_channels
        for n, layer in enumerate(layers):
            if layer.in_channels != channels:
                raise DimChainBroken(
                    f"layer {n} expects {layer.in_channels} input channels, previous stage gives {channels}"
                )
            channels = layer.out_channels
        if self.head.in_channels != channels:
            raise DimChainBroken(f"head expects {self.head.in_channels} channels, previous stage gives {channels}")

    @property
    def in_channels(self) -> int:
        return self.layers[0].in_channels if self.layers else self.head.in_channels

    @property
    def num_classes(self) -> int:
        return self.head.num_classes

    @property
    def max_hop(self) -> int:
        return max((layer.num_scales - 1 for layer in self.layers), default=0)

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        if len(self.layers) != len(other.layers):
            return False
        for a, b in zip(self.layers, other.layers):
            if type(a) is not type(b) or getattr(a, "tau", None) != getattr(b, "tau", None):
                return False
            if len(a.weights) != len(b.weights) or not np.array_equal(a.bias, b.bias):
                return False
            if not all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights)):
                return False
        return np.array_equal(self.head.weights, other.head.weights)


def _check_input(X: np.ndarray, V: int, layer) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3:
        raise DimMismatch(f"features must be (T, V, C), got shape {X.shape}")
    if X.shape[1] != V:
        raise DimMismatch(f"features have {X.shape[1]} joints, adjacency has {V}")
    if X.shape[2] != layer.in_channels:
        raise DimMismatch(f"features have {X.shape[2]} channels, layer expects {layer.in_channels}")
    return X


def ms_gcn_layer(X, adj: MultiScaleAdjacency, layer: MSGCNLayer, activation: bool = True) -> np.ndarray:
    """relu(sum_k norm(A_k) X_t W_k + b) for every frame t."""
    X = _check_input(X, adj.num_joints, layer)
    if layer.num_scales > len(adj.normalized):
        raise DimMismatch(f"layer uses {layer.num_scales} scales, adjacency provides {len(adj.normalized)}")
    out = np.zeros((X.shape[0], X.shape[1], layer.out_channels))
    for N, W in zip(adj.normalized, layer.weights):
        out += (N @ X) @ W
    out += layer.bias
    return np.maximum(out, 0.0) if activation else out


def g3d_layer(X, windows: Sequence[WindowAdjacency], layer: G3DLayer, activation: bool = True) -> np.ndarray:
    """Unified space-time layer over zero-padded windows of ``layer.tau`` frames.

    ``windows[k]`` is the tiled window adjacency for hop k; only the rows of
    the centre frame are kept for each output frame.
    """
    tau = layer.tau
    if len(windows) < layer.num_scales:
        raise DimMismatch(f"layer uses {layer.num_scales} scales, {len(windows)} window adjacencies given")
    for w in windows:
        if w.tau != tau:
            raise DimMismatch(f"window adjacency has tau={w.tau}, layer has tau={tau}")
    V = windows[0].block.shape[0] // tau
    X = _check_input(X, V, layer)
    T, _, C = X.shape
    pad = (tau - 1) // 2
    Xp = np.concatenate([np.zeros((pad, V, C)), X, np.zeros((pad, V, C))])
    blocks = np.stack([Xp[t:t + tau].reshape(tau * V, C) for t in range(T)])
    centre = slice(pad * V, (pad + 1) * V)
    out = np.zeros((T, V, layer.out_channels))
    for w, W in zip(windows, layer.weights):
        N = normalize_adjacency(w.block)[centre]
        out += (N @ blocks) @ W
    out += layer.bias
    return np.maximum(out, 0.0) if activation else out


def global_pool_and_classify(X, head: Head, class_ids=None, class_names=None) -> ScoreVector:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != head.in_channels:
        raise DimMismatch(f"head expects (T, V, {head.in_channels}) features, got shape {X.shape}")
    pooled = X.mean(axis=(0, 1))
    return ScoreVector(softmax(pooled @ head.weights), class_ids, class_names)


def windows_for(adj: MultiScaleAdjacency, layer: G3DLayer) -> tuple[WindowAdjacency, ...]:
    if layer.num_scales > len(adj.hops):
        raise DimMismatch(f"layer uses {layer.num_scales} scales, adjacency provides {len(adj.hops)}")
    return tuple(window_adjacency(adj.hops[k], layer.tau) for k in range(layer.num_scales))


def forward_features(X, model: ModelWeights, adj: MultiScaleAdjacency) -> np.ndarray:
    for layer in model.layers:
        if isinstance(layer, G3DLayer):
            X = g3d_layer(X, windows_for(adj, layer), layer)
        else:
            X = ms_gcn_layer(X, adj, layer)
    return X


def infer(seq: SkeletonSequence | np.ndarray, model: ModelWeights, adj: MultiScaleAdjacency,
          class_ids=None, class_names=None) -> ScoreVector:
    """Run all layers and the head on a preprocessed sequence (or a (T, V, C) array)."""
    X = seq.coordinates() if isinstance(seq, SkeletonSequence) else np.asarray(seq, dtype=np.float64)
    if X.ndim != 3 or X.shape[0] == 0:
        raise DimMismatch(f"expected non-empty (T, V, C) input, got shape {X.shape}")
    if X.shape[2] != model.in_channels:
        raise DimMismatch(f"input has {X.shape[2]} channels, model expects {model.in_channels}")
    return global_pool_and_classify(forward_features(X, model, adj), model.head, class_ids, class_names)
