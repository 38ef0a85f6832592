"""Independent reference computations and random instance generators.

Nothing here calls into the code under test beyond constructing its data
types; every oracle is a direct loop over the defining formula.
"""
import math
import random

import numpy as np

from tactile_har.gcn import G3DLayer, Head, ModelWeights, MSGCNLayer
from tactile_har.skeleton import SkeletonSequence
from tactile_har.tactile import NodeState, TactileGlyph

FILL = {21: 3, 22: 7, 23: 7, 24: 11, 25: 11}


def remap_oracle(joints20):
    """25 x 3 list built from the copy table by plain lookup."""
    out = [list(map(float, j)) for j in joints20]
    for target in range(21, 26):
        out.append(list(map(float, joints20[FILL[target] - 1])))
    return out


def floyd_warshall(n, edges):
    """All-pairs hop distances (inf when unreachable); edges are 0-based."""
    INF = math.inf
    d = [[0 if i == j else INF for j in range(n)] for i in range(n)]
    for i, j in edges:
        d[i][j] = d[j][i] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def random_connected_edges(rng: random.Random, n: int, extra: float = 0.3):
    """Random spanning tree plus random extra edges, 0-based."""
    order = list(range(n))
    rng.shuffle(order)
    edges = set()
    for idx in range(1, n):
        a, b = order[idx], order[rng.randrange(idx)]
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra / n:
                edges.add((i, j))
    return sorted(edges)


def row_normalize_loop(M):
    n = len(M)
    out = [[0.0] * len(M[0]) for _ in range(n)]
    for i in range(n):
        s = sum(M[i])
        if s > 0:
            for j in range(len(M[i])):
                out[i][j] = M[i][j] / s
    return out


def tile_loop(hop, tau):
    V = len(hop)
    out = [[0.0] * (tau * V) for _ in range(tau * V)]
    for a in range(tau):
        for b in range(tau):
            for i in range(V):
                for j in range(V):
                    out[a * V + i][b * V + j] = hop[i][j]
    return out


def ms_gcn_oracle(X, norm_hops, weights, bias, relu=True):
    """out[t][u][d] = relu(sum_k sum_v sum_c N_k[u][v] X[t][v][c] W_k[c][d] + b[d])."""
    T, V, C = len(X), len(X[0]), len(X[0][0])
    D = len(bias)
    out = np.zeros((T, V, D))
    for t in range(T):
        for u in range(V):
            for d in range(D):
                acc = bias[d]
                for N, W in zip(norm_hops, weights):
                    for v in range(V):
                        if N[u][v] == 0:
                            continue
                        for c in range(C):
                            acc += N[u][v] * X[t][v][c] * W[c][d]
                out[t, u, d] = max(acc, 0.0) if relu else acc
    return out


def g3d_oracle(X, hops, tau, weights, bias):
    """Explicit zero-padded stacking, dense window multiply, centre extraction."""
    T, V, C = len(X), len(X[0]), len(X[0][0])
    D = len(bias)
    pad = (tau - 1) // 2
    norm_windows = [row_normalize_loop(tile_loop(h, tau)) for h in hops]
    out = np.zeros((T, V, D))
    for t in range(T):
        block = []
        for s in range(t - pad, t + pad + 1):
            for v in range(V):
                block.append(list(X[s][v]) if 0 <= s < T else [0.0] * C)
        full = [[0.0] * D for _ in range(tau * V)]
        for N, W in zip(norm_windows, weights):
            for r in range(tau * V):
                for q in range(tau * V):
                    if N[r][q] == 0:
                        continue
                    for c in range(C):
                        for d in range(D):
                            full[r][d] += N[r][q] * block[q][c] * W[c][d]
        for u in range(V):
            for d in range(D):
                out[t, u, d] = max(full[pad * V + u][d] + bias[d], 0.0)
    return out


def head_oracle(X, W):
    T, V, C = len(X), len(X[0]), len(X[0][0])
    pooled = [sum(X[t][v][c] for t in range(T) for v in range(V)) / (T * V) for c in range(C)]
    logits = [sum(pooled[c] * W[c][k] for c in range(C)) for k in range(len(W[0]))]
    m = max(logits)
    e = [math.exp(z - m) for z in logits]
    return np.array([x / sum(e) for x in e])


def dmi_oracle(frames):
    N, H, W = len(frames), len(frames[0]), len(frames[0][0])
    out = [[0] * W for _ in range(H)]
    for i in range(H):
        for j in range(W):
            m = 255
            for t in range(N):
                m = min(m, int(frames[t][i][j]))
            out[i][j] = 255 - m
    return np.array(out, dtype=float)


def bbox_oracle(img, threshold):
    """(x0, y0, x1, y1) by scanning every pixel, or None."""
    box = None
    for y in range(len(img)):
        for x in range(len(img[0])):
            if img[y][x] > threshold:
                if box is None:
                    box = [x, y, x, y]
                box = [min(box[0], x), min(box[1], y), max(box[2], x), max(box[3], y)]
    return None if box is None else tuple(box)


def centroid_oracle(img, centroids, temperature):
    d2 = []
    for c in centroids:
        acc = 0.0
        for y in range(len(img)):
            for x in range(len(img[0])):
                acc += (img[y][x] - c[y][x]) ** 2
        d2.append(-acc / temperature)
    m = max(d2)
    e = [math.exp(z - m) for z in d2]
    return np.array([v / sum(e) for v in e])


def argmax_scan(scores):
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


# ---------------------------------------------------------------------------
# random instances

def random_glyph(rng: random.Random, full_prob: float = 0.2) -> TactileGlyph:
    nodes = []
    for _ in range(9):
        if rng.random() < full_prob:
            nodes.append(NodeState(0, True))
        else:
            nodes.append(NodeState(rng.randrange(256), False))
    return TactileGlyph(tuple(nodes))


def random_registry_glyph(rng: random.Random) -> TactileGlyph:
    head = rng.randrange(9)
    nodes = [NodeState(0, True) if i == head else NodeState(rng.randrange(256)) for i in range(9)]
    return TactileGlyph(tuple(nodes))


def f32(a):
    return np.asarray(a, dtype=np.float32).astype(np.float64)


def random_sequence(rng: np.random.Generator, frames=None, joints=None) -> SkeletonSequence:
    frames = frames or int(rng.integers(1, 6))
    joints = joints or int(rng.choice([20, 25]))
    coords = f32(rng.normal(0, 2, size=(frames, joints, 3)))
    valid = rng.random((frames, joints)) < 0.9
    rate = float(f32(rng.uniform(1, 120)))
    return SkeletonSequence.from_arrays(coords, valid, frame_rate_hz=rate)


def random_model(rng: np.random.Generator, c_in=None) -> ModelWeights:
    c = int(c_in or rng.integers(1, 4))
    layers = []
    for _ in range(int(rng.integers(0, 3))):
        c_out = int(rng.integers(1, 4))
        K = int(rng.integers(0, 3))
        ws = tuple(f32(rng.normal(size=(c, c_out))) for _ in range(K + 1))
        b = f32(rng.normal(size=c_out))
        if rng.random() < 0.5:
            layers.append(G3DLayer(int(rng.choice([1, 3, 5])), ws, b))
        else:
            layers.append(MSGCNLayer(ws, b))
        c = c_out
    return ModelWeights(tuple(layers), Head(f32(rng.normal(size=(c, int(rng.integers(1, 5)))))))
