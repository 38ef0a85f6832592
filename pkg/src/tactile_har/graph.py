"""Skeleton graph construction.

Builds the 25-joint Kinect v2 bone graph, exact-distance ("disentangled")
k-hop adjacencies, row-stochastic propagation matrices, the frame-to-frame
spatio-temporal graph and the tiled sliding-window adjacency used by the
unified space-time layer.

Joint indices in edge lists are 1-based; matrices are 0-based.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import EvenWindow, InvalidEdgeIndex, MalformedRecord, ZeroFrames

NUM_JOINTS = 25

# Kinect v2 bones, 1-based.
DEFAULT_EDGES: tuple[tuple[int, int], ...] = (
    # spine and head
    (1, 2), (2, 21), (21, 3), (3, 4),
    # left arm
    (21, 5), (5, 6), (6, 7), (7, 8), (8, 22), (8, 23),
    # right arm
    (21, 9), (9, 10), (10, 11), (11, 12), (12, 24), (12, 25),
    # left leg
    (1, 13), (13, 14), (14, 15), (15, 16),
    # right leg
    (1, 17), (17, 18), (18, 19), (19, 20),
)

HEAD = 4


@dataclass(frozen=True)
class SkeletonGraph:
    num_joints: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for edge in self.edges:
            i, j = edge
            if not (1 <= i <= self.num_joints and 1 <= j <= self.num_joints):
                raise InvalidEdgeIndex(f"edge {edge} outside 1..{self.num_joints}")
            if i == j:
                raise InvalidEdgeIndex(f"self-loop at joint {i}")
            key = frozenset(edge)
            if key in seen:
                raise InvalidEdgeIndex(f"duplicate edge {edge}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))

    @classmethod
    def default(cls) -> "SkeletonGraph":
        return cls(NUM_JOINTS, DEFAULT_EDGES)


def base_adjacency(graph: SkeletonGraph) -> np.ndarray:
    """Binary symmetric adjacency with zero diagonal."""
    A = np.zeros((graph.num_joints, graph.num_joints))
    for i, j in graph.edges:
        if not (1 <= i <= graph.num_joints and 1 <= j <= graph.num_joints):
            raise InvalidEdgeIndex(f"edge {(i, j)} outside 1..{graph.num_joints}")
        A[i - 1, j - 1] = A[j - 1, i - 1] = 1
    return A


def hop_distances(A: np.ndarray) -> np.ndarray:
    """All-pairs BFS distances; unreachable pairs are -1."""
    n = len(A)
    neighbours = [np.flatnonzero(A[i]) for i in range(n)]
    dist = np.full((n, n), -1, dtype=np.int64)
    for source in range(n):
        dist[source, source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in neighbours[u]:
                if dist[source, v] < 0:
                    dist[source, v] = dist[source, u] + 1
                    queue.append(v)
    return dist


def k_hop_adjacency(A: np.ndarray, k: int) -> np.ndarray:
    """Binary matrix marking pairs at shortest-path distance exactly ``k``."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    return (hop_distances(np.asarray(A)) == k).astype(np.float64)


def normalize_adjacency(M: np.ndarray, add_self_loops: bool = False) -> np.ndarray:
    """Row-stochastic D^-1 M; all-zero rows stay zero."""
    M = np.asarray(M, dtype=np.float64)
    if add_self_loops:
        M = M + np.eye(len(M))
    deg = M.sum(axis=1)
    inv = np.zeros_like(deg)
    np.divide(1.0, deg, out=inv, where=deg > 0)
    return M * inv[:, None]


@dataclass(frozen=True, eq=False)
class MultiScaleAdjacency:
    """Base adjacency with hop matrices for k = 0..K and their normalized forms."""

    base: np.ndarray
    hops: tuple[np.ndarray, ...]
    normalized: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, A: np.ndarray, max_hop: int) -> "MultiScaleAdjacency":
        A = np.asarray(A, dtype=np.float64)
        dist = hop_distances(A)
        hops = tuple((dist == k).astype(np.float64) for k in range(max_hop + 1))
        normalized = tuple(normalize_adjacency(h) for h in hops)
        for m in (A, *hops, *normalized):
            m.flags.writeable = False
        return cls(A, hops, normalized)

    @property
    def num_joints(self) -> int:
        return len(self.base)

    @property
    def max_hop(self) -> int:
        return len(self.hops) - 1

    def permuted(self, perm: Sequence[int]) -> "MultiScaleAdjacency":
        """Relabel joints: new joint ``i`` is old joint ``perm[i]``."""
        p = np.asarray(perm)
        return MultiScaleAdjacency(
            self.base[np.ix_(p, p)],
            tuple(h[np.ix_(p, p)] for h in self.hops),
            tuple(m[np.ix_(p, p)] for m in self.normalized),
        )


def multiscale_adjacency(graph: SkeletonGraph | None = None, max_hop: int = 3) -> MultiScaleAdjacency:
    return MultiScaleAdjacency.build(base_adjacency(graph or SkeletonGraph.default()), max_hop)


def st_graph(A: np.ndarray, T: int) -> sp.csr_matrix:
    """Spatio-temporal graph over T frames: spatial copies plus same-joint links t -> t+1.

    Node ``t * V + v`` is joint ``v`` at frame ``t``.
    """
    if T < 1:
        raise ZeroFrames(f"frame count must be >= 1, got {T}")
    A = sp.csr_matrix(np.asarray(A, dtype=np.float64))
    V = A.shape[0]
    spatial = sp.kron(sp.identity(T, format="csr"), A, format="csr")
    chain = sp.diags([np.ones(T - 1), np.ones(T - 1)], [1, -1], shape=(T, T), format="csr")
    temporal = sp.kron(chain, sp.identity(V, format="csr"), format="csr")
    return (spatial + temporal).tocsr()


@dataclass(frozen=True, eq=False)
class WindowAdjacency:
    tau: int
    block: np.ndarray


def window_adjacency(hop: np.ndarray, tau: int) -> WindowAdjacency:
    """Tile ``hop`` into a (tau*V) x (tau*V) block: every frame of the window sees every other."""
    if tau < 1 or tau % 2 == 0:
        raise EvenWindow(f"window length must be a positive odd integer, got {tau}")
    block = np.tile(np.asarray(hop, dtype=np.float64), (tau, tau))
    block.flags.writeable = False
    return WindowAdjacency(tau, block)


# ---------------------------------------------------------------------------
# plain-text matrix dumps

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_matrix(M: np.ndarray, roi: Iterable[int] | None = None) -> str:
    """Square matrices are written as ``V`` then V rows; others as ``H W`` then H rows."""
    M = np.asarray(M)
    rows, cols = M.shape
    out = []
    if roi is not None:
        out.append("# roi " + " ".join(str(int(v)) for v in roi))
    out.append(f"{rows}" if rows == cols else f"{rows} {cols}")
    out.extend(" ".join(_fmt(x) for x in row) for row in M)
    return "\n".join(out) + "\n"


def parse_matrix(stream: TextIO | str) -> tuple[np.ndarray, tuple[int, int, int, int] | None]:
    """Inverse of :func:`format_matrix`; returns the matrix and an optional roi."""
    text = stream if isinstance(stream, str) else stream.read()
    roi = None
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "roi":
                try:
                    roi = tuple(int(v) for v in parts[1:])
                except ValueError:
                    raise MalformedRecord(f"bad roi line {line!r}") from None
                if len(roi) != 4:
                    raise MalformedRecord(f"bad roi line {line!r}")
            continue
        lines.append(line)
    if not lines:
        raise MalformedRecord("empty matrix dump")
    try:
        dims = [int(t) for t in lines[0].split()]
    except ValueError:
        raise MalformedRecord(f"bad matrix header {lines[0]!r}") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise MalformedRecord(f"bad matrix header {lines[0]!r}")
    rows, cols = dims
    if len(lines) - 1 != rows:
        raise MalformedRecord(f"matrix header declares {rows} rows, found {len(lines) - 1}")
    try:
        M = np.array([[float(t) for t in line.split()] for line in lines[1:]])
    except ValueError:
        raise MalformedRecord("non-numeric matrix entry") from None
    if M.shape != (rows, cols):
        raise MalformedRecord(f"expected {rows}x{cols} entries")
    return M, roi
