"""Per-class score vectors and their tab-separated file format.

A score file has a header row ``sequence_id<TAB><class_id>...`` followed by
one row per sequence; scores are written with 17 significant digits so a
file round-trips exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .errors import ClassListMismatch, EmptyScores, MalformedRecord


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True, eq=False)
class ScoreVector:
    scores: np.ndarray
    class_ids: tuple[int, ...] = None
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64).reshape(-1)
        if len(scores) == 0:
            raise EmptyScores("score vector is empty")
        ids = tuple(range(1, len(scores) + 1)) if self.class_ids is None else tuple(int(i) for i in self.class_ids)
        if len(ids) != len(scores):
            raise ClassListMismatch(f"{len(scores)} scores for {len(ids)} class ids")
        names = None if self.class_names is None else tuple(self.class_names)
        if names is not None and len(names) != len(scores):
            raise ClassListMismatch(f"{len(scores)} scores for {len(names)} class names")
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "class_ids", ids)
        object.__setattr__(self, "class_names", names)

    def __len__(self):
        return len(self.scores)

    def __eq__(self, other):
        if not isinstance(other, ScoreVector):
            return NotImplemented
        return (
            np.array_equal(self.scores, other.scores)
            and self.class_ids == other.class_ids
            and self.class_names == other.class_names
        )

    def is_distribution(self, tol: float = 1e-6) -> bool:
        return bool(np.all(self.scores >= 0) and abs(self.scores.sum() - 1.0) <= tol)

    def name_of(self, class_id: int) -> str | None:
        if self.class_names is None:
            return None
        return self.class_names[self.class_ids.index(class_id)]


def format_scores(rows: Sequence[tuple[str, ScoreVector]]) -> str:
    if not rows:
        raise EmptyScores("no score rows to write")
    ids = rows[0][1].class_ids
    out = ["\t".join(["sequence_id", *map(str, ids)])]
    for seq_id, sv in rows:
        if sv.class_ids != ids:
            raise ClassListMismatch(f"row {seq_id!r} uses a different class list")
        out.append("\t".join([seq_id, *(f"{x:.17g}" for x in sv.scores)]))
    return "\n".join(out) + "\n"


def parse_scores(stream: TextIO | str, class_names: Sequence[str] | None = None) -> list[tuple[str, ScoreVector]]:
    text = stream if isinstance(stream, str) else stream.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise MalformedRecord("empty score file")
    header = lines[0].split("\t")
    if header[0] != "sequence_id" or len(header) < 2:
        raise MalformedRecord("score file header must be 'sequence_id<TAB><class ids>'")
    try:
        ids = tuple(int(t) for t in header[1:])
    except ValueError:
        raise MalformedRecord("class ids in score header must be integers") from None
    rows = []
    for n, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        if len(parts) != len(header):
            raise MalformedRecord(f"score row {n}: expected {len(header)} fields, got {len(parts)}")
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise MalformedRecord(f"score row {n}: non-numeric score") from None
        rows.append((parts[0], ScoreVector(values, ids, class_names)))
    return rows
