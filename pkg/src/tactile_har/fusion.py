"""Score-level fusion of the two streams and trial evaluation.

Prediction records are ``(sequence_id, true_class, predicted_class)`` with
classes given by name.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ClassListMismatch, EmptyScores, MalformedRecord, UnknownClass
from .scores import ScoreVector

@dataclass(frozen=True)
class FusionConfig:
    alpha: float = 0.5
    rule: str = "sum"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.rule not in ("sum", "product"):
            raise ValueError(f"unknown fusion rule {self.rule!r}")


def fuse_scores(s_skel: ScoreVector, s_depth: ScoreVector, cfg: FusionConfig = FusionConfig()) -> ScoreVector:
    """Weighted sum alpha*skel + (1-alpha)*depth, or a renormalized weighted product."""
    if s_skel.class_ids != s_depth.class_ids:
        raise ClassListMismatch("score vectors use different class lists")
    names = s_skel.class_names or s_depth.class_names
    a = cfg.alpha
    if a == 1.0:
        return ScoreVector(s_skel.scores, s_skel.class_ids, names)
    if a == 0.0:
        return ScoreVector(s_depth.scores, s_skel.class_ids, names)
    if cfg.rule == "product":
        fused = s_skel.scores ** a * s_depth.scores ** (1.0 - a)
        total = fused.sum()
        if total <= 0:
            raise EmptyScores("product fusion annihilated every class")
        return ScoreVector(fused / total, s_skel.class_ids, names)
    return ScoreVector(a * s_skel.scores + (1.0 - a) * s_depth.scores, s_skel.class_ids, names)


def top_prediction(s: ScoreVector) -> int:
    """Class id of the highest score; ties go to the earliest class."""
    if len(s.scores) == 0:
        raise EmptyScores("no scores")
    # np.argmax returns the first maximal index
    return s.class_ids[int(np.argmax(s.scores))]


@dataclass
class ActionRow:
    action: str
    trials: int = 0
    correct: int = 0
    confusions: Counter = field(default_factory=Counter)

    @property
    def score(self) -> str:
        return f"{self.correct}/{self.trials}"


@dataclass
class ActionScoreTable:
    rows: list[ActionRow]

    def row(self, action: str) -> ActionRow:
        for r in self.rows:
            if r.action == action:
                return r
        raise UnknownClass(f"no row for {action!r}")

    def render(self) -> str:
        """Aligned text with the columns Action, Score, Confused with."""
        header = ("Action", "Score", "Confused with")
        lines = []
        for r in self.rows:
            conf = sorted(r.confusions, key=lambda name: (-r.confusions[name], name))
            conf_cells = [f"{name} ({r.confusions[name]})" for name in conf] or [""]
            lines.append((r.action, r.score, conf_cells[0]))
            lines.extend(("", "", c) for c in conf_cells[1:])
        w0 = max(len(header[0]), *(len(l[0]) for l in lines)) if lines else len(header[0])
        w1 = max(len(header[1]), *(len(l[1]) for l in lines)) if lines else len(header[1])
        out = [f"{header[0]:<{w0}}  {header[1]:<{w1}}  {header[2]}".rstrip()]
        out.append("-" * len(out[0]))
        out.extend(f"{a:<{w0}}  {s:<{w1}}  {c}".rstrip() for a, s, c in lines)
        return "\n".join(out) + "\n"

    def to_tsv(self) -> str:
        out = ["action\tscore\tconfused_with"]
        for r in self.rows:
            conf = ",".join(f"{name}:{r.confusions[name]}" for name in sorted(r.confusions))
            out.append(f"{r.action}\t{r.score}\t{conf}")
        return "\n".join(out) + "\n"


def _check_classes(records, classes: Sequence[str]):
    known = set(classes)
    for seq_id, true, pred in records:
        if true not in known:
            raise UnknownClass(f"record {seq_id!r}: unknown true class {true!r}")
        if pred not in known:
            raise UnknownClass(f"record {seq_id!r}: unknown predicted class {pred!r}")


def trial_tally(records: Iterable[tuple[str, str, str]], classes: Sequence[str]) -> ActionScoreTable:
    """Per true class: trials, correct count and the multiset of wrong predictions.

    Rows follow the order of first appearance in ``records``.
    """
    records = list(records)
    _check_classes(records, classes)
    rows: dict[str, ActionRow] = {}
    for _, true, pred in records:
        row = rows.setdefault(true, ActionRow(true))
        row.trials += 1
        if pred == true:
            row.correct += 1
        else:
            row.confusions[pred] += 1
    return ActionScoreTable(list(rows.values()))


def confusion_matrix(records: Iterable[tuple[str, str, str]], classes: Sequence[str]) -> np.ndarray:
    """C x C counts: entry (i, j) is the number of records with true class i predicted as j."""
    records = list(records)
    _check_classes(records, classes)
    index = {name: i for i, name in enumerate(classes)}
    M = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for _, true, pred in records:
        M[index[true], index[pred]] += 1
    return M


def parse_records(stream: TextIO | str) -> list[tuple[str, str, str]]:
    text = stream if isinstance(stream, str) else stream.read()
    records = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedRecord(f"line {n}: expected sequence_id<TAB>true_class<TAB>predicted_class")
        records.append((parts[0], parts[1], parts[2]))
    return records


def format_records(records: Iterable[tuple[str, str, str]]) -> str:
    return "".join(f"{s}\t{t}\t{p}\n" for s, t, p in records)


def parse_class_list(stream: TextIO | str) -> list[str]:
    """One class name per line; ``#`` comments and blank lines ignored."""
    text = stream if isinstance(stream, str) else stream.read()
    names = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(set(names)) != len(names):
        raise MalformedRecord("class list contains duplicates")
    return names
