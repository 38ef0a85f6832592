"""Tactile glyphs: a 3x3 cell of nodes, each node a ring of 8 raisable
cuboid segments or a fully raised "head" node.

Segment bit 0 points up and bits advance clockwise in 45 degree steps
(0 N, 1 NE, 2 E, 3 SE, 4 S, 5 SW, 6 W, 7 NW).

Wire frame (TGF1, 22 bytes)::

    0x54 0x47 | 0x01 | 9 x u16le node words | xor of the 18 word bytes

Word bits 0..7 carry the segment mask, bit 8 the FULL flag, bits 9..15
must be zero.
"""
from __future__ import annotations

import string
import struct
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .errors import (
    BadChecksum,
    BadFrameLength,
    BadMagic,
    BadVersion,
    DuplicateClassId,
    DuplicateGlyph,
    GlyphInvariantViolation,
    InvalidNodeToken,
    MalformedRecord,
    ReservedBitsSet,
    UnknownClass,
)

SEGMENTS_PER_NODE = 8
GRID = 3
NUM_NODES = GRID * GRID
FULL_BIT = 1 << 8
RESERVED_MASK = 0xFE00

FRAME_MAGIC = b"TG"
FRAME_VERSION = 0x01
FRAME_SIZE = 22


@dataclass(frozen=True)
class NodeState:
    segments: int = 0
    full: bool = False

    def __post_init__(self):
        if not 0 <= self.segments <= 0xFF:
            raise ValueError(f"segment mask must fit in 8 bits, got {self.segments}")

    @property
    def word(self) -> int:
        return self.segments | (FULL_BIT if self.full else 0)

    @property
    def well_formed(self) -> bool:
        return not (self.full and self.segments)


EMPTY = NodeState()
FULL = NodeState(full=True)


@dataclass(frozen=True)
class TactileGlyph:
    nodes: tuple[NodeState, ...] = (EMPTY,) * NUM_NODES

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if len(nodes) != NUM_NODES:
            raise GlyphInvariantViolation(f"a glyph has exactly {NUM_NODES} nodes, got {len(nodes)}")
        object.__setattr__(self, "nodes", nodes)

    def node(self, row: int, col: int) -> NodeState:
        return self.nodes[row * GRID + col]

    @property
    def full_count(self) -> int:
        return sum(n.full for n in self.nodes)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "valid" if self.ok else "; ".join(self.violations)


def validate_glyph(g: TactileGlyph, registry_mode: bool = True) -> ValidationReport:
    """Collect every rule the glyph breaks.

    Registry mode additionally demands exactly one FULL (head) node.
    """
    report = ValidationReport()
    for i, n in enumerate(g.nodes):
        if not n.well_formed:
            report.violations.append(
                f"node ({i // GRID}, {i % GRID}) is FULL but also has segments 0x{n.segments:02X}"
            )
    if all(n == EMPTY for n in g.nodes):
        report.violations.append("glyph is empty")
    if registry_mode and g.full_count != 1:
        report.violations.append(f"expected exactly one FULL head node, found {g.full_count}")
    return report


# ---------------------------------------------------------------------------
# wire frames

def encode_frame(g: TactileGlyph) -> bytes:
    payload = struct.pack("<9H", *(n.word for n in g.nodes))
    checksum = 0
    for b in payload:
        checksum ^= b
    return FRAME_MAGIC + bytes([FRAME_VERSION]) + payload + bytes([checksum])


def decode_frame(data: bytes) -> TactileGlyph:
    data = bytes(data)
    if len(data) != FRAME_SIZE:
        raise BadFrameLength(f"frame must be {FRAME_SIZE} bytes, got {len(data)}")
    if data[:2] != FRAME_MAGIC:
        raise BadMagic(f"bad frame magic {data[:2].hex()}")
    if data[2] != FRAME_VERSION:
        raise BadVersion(f"unsupported frame version {data[2]}")
    payload = data[3:21]
    checksum = 0
    for b in payload:
        checksum ^= b
    if checksum != data[21]:
        raise BadChecksum(f"checksum 0x{data[21]:02x} does not match payload 0x{checksum:02x}")
    words = struct.unpack("<9H", payload)
    nodes = []
    for i, w in enumerate(words):
        if w & RESERVED_MASK:
            raise ReservedBitsSet(f"node {i}: reserved bits set in word 0x{w:04x}")
        nodes.append(NodeState(w & 0xFF, bool(w & FULL_BIT)))
    return TactileGlyph(tuple(nodes))


# ---------------------------------------------------------------------------
# ASCII preview

# (row, col) inside the 3x3 tile and the stroke drawn for each segment bit
_SEGMENT_CELLS = (
    ((0, 1), "|"), ((0, 2), "/"), ((1, 2), "-"), ((2, 2), "\\"),
    ((2, 1), "|"), ((2, 0), "/"), ((1, 0), "-"), ((0, 0), "\\"),
)


def _tile(n: NodeState) -> list[str]:
    if n.full:
        return ["###"] * 3
    cells = [["."] * 3 for _ in range(3)]
    cells[1][1] = "o"
    for bit, ((r, c), ch) in enumerate(_SEGMENT_CELLS):
        if n.segments >> bit & 1:
            cells[r][c] = ch
    return ["".join(row) for row in cells]


def render_ascii(g: TactileGlyph) -> str:
    """Nodes as 3x3 character tiles; tiles in a row are separated by one space,
    tile rows by a blank line."""
    blocks = []
    for r in range(GRID):
        tiles = [_tile(g.node(r, c)) for c in range(GRID)]
        blocks.append("\n".join(" ".join(t[line] for t in tiles) for line in range(3)))
    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# class -> glyph registry (TGR1 text)

def _parse_node(token: str) -> NodeState:
    if token == "F":
        return FULL
    if len(token) != 2 or any(ch not in string.hexdigits for ch in token):
        raise InvalidNodeToken(f"node token {token!r} is neither 'F' nor two hex digits")
    return NodeState(int(token, 16))


def _format_node(n: NodeState) -> str:
    return "F" if n.full else f"{n.segments:02X}"


def parse_glyph(text: str) -> TactileGlyph:
    """Glyph from nine whitespace-separated node tokens (row-major)."""
    tokens = text.split()
    if len(tokens) != NUM_NODES:
        raise GlyphInvariantViolation(f"expected {NUM_NODES} node tokens, got {len(tokens)}")
    return TactileGlyph(tuple(_parse_node(t) for t in tokens))


def format_glyph(g: TactileGlyph) -> str:
    return " ".join(_format_node(n) for n in g.nodes)


@dataclass(frozen=True)
class LabelEntry:
    class_id: int
    name: str
    glyph: TactileGlyph


class LabelRegistry:
    """Ordered, validated mapping class id -> (name, glyph)."""

    def __init__(self, entries: Iterable[LabelEntry] = ()):
        self._entries: dict[int, LabelEntry] = {}
        seen: dict[TactileGlyph, int] = {}
        for e in entries:
            if e.class_id in self._entries:
                raise DuplicateClassId(f"class id {e.class_id} appears twice")
            report = validate_glyph(e.glyph)
            if not report.ok:
                raise GlyphInvariantViolation(f"class {e.class_id} ({e.name}): {report}")
            if e.glyph in seen:
                raise DuplicateGlyph(f"classes {seen[e.glyph]} and {e.class_id} share a glyph")
            seen[e.glyph] = e.class_id
            self._entries[e.class_id] = e

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())

    def __contains__(self, class_id):
        return class_id in self._entries

    def __eq__(self, other):
        if not isinstance(other, LabelRegistry):
            return NotImplemented
        return list(self) == list(other)

    def __getitem__(self, class_id: int) -> LabelEntry:
        try:
            return self._entries[class_id]
        except KeyError:
            raise UnknownClass(f"class id {class_id} is not registered") from None

    @property
    def class_ids(self) -> tuple[int, ...]:
        return tuple(self._entries)

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self)


def lookup_label(class_id: int, registry: LabelRegistry) -> TactileGlyph:
    return registry[class_id].glyph


def parse_registry(stream: TextIO | str) -> LabelRegistry:
    text = stream if isinstance(stream, str) else stream.read()
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedRecord(f"line {lineno}: expected class_id<TAB>class_name<TAB>nine node tokens")
        try:
            class_id = int(parts[0])
        except ValueError:
            raise MalformedRecord(f"line {lineno}: class id {parts[0]!r} is not an integer") from None
        name = parts[1].strip()
        if not name:
            raise MalformedRecord(f"line {lineno}: empty class name")
        try:
            glyph = parse_glyph(parts[2])
        except (InvalidNodeToken, GlyphInvariantViolation) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
        entries.append(LabelEntry(class_id, name, glyph))
    return LabelRegistry(entries)


def serialize_registry(registry: LabelRegistry) -> str:
    return "".join(
        f"{e.class_id}\t{e.name}\t{format_glyph(e.glyph)}\n"
        for e in registry
    )


def read_registry_file(path) -> LabelRegistry:
    with open(path, encoding="utf-8") as fh:
        return parse_registry(fh)
