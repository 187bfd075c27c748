"""Gazetteer-driven entity tagging and the inline bracketed annotation format.

Tagging scans left to right and applies the longest gazetteer entry that
matches at each position (leftmost-longest); matched regions never
overlap. Lookups are context-free: a surface mapped to a label tags every
occurrence, even where a generic reading would be likelier, so ambiguous
entries reproduce their mis-tags deterministically.

The bracketed format inserts ``[LABEL] `` immediately before each span's
surface and escapes a literal ``[`` as ``[[``. The format marks only span
*starts*; when parsing, a span's surface is read as the maximal run of
characters that are neither whitespace nor punctuation/symbols. Rendering
then parsing is the identity on any tagged text whose spans have that
shape, and parsing then rendering is the identity on every well-formed
annotated string.

Character offsets are Unicode scalar values throughout, never bytes.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

from .textcore import is_punctuation


class UnknownLabelError(ValueError):
    """An entity label name outside the fixed six-label inventory."""


class EntityLabel(enum.Enum):
    PERSON = "PERSON"
    LOCATION = "LOCATION"
    ORGANIZATION = "ORGANIZATION"
    TECHNOLOGY_MODEL = "TECHNOLOGY/MODEL"
    ALGORITHM = "ALGORITHM"
    CONCEPT_TERM = "CONCEPT/TERM"

    @property
    def rendered(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> EntityLabel:
        try:
            return cls(name)
        except ValueError:
            raise UnknownLabelError(f"unknown entity label {name!r}") from None


class GazetteerError(Exception):
    """Raised for malformed gazetteer entries or files."""


class BracketFormatError(Exception):
    """Raised when an annotated string violates the bracketed format."""


@dataclass(frozen=True)
class EntitySpan:
    """A labeled half-open character range [start, end) over some text."""

    start: int
    end: int
    label: EntityLabel
    surface: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"invalid span offsets [{self.start}, {self.end})")
        if len(self.surface) != self.end - self.start:
            raise ValueError(
                f"surface length {len(self.surface)} does not match span "
                f"[{self.start}, {self.end})"
            )


@dataclass(frozen=True)
class TaggedText:
    """Text plus its sorted, non-overlapping entity spans."""

    text: str
    spans: tuple[EntitySpan, ...] = ()

    def __post_init__(self) -> None:
        previous_end = 0
        for span in self.spans:
            if span.start < previous_end:
                raise ValueError("spans must be sorted by start and non-overlapping")
            if span.end > len(self.text):
                raise ValueError(f"span [{span.start}, {span.end}) exceeds text length")
            if self.text[span.start : span.end] != span.surface:
                raise ValueError(
                    f"span surface {span.surface!r} does not match text slice "
                    f"{self.text[span.start:span.end]!r}"
                )
            previous_end = span.end

    @property
    def tags(self) -> frozenset[EntityLabel]:
        return frozenset(span.label for span in self.spans)


class Gazetteer:
    """Immutable surface-to-label dictionary with deterministic lookups.

    With ``case_sensitive=False``, lookups compare lowercased slices of
    equal length; scripts without case (e.g. CJK) are unaffected.
    """

    def __init__(self, entries: Mapping[str, EntityLabel], case_sensitive: bool = True):
        self.case_sensitive = case_sensitive
        table: dict[str, EntityLabel] = {}
        lengths: set[int] = set()
        for surface, label in entries.items():
            if not surface:
                raise GazetteerError("gazetteer surfaces must be non-empty")
            key = surface if case_sensitive else surface.lower()
            existing = table.get(key)
            if existing is not None and existing is not label:
                raise GazetteerError(
                    f"conflicting labels for surface {surface!r}: "
                    f"{existing.rendered} vs {label.rendered}"
                )
            table[key] = label
            lengths.add(len(surface))
        self._table = table
        self._lengths = sorted(lengths, reverse=True)

    def __len__(self) -> int:
        return len(self._table)

    def lookup(self, surface: str) -> EntityLabel | None:
        key = surface if self.case_sensitive else surface.lower()
        return self._table.get(key)

    @classmethod
    def from_file(cls, path: str | Path, case_sensitive: bool = True) -> Gazetteer:
        """Load ``surface<TAB>LABEL`` lines; ``#`` starts a comment, blanks skipped."""
        p = Path(path)
        if not p.is_file():
            raise GazetteerError(f"gazetteer file not found: {p}")
        entries: dict[str, EntityLabel] = {}
        for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            if "\t" not in line:
                raise GazetteerError(f"{p}:{lineno}: expected 'surface<TAB>LABEL'")
            surface, _, label_name = line.partition("\t")
            if not surface:
                raise GazetteerError(f"{p}:{lineno}: empty surface")
            try:
                label = EntityLabel.parse(label_name.strip())
            except UnknownLabelError as exc:
                raise GazetteerError(f"{p}:{lineno}: {exc}") from None
            existing = entries.get(surface)
            if existing is not None and existing is not label:
                raise GazetteerError(
                    f"{p}:{lineno}: surface {surface!r} already mapped to {existing.rendered}"
                )
            entries[surface] = label
        return cls(entries, case_sensitive=case_sensitive)


def tag_entities(text: str, gazetteer: Gazetteer) -> TaggedText:
    """Leftmost-longest gazetteer tagging; an empty gazetteer yields zero spans."""
    spans: list[EntitySpan] = []
    position = 0
    length = len(text)
    while position < length:
        matched: EntitySpan | None = None
        for entry_length in gazetteer._lengths:
            if position + entry_length > length:
                continue
            window = text[position : position + entry_length]
            label = gazetteer.lookup(window)
            if label is not None:
                matched = EntitySpan(position, position + entry_length, label, window)
                break
        if matched is not None:
            spans.append(matched)
            position = matched.end
        else:
            position += 1
    return TaggedText(text, tuple(spans))


def _escape(text: str) -> str:
    return text.replace("[", "[[")


def render_bracketed(tagged: TaggedText) -> str:
    """Insert ``[LABEL] `` before each span; escape literal ``[`` as ``[[``."""
    parts: list[str] = []
    position = 0
    for span in tagged.spans:
        parts.append(_escape(tagged.text[position : span.start]))
        parts.append(f"[{span.label.rendered}] ")
        parts.append(_escape(span.surface))
        position = span.end
    parts.append(_escape(tagged.text[position:]))
    return "".join(parts)


def _is_surface_char(ch: str) -> bool:
    return not ch.isspace() and not is_punctuation(ch)


def parse_bracketed(annotated: str) -> TaggedText:
    """Inverse of :func:`render_bracketed` for well-formed annotated strings.

    An unescaped ``[`` opens a ``[LABEL] `` marker; the span surface is the
    maximal following run of non-whitespace, non-punctuation characters.
    """
    text_parts: list[str] = []
    spans: list[EntitySpan] = []
    text_length = 0
    i = 0
    n = len(annotated)
    while i < n:
        ch = annotated[i]
        if ch != "[":
            text_parts.append(ch)
            text_length += 1
            i += 1
            continue
        if i + 1 < n and annotated[i + 1] == "[":
            text_parts.append("[")
            text_length += 1
            i += 2
            continue
        closing = annotated.find("]", i + 1)
        if closing == -1:
            raise BracketFormatError(f"unterminated bracket at offset {i}")
        label = EntityLabel.parse(annotated[i + 1 : closing])
        if closing + 1 >= n or annotated[closing + 1] != " ":
            raise BracketFormatError(
                f"marker [{label.rendered}] at offset {i} must be followed by a space"
            )
        i = closing + 2
        surface_chars: list[str] = []
        while i < n and _is_surface_char(annotated[i]):
            surface_chars.append(annotated[i])
            i += 1
        if not surface_chars:
            raise BracketFormatError(f"empty entity span after marker at offset {closing}")
        surface = "".join(surface_chars)
        spans.append(EntitySpan(text_length, text_length + len(surface), label, surface))
        text_parts.append(surface)
        text_length += len(surface)
    return TaggedText("".join(text_parts), tuple(spans))
