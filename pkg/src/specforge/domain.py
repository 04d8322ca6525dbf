"""Core data types: claim sets, outlines, and numbered specifications.

Everything here is an immutable value. Constructors validate their invariants
and raise :class:`InvalidInput` on violation, so any instance that exists is
well formed and safe to share between threads.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import InvalidInput

__all__ = [
    "SectionName",
    "ItemKind",
    "Claim",
    "ClaimSet",
    "FigureText",
    "OutlineItem",
    "Outline",
    "Paragraph",
    "Section",
    "Specification",
    "TokenStream",
    "InputDocument",
    "tokenize",
    "renumber",
    "renumber_sections",
    "render",
    "parse",
    "strip_markup",
    "split_paragraphs",
    "load_document",
    "document_from_dict",
]


class SectionName(Enum):
    """Canonical disclosure sections, in canonical document order."""

    ABSTRACT = "Abstract"
    BACKGROUND = "Background"
    SUMMARY = "Summary"
    BRIEF_DESCRIPTION_OF_DRAWINGS = "BriefDescriptionOfDrawings"
    DETAILED_DESCRIPTION = "DetailedDescription"

    @property
    def order(self) -> int:
        return _SECTION_ORDER[self]

    @property
    def heading(self) -> str:
        """Upper-case heading line used by the plain-text renderer."""
        return _SECTION_HEADINGS[self]

    @property
    def display(self) -> str:
        """Title-case name for prompts and tables, e.g. "Detailed Description"."""
        return _SECTION_HEADINGS[self].title()

    @property
    def snake(self) -> str:
        return _SECTION_HEADINGS[self].lower().replace(" ", "_")


_SECTION_ORDER = {name: i for i, name in enumerate(SectionName)}
_SECTION_HEADINGS = {
    SectionName.ABSTRACT: "ABSTRACT",
    SectionName.BACKGROUND: "BACKGROUND",
    SectionName.SUMMARY: "SUMMARY",
    SectionName.BRIEF_DESCRIPTION_OF_DRAWINGS: "BRIEF DESCRIPTION OF DRAWINGS",
    SectionName.DETAILED_DESCRIPTION: "DETAILED DESCRIPTION",
}
_HEADING_TO_SECTION = {h: s for s, h in _SECTION_HEADINGS.items()}


class ItemKind(Enum):
    TEMPLATE = "Template"
    TECHNICAL = "Technical"


# ---------------------------------------------------------------------------
# Tokenization


@dataclass(frozen=True)
class TokenStream:
    """Ordered lowercase tokens, produced only by :func:`tokenize`.

    Deterministic for a given input string; shared basis for the n-gram
    diversity metric, profanity matching, and the query privacy guard.
    """

    tokens: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __bool__(self) -> bool:
        return bool(self.tokens)

    def ngrams(self, n: int) -> Iterator[tuple[str, ...]]:
        """Yield every contiguous n-gram; nothing when the stream is shorter than n."""
        toks = self.tokens
        for i in range(len(toks) - n + 1):
            yield toks[i : i + n]


# ASCII punctuation plus the curly quotes and dashes common in patent text.
_STRIP_CHARS = string.punctuation + "“”‘’–—…"
_BRACKET_NUMBER = re.compile(r"^\[\d+\]$")


def tokenize(text: str) -> TokenStream:
    """Canonical tokenizer: lowercase, split on whitespace, trim punctuation.

    Paragraph-number tags such as "[0001]" are dropped entirely; numeric
    tokens are retained. Empty input yields an empty stream.
    """
    tokens: list[str] = []
    for raw in text.lower().split():
        if _BRACKET_NUMBER.match(raw):
            continue
        tok = raw.strip(_STRIP_CHARS)
        if tok:
            tokens.append(tok)
    return TokenStream(tuple(tokens))


# ---------------------------------------------------------------------------
# Claims and figures


@dataclass(frozen=True)
class Claim:
    number: int
    text: str

    def __post_init__(self) -> None:
        if self.number < 1:
            raise InvalidInput(f"claim number must be positive, got {self.number}")
        if not self.text.strip():
            raise InvalidInput(f"claim {self.number} has empty text")


@dataclass(frozen=True)
class ClaimSet:
    """The numbered claims of one application; the sole confidential input."""

    claims: tuple[Claim, ...]
    source_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "claims", tuple(self.claims))
        if not self.claims:
            raise InvalidInput("claim set is empty")
        numbers = [c.number for c in self.claims]
        if numbers != list(range(1, len(numbers) + 1)):
            raise InvalidInput(
                f"claim numbers must be 1..{len(numbers)} with no gaps, got {numbers}"
            )

    def numbered_text(self) -> str:
        """The claims as a numbered listing, one claim per line block."""
        return "\n".join(f"{c.number}. {c.text.strip()}" for c in self.claims)

    def token_count(self) -> int:
        return sum(len(tokenize(c.text)) for c in self.claims)


@dataclass(frozen=True)
class FigureText:
    """OCR text attached to one figure label, e.g. "FIG. 1"."""

    figure_label: str
    ocr_text: str

    def __post_init__(self) -> None:
        if not self.figure_label.strip():
            raise InvalidInput("figure label is empty")


# ---------------------------------------------------------------------------
# Outline


@dataclass(frozen=True)
class OutlineItem:
    """One entry of the drafting plan.

    Template items cover standard sections draftable from claims alone.
    Technical items carry a claim-derived concept; they are created with
    ``needs_retrieval=True`` and receive ``context`` during enrichment.
    """

    item_id: str
    kind: ItemKind
    title: str
    brief: str = ""
    needs_retrieval: bool = False
    context: str | None = None

    def __post_init__(self) -> None:
        if not self.item_id:
            raise InvalidInput("outline item id is empty")
        if not self.title.strip():
            raise InvalidInput(f"outline item {self.item_id} has empty title")
        if self.kind is ItemKind.TEMPLATE:
            if self.needs_retrieval or self.context is not None or self.brief:
                raise InvalidInput(
                    f"template item {self.item_id} must have no brief, no retrieval "
                    "flag, and no context"
                )
        else:
            enriched = self.context is not None
            if self.needs_retrieval == enriched:
                raise InvalidInput(
                    f"technical item {self.item_id} must either await retrieval "
                    "(no context) or be enriched (context set)"
                )


@dataclass(frozen=True)
class Outline:
    """Ordered drafting plan: all Template items precede all Technical items."""

    items: tuple[OutlineItem, ...]
    claims: ClaimSet
    figures: tuple[FigureText, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "figures", tuple(self.figures))
        ids = [it.item_id for it in self.items]
        if len(set(ids)) != len(ids):
            raise InvalidInput("outline item ids are not unique")
        seen_technical = False
        for it in self.items:
            if it.kind is ItemKind.TECHNICAL:
                seen_technical = True
            elif seen_technical:
                raise InvalidInput("template items must precede all technical items")
        labels = [f.figure_label for f in self.figures]
        if len(set(labels)) != len(labels):
            raise InvalidInput("figure labels are not unique")

    def template_items(self) -> tuple[OutlineItem, ...]:
        return tuple(it for it in self.items if it.kind is ItemKind.TEMPLATE)

    def technical_items(self) -> tuple[OutlineItem, ...]:
        return tuple(it for it in self.items if it.kind is ItemKind.TECHNICAL)


# ---------------------------------------------------------------------------
# Specification


_MARKDOWN_HEADER = re.compile(r"^\s{0,3}#{1,6}\s")
_BULLET = re.compile(r"^\s*[-*•]\s")


@dataclass(frozen=True)
class Paragraph:
    """One numbered paragraph of plain prose (no markup headers, no bullets)."""

    number: int
    text: str

    def __post_init__(self) -> None:
        if self.number < 1:
            raise InvalidInput(f"paragraph number must be positive, got {self.number}")
        if not self.text.strip():
            raise InvalidInput("paragraph text is empty")
        for line in self.text.splitlines():
            if _MARKDOWN_HEADER.match(line) or _BULLET.match(line):
                raise InvalidInput(f"paragraph contains markup: {line[:60]!r}")


@dataclass(frozen=True)
class Section:
    name: SectionName
    paragraphs: tuple[Paragraph, ...]
    origin_item: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "paragraphs", tuple(self.paragraphs))
        if not self.paragraphs:
            raise InvalidInput(f"section {self.name.value} has no paragraphs")


@dataclass(frozen=True)
class Specification:
    """An ordered, numbered disclosure; the pipeline's product.

    Sections follow the canonical order and paragraph numbers are contiguous
    1..N in reading order.
    """

    sections: tuple[Section, ...]
    source_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "sections", tuple(self.sections))
        if not self.sections:
            raise InvalidInput("specification has no sections")
        orders = [s.name.order for s in self.sections]
        if orders != sorted(set(orders)):
            raise InvalidInput(
                "sections must appear at most once each, in canonical order; got "
                + ", ".join(s.name.value for s in self.sections)
            )
        numbers = [p.number for p in self.paragraphs()]
        if numbers != list(range(1, len(numbers) + 1)):
            raise InvalidInput(f"paragraph numbers must be contiguous 1..N, got {numbers}")

    def paragraphs(self) -> Iterator[Paragraph]:
        for section in self.sections:
            yield from section.paragraphs

    def paragraph_count(self) -> int:
        return sum(len(s.paragraphs) for s in self.sections)

    def section(self, name: SectionName) -> Section | None:
        for s in self.sections:
            if s.name is name:
                return s
        return None


def renumber_sections(sections: Sequence[Section]) -> tuple[Section, ...]:
    """Reassign paragraph numbers 1..N in reading order; text untouched."""
    renumbered: list[Section] = []
    counter = 0
    for section in sections:
        paragraphs = []
        for p in section.paragraphs:
            counter += 1
            paragraphs.append(Paragraph(number=counter, text=p.text))
        renumbered.append(
            Section(name=section.name, paragraphs=tuple(paragraphs), origin_item=section.origin_item)
        )
    return tuple(renumbered)


def renumber(spec: Specification) -> Specification:
    """Reassign paragraph numbers 1..N in reading order; idempotent."""
    return Specification(sections=renumber_sections(spec.sections), source_id=spec.source_id)


def render(spec: Specification) -> str:
    """Plain-text document: heading lines in capitals, zero-padded paragraph tags.

    Deterministic; :func:`parse` reads the format back.
    """
    lines: list[str] = []
    for i, section in enumerate(spec.sections):
        if i:
            lines.append("")
        lines.append(section.name.heading)
        for p in section.paragraphs:
            lines.append(f"[{p.number:04d}] {p.text}")
    return "\n".join(lines) + "\n"


_PARAGRAPH_TAG = re.compile(r"^\[(\d+)\]\s?(.*)$")


def parse(text: str, source_id: str = "") -> Specification:
    """Parse a rendered document back into a Specification.

    Heading lines start sections; "[NNNN] " tags start paragraphs; any other
    non-blank line continues the current paragraph. Original paragraph
    numbering is discarded and reassigned in reading order.
    """
    sections: list[tuple[SectionName, list[str]]] = []
    current_texts: list[str] | None = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped in _HEADING_TO_SECTION:
            sections.append((_HEADING_TO_SECTION[stripped], []))
            current_texts = sections[-1][1]
            continue
        if not stripped:
            continue
        if current_texts is None:
            raise InvalidInput(f"content before any section heading: {stripped[:60]!r}")
        tag = _PARAGRAPH_TAG.match(stripped)
        if tag:
            current_texts.append(tag.group(2))
        elif current_texts:
            current_texts[-1] = current_texts[-1] + "\n" + stripped
        else:
            raise InvalidInput(f"paragraph text without a tag: {stripped[:60]!r}")
    built: list[Section] = []
    counter = 0
    for name, texts in sections:
        paragraphs = []
        for t in texts:
            counter += 1
            paragraphs.append(Paragraph(number=counter, text=t))
        built.append(Section(name=name, paragraphs=tuple(paragraphs)))
    return Specification(sections=tuple(built), source_id=source_id)


def strip_markup(text: str) -> str:
    """Remove markdown header and bullet markers so text satisfies Paragraph rules."""
    lines = []
    for line in text.splitlines():
        line = _MARKDOWN_HEADER.sub("", line)
        line = _BULLET.sub("", line)
        lines.append(line.replace("**", ""))
    return "\n".join(lines)


def split_paragraphs(text: str) -> list[str]:
    """Split draft text into paragraph strings on blank lines, dropping empties."""
    parts = re.split(r"\n\s*\n", text.strip())
    return [p.strip() for p in parts if p.strip()]


# ---------------------------------------------------------------------------
# Input documents


@dataclass(frozen=True)
class InputDocument:
    """One patent input: claims, optional figure OCR text, optional gold disclosure."""

    source_id: str
    claims: ClaimSet
    figures: tuple[FigureText, ...] = ()
    gold_specification: Specification | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "figures", tuple(self.figures))
        labels = [f.figure_label for f in self.figures]
        if len(set(labels)) != len(labels):
            raise InvalidInput(f"{self.source_id}: figure labels are not unique")


def document_from_dict(data: Mapping) -> InputDocument:
    """Build an InputDocument from the JSON input schema.

    Normative field names: ``source_id``, ``claims`` (array of {number, text}),
    ``figures`` (array of {label, ocr_text}), optional ``gold_specification``
    (array of {section, paragraphs}).
    """
    try:
        source_id = str(data["source_id"])
        claims = ClaimSet(
            claims=tuple(Claim(number=int(c["number"]), text=str(c["text"])) for c in data["claims"]),
            source_id=source_id,
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed input document: {exc!r}") from exc
    figures = tuple(
        FigureText(figure_label=str(f["label"]), ocr_text=str(f.get("ocr_text", "")))
        for f in data.get("figures", ())
    )
    gold = None
    if data.get("gold_specification"):
        gold = _gold_from_entries(data["gold_specification"], source_id)
    return InputDocument(source_id=source_id, claims=claims, figures=figures, gold_specification=gold)


def _gold_from_entries(entries: Sequence[Mapping], source_id: str) -> Specification:
    by_name: dict[SectionName, list[str]] = {}
    for entry in entries:
        try:
            name = SectionName(entry["section"])
        except (ValueError, KeyError) as exc:
            raise InvalidInput(f"{source_id}: unknown gold section {entry.get('section')!r}") from exc
        if name in by_name:
            raise InvalidInput(f"{source_id}: duplicate gold section {name.value}")
        texts = [str(p) for p in entry["paragraphs"]]
        if not texts:
            raise InvalidInput(f"{source_id}: gold section {name.value} has no paragraphs")
        by_name[name] = texts
    sections = []
    counter = 0
    for name in SectionName:
        if name not in by_name:
            continue
        paragraphs = []
        for t in by_name[name]:
            counter += 1
            paragraphs.append(Paragraph(number=counter, text=strip_markup(t).strip()))
        sections.append(Section(name=name, paragraphs=tuple(paragraphs)))
    return Specification(sections=tuple(sections), source_id=source_id)


def load_document(path: str | Path) -> InputDocument:
    """Load one input document from a JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
    return document_from_dict(data)


def outline_item_to_dict(item: OutlineItem) -> dict:
    return {
        "item_id": item.item_id,
        "kind": item.kind.value,
        "title": item.title,
        "brief": item.brief,
        "needs_retrieval": item.needs_retrieval,
        "context": item.context,
    }


def outline_to_dict(outline: Outline) -> dict:
    return {
        "source_id": outline.claims.source_id,
        "items": [outline_item_to_dict(it) for it in outline.items],
        "figures": [f.figure_label for f in outline.figures],
    }


def specification_to_dict(spec: Specification) -> dict:
    return {
        "source_id": spec.source_id,
        "sections": [
            {
                "section": s.name.value,
                "origin_item": s.origin_item,
                "paragraphs": [{"number": p.number, "text": p.text} for p in s.paragraphs],
            }
            for s in spec.sections
        ],
    }
