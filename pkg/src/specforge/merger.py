"""Document assembly: concatenate template sections, then splice technical text.

Template sections are merged by simple concatenation in canonical order and
numbered sequentially. Each technical passage is then integrated by an LLM
decision carrying reasoning, an insertion position, and a revised passage;
insertions are restricted to the detailed description, existing paragraphs
are never modified, and splices run sequentially so every decision sees the
current numbering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .domain import (
    ItemKind,
    Outline,
    Paragraph,
    Section,
    SectionName,
    Specification,
    render,
    renumber_sections,
    split_paragraphs,
    strip_markup,
)
from .errors import InvalidInput, MissingSection, ResponseEmpty
from .gateway import ChatRequest, Gateway
from .generator import DraftSection
from .logs import RunLog
from .orchestrator import section_for_template_item
from .prompts import render_prompt, system_prompt

SPLICE_ATTEMPTS = 3  # initial call plus two retries
DEFAULT_SPLICE_MAX_TOKENS = 1200


@dataclass(frozen=True)
class InsertionDecision:
    """Where a technical passage lands: reasoning, position, revised text.

    ``insert_after`` is a document paragraph number inside the detailed
    description, or 0 for "before its first paragraph".
    """

    reasoning: str
    insert_after: int
    revised_text: str

    def __post_init__(self) -> None:
        if self.insert_after < 0:
            raise InvalidInput("insert_after must be >= 0")
        if not self.revised_text.strip():
            raise InvalidInput("revised text is empty")


def _sections_to_paragraph_texts(section: DraftSection) -> list[str]:
    texts = split_paragraphs(strip_markup(section.text))
    if not texts:
        raise InvalidInput(f"draft {section.origin_item} contains no paragraphs")
    return texts


def assemble_template(sections: list[DraftSection], outline: Outline) -> Specification:
    """Concatenate the template drafts in canonical order and number them 1..N."""
    by_item: dict[str, DraftSection] = {}
    for section in sections:
        if section.kind is not ItemKind.TEMPLATE:
            raise InvalidInput(f"assemble_template got technical draft {section.origin_item}")
        by_item[section.origin_item] = section
    planned = outline.template_items()
    missing = [it.item_id for it in planned if it.item_id not in by_item]
    if missing:
        raise MissingSection(f"template drafts missing for {missing}")
    ordered = sorted(planned, key=lambda it: section_for_template_item(it).order)
    built: list[Section] = []
    for item in ordered:
        draft = by_item[item.item_id]
        paragraphs = tuple(
            Paragraph(number=i + 1, text=t)
            for i, t in enumerate(_sections_to_paragraph_texts(draft))
        )
        built.append(
            Section(
                name=section_for_template_item(item),
                paragraphs=paragraphs,
                origin_item=item.item_id,
            )
        )
    return Specification(
        sections=renumber_sections(built), source_id=outline.claims.source_id
    )


_REPLY_PATTERN = re.compile(
    r"REASONING:\s*(?P<reasoning>.*?)\s*"
    r"INSERT_AFTER:\s*\[?(?P<position>\d+)\]?\s*"
    r"REVISED:\s*(?P<revised>.+)",
    re.DOTALL | re.IGNORECASE,
)


def _dd_bounds(spec: Specification) -> tuple[int, int]:
    section = spec.section(SectionName.DETAILED_DESCRIPTION)
    if section is None:
        raise InvalidInput("specification has no detailed description to splice into")
    return section.paragraphs[0].number, section.paragraphs[-1].number


def parse_splice_reply(reply: str, spec: Specification) -> InsertionDecision:
    """Parse the three-field splice reply and validate the position.

    The position must be 0 (before the detailed description's first
    paragraph) or a paragraph number inside the detailed description.
    """
    m = _REPLY_PATTERN.search(reply)
    if not m:
        raise InvalidInput(f"splice reply does not match wire format: {reply[:80]!r}")
    position = int(m.group("position"))
    dd_first, dd_last = _dd_bounds(spec)
    if position != 0 and not dd_first <= position <= dd_last:
        raise InvalidInput(
            f"insertion position {position} outside detailed description [{dd_first}, {dd_last}]"
        )
    revised = strip_markup(m.group("revised")).strip()
    return InsertionDecision(
        reasoning=m.group("reasoning").strip(), insert_after=position, revised_text=revised
    )


def _insert_into_dd(spec: Specification, insert_after: int, texts: list[str]) -> Specification:
    sections = []
    for section in spec.sections:
        if section.name is not SectionName.DETAILED_DESCRIPTION:
            sections.append(section)
            continue
        index = 0 if insert_after == 0 else next(
            i + 1 for i, p in enumerate(section.paragraphs) if p.number == insert_after
        )
        paragraphs = list(section.paragraphs)
        paragraphs[index:index] = [Paragraph(number=1, text=t) for t in texts]
        sections.append(
            Section(name=section.name, paragraphs=tuple(paragraphs), origin_item=section.origin_item)
        )
    return Specification(sections=renumber_sections(sections), source_id=spec.source_id)


def splice_technical(
    spec: Specification,
    section: DraftSection,
    gateway: Gateway,
    run_log: RunLog | None = None,
    decisions: list[dict] | None = None,
    prompts_dir: str | None = None,
    max_output_tokens: int = DEFAULT_SPLICE_MAX_TOKENS,
) -> Specification:
    """Splice one technical draft into the detailed description.

    The model supplies reasoning, a position, and a revised passage. After
    two retries on an unparseable or out-of-range reply, the unrevised text
    is appended at the end of the detailed description with a warning, so
    splicing never fails a document run.
    """
    if section.kind is not ItemKind.TECHNICAL:
        raise InvalidInput(f"splice_technical got template draft {section.origin_item}")
    log = run_log if run_log is not None else RunLog()
    dd_first, dd_last = _dd_bounds(spec)
    req = ChatRequest(
        system_prompt=system_prompt(prompts_dir),
        user_prompt=render_prompt(
            "splice",
            prompts_dir,
            dd_first=f"{dd_first:04d}",
            dd_last=f"{dd_last:04d}",
            specification=render(spec),
            passage=section.text,
        ),
        max_output_tokens=max_output_tokens,
        tag="splice",
    )
    decision = None
    for attempt in range(SPLICE_ATTEMPTS):
        try:
            decision = parse_splice_reply(gateway.chat(req), spec)
            break
        except (InvalidInput, ResponseEmpty):
            continue
    if decision is None:
        log.warn(
            f"{section.origin_item}: splice reply unusable after {SPLICE_ATTEMPTS} attempts; "
            "appending passage at the end of the detailed description"
        )
        decision = InsertionDecision(
            reasoning="fallback: appended unrevised after unusable splice replies",
            insert_after=dd_last,
            revised_text=strip_markup(section.text).strip(),
        )
    texts = split_paragraphs(decision.revised_text)
    if decisions is not None:
        decisions.append(
            {
                "origin_item": section.origin_item,
                "reasoning": decision.reasoning,
                "insert_after": decision.insert_after,
                "paragraphs": len(texts),
            }
        )
    return _insert_into_dd(spec, decision.insert_after, texts)


def merge_all(
    template_sections: list[DraftSection],
    technical_sections: list[DraftSection],
    outline: Outline,
    gateway: Gateway,
    run_log: RunLog | None = None,
    decisions: list[dict] | None = None,
    prompts_dir: str | None = None,
) -> Specification:
    """Assemble the template disclosure, then splice each technical section in order."""
    spec = assemble_template(template_sections, outline)
    for section in technical_sections:
        spec = splice_technical(
            spec, section, gateway, run_log=run_log, decisions=decisions, prompts_dir=prompts_dir
        )
    return spec
