"""Drafting tools: one for template sections, one for technical elaborations.

Template sections are drafted first, sequentially, because later prompts see
the earlier sections; technical passages are grounded in the frozen template
disclosure. A failed template draft aborts the document (a disclosure cannot
omit a standard section) while a failed technical draft only skips the item.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Sequence

from .domain import ClaimSet, ItemKind, Outline, OutlineItem, strip_markup
from .errors import DraftFailure, InvalidInput, ResponseEmpty, SkipItem
from .gateway import ChatRequest, Gateway
from .logs import RunLog
from .orchestrator import section_for_template_item
from .prompts import format_claims, format_figures, render_prompt, system_prompt
from .domain import FigureText, SectionName

# Output budgets sized for typical section lengths; the abstract is one
# short paragraph by convention.
DEFAULT_ABSTRACT_MAX_TOKENS = 300
DEFAULT_TEMPLATE_MAX_TOKENS = 1200
DEFAULT_TECHNICAL_MAX_TOKENS = 800


@dataclass(frozen=True)
class GeneratorConfig:
    abstract_max_tokens: int = DEFAULT_ABSTRACT_MAX_TOKENS
    template_max_tokens: int = DEFAULT_TEMPLATE_MAX_TOKENS
    technical_max_tokens: int = DEFAULT_TECHNICAL_MAX_TOKENS
    prompts_dir: str | None = None


@dataclass(frozen=True)
class DraftSection:
    """Drafted text for one outline item; paragraphs separated by blank lines."""

    origin_item: str
    kind: ItemKind
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise InvalidInput(f"draft for {self.origin_item} is empty")


def _clean(text: str) -> str:
    return strip_markup(text).strip()


def _existing_block(existing: Sequence[DraftSection]) -> str:
    if not existing:
        return "(none yet)"
    return "\n\n".join(s.text for s in existing)


def draft_template_item(
    item: OutlineItem,
    claims: ClaimSet,
    figures: Sequence[FigureText],
    gateway: Gateway,
    cfg: GeneratorConfig = GeneratorConfig(),
    existing: Sequence[DraftSection] = (),
) -> DraftSection:
    """Draft one standard section from the claims and figure text.

    Previously drafted template sections are included in the prompt so later
    sections stay consistent. A blank completion is retried once, then the
    document run aborts with DraftFailure.
    """
    if item.kind is not ItemKind.TEMPLATE:
        raise InvalidInput(f"draft_template_item got non-template item {item.item_id}")
    section = section_for_template_item(item)
    max_tokens = (
        cfg.abstract_max_tokens if section is SectionName.ABSTRACT else cfg.template_max_tokens
    )
    req = ChatRequest(
        system_prompt=system_prompt(cfg.prompts_dir),
        user_prompt=render_prompt(
            f"draft_{section.snake}",
            cfg.prompts_dir,
            claims=format_claims(claims),
            figures=format_figures(tuple(figures)),
            existing=_existing_block(existing),
        ),
        max_output_tokens=max_tokens,
        tag=f"draft_{section.snake}",
    )
    for attempt in range(2):
        try:
            text = _clean(gateway.chat(req))
        except ResponseEmpty:
            continue
        if text:
            return DraftSection(origin_item=item.item_id, kind=ItemKind.TEMPLATE, text=text)
    raise DraftFailure(f"empty draft for template section {section.value} after retry")


def draft_technical_item(
    item: OutlineItem,
    claims: ClaimSet,
    existing: Sequence[DraftSection],
    gateway: Gateway,
    cfg: GeneratorConfig = GeneratorConfig(),
    template_ids: Collection[str] | None = None,
) -> DraftSection:
    """Draft one technical elaboration grounded in the existing disclosure.

    Requires every template section to be drafted already; pass the outline's
    template item ids for a strict check. A blank completion is retried once,
    then the item is skipped via SkipItem (technical sections are enrichment,
    not structure).
    """
    if item.kind is not ItemKind.TECHNICAL:
        raise InvalidInput(f"draft_technical_item got non-technical item {item.item_id}")
    if item.needs_retrieval:
        raise InvalidInput(f"technical item {item.item_id} was never enriched")
    drafted_templates = {s.origin_item for s in existing if s.kind is ItemKind.TEMPLATE}
    if template_ids is not None:
        missing = set(template_ids) - drafted_templates
        if missing:
            raise InvalidInput(
                f"technical drafting before template sections: missing {sorted(missing)}"
            )
    elif not drafted_templates:
        raise InvalidInput("technical drafting requires the template disclosure first")
    req = ChatRequest(
        system_prompt=system_prompt(cfg.prompts_dir),
        user_prompt=render_prompt(
            "draft_technical",
            cfg.prompts_dir,
            title=item.title,
            brief=item.brief or "(none)",
            context=item.context or "(none)",
            claims=format_claims(claims),
            existing=_existing_block(existing),
        ),
        max_output_tokens=cfg.technical_max_tokens,
        tag="draft_technical",
    )
    for attempt in range(2):
        try:
            text = _clean(gateway.chat(req))
        except ResponseEmpty:
            continue
        if text:
            return DraftSection(origin_item=item.item_id, kind=ItemKind.TECHNICAL, text=text)
    raise SkipItem(f"empty draft for technical item {item.item_id} after retry")


def draft_all(
    outline: Outline,
    gateway: Gateway,
    cfg: GeneratorConfig = GeneratorConfig(),
    run_log: RunLog | None = None,
) -> list[DraftSection]:
    """Draft every outline item: all template items first, then technical items.

    The call log proves the ordering constraint. Returns one section per
    non-skipped item; a skipped technical item leaves a warning instead.
    """
    log = run_log if run_log is not None else RunLog()
    template_items = outline.template_items()
    template_ids = [it.item_id for it in template_items]
    sections: list[DraftSection] = []
    for item in template_items:
        sections.append(
            draft_template_item(item, outline.claims, outline.figures, gateway, cfg, sections)
        )
    template_sections = list(sections)
    for item in outline.technical_items():
        try:
            sections.append(
                draft_technical_item(
                    item, outline.claims, template_sections, gateway, cfg, template_ids
                )
            )
        except SkipItem as exc:
            log.warn(f"skipped technical item {item.item_id}: {exc}")
    return sections
