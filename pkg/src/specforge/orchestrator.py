"""Outline construction: fixed template items, then retrieval-backed technical items.

The template plan mirrors how drafting actually proceeds: standard sections
first (abstract last, since it summarizes), then concept-specific items
extracted from the claims, each enriched with externally retrieved context
that never exposes claim text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .domain import ClaimSet, FigureText, ItemKind, Outline, OutlineItem, SectionName, tokenize
from .errors import InvalidInput, NoResults, PrivacyViolation, ResponseEmpty
from .gateway import ChatRequest, Gateway
from .logs import RunLog
from .prompts import format_claims, render_prompt, system_prompt
from .retrieval import Retriever, SearchQuery, guard_query

# Claims average roughly 1.3k tokens, so one extraction pass usually suffices.
DEFAULT_MULTIPASS_THRESHOLD = 1500
DEFAULT_MAX_TECHNICAL_ITEMS = 12
BRIEF_TOKEN_CAP = 80
EXTRACTION_ATTEMPTS = 3  # initial call plus two retries

DEFAULT_TEMPLATE_PLAN = (
    SectionName.BACKGROUND,
    SectionName.SUMMARY,
    SectionName.BRIEF_DESCRIPTION_OF_DRAWINGS,
    SectionName.DETAILED_DESCRIPTION,
    SectionName.ABSTRACT,
)


@dataclass(frozen=True)
class OrchestratorConfig:
    max_technical_items: int = DEFAULT_MAX_TECHNICAL_ITEMS
    multipass_threshold_tokens: int = DEFAULT_MULTIPASS_THRESHOLD
    template_plan: tuple[SectionName, ...] = DEFAULT_TEMPLATE_PLAN
    extraction_max_tokens: int = 800
    context_max_tokens: int = 600
    prompts_dir: str | None = None

    def __post_init__(self) -> None:
        if self.max_technical_items < 1 or self.multipass_threshold_tokens < 1:
            raise InvalidInput("orchestrator limits must be positive")
        if not self.template_plan:
            raise InvalidInput("template plan is empty")
        if len(set(self.template_plan)) != len(self.template_plan):
            raise InvalidInput("template plan contains duplicates")


def template_item_id(name: SectionName) -> str:
    return f"template:{name.snake}"


def section_for_template_item(item: OutlineItem) -> SectionName:
    """Recover the planned section from a template item id."""
    if item.kind is not ItemKind.TEMPLATE or not item.item_id.startswith("template:"):
        raise InvalidInput(f"not a template item: {item.item_id}")
    snake = item.item_id.split(":", 1)[1]
    for name in SectionName:
        if name.snake == snake:
            return name
    raise InvalidInput(f"template item {item.item_id} names no known section")


def build_template(
    claims: ClaimSet,
    figures: tuple[FigureText, ...] | list[FigureText],
    cfg: OrchestratorConfig,
) -> Outline:
    """One Template item per planned section; drawings only when figures exist."""
    items = []
    for name in cfg.template_plan:
        if name is SectionName.BRIEF_DESCRIPTION_OF_DRAWINGS and not figures:
            continue
        items.append(
            OutlineItem(item_id=template_item_id(name), kind=ItemKind.TEMPLATE, title=name.display)
        )
    return Outline(items=tuple(items), claims=claims, figures=tuple(figures))


_CONCEPT_LINE = re.compile(r"^[\s\-\*•]*(.+?)\s*::\s*(.*)$")


def _parse_concept_lines(reply: str) -> list[tuple[str, str]]:
    concepts = []
    for line in reply.splitlines():
        m = _CONCEPT_LINE.match(line.strip())
        if m and m.group(1).strip():
            title = m.group(1).strip()
            brief_tokens = m.group(2).strip().split()
            concepts.append((title, " ".join(brief_tokens[:BRIEF_TOKEN_CAP])))
    return concepts


def _claim_chunks(claims: ClaimSet, threshold: int) -> list[str]:
    """Greedy split at claim boundaries once the whole set exceeds the threshold."""
    if claims.token_count() <= threshold:
        return [claims.numbered_text()]
    chunks: list[list[str]] = [[]]
    budget = 0
    for claim in claims.claims:
        cost = len(tokenize(claim.text))
        if chunks[-1] and budget + cost > threshold:
            chunks.append([])
            budget = 0
        chunks[-1].append(f"{claim.number}. {claim.text.strip()}")
        budget += cost
    return ["\n".join(chunk) for chunk in chunks]


def extract_concepts(
    claims: ClaimSet,
    cfg: OrchestratorConfig,
    gateway: Gateway,
    run_log: RunLog | None = None,
) -> list[OutlineItem]:
    """Prompt for `TITLE :: BRIEF` concept lines, one pass per claim chunk.

    Duplicate titles across passes are dropped case-insensitively, keeping
    first-seen order; the list is truncated to the configured cap. When a
    pass still parses to nothing after retries the pipeline degrades to
    template-only drafting and a warning is recorded.
    """
    log = run_log if run_log is not None else RunLog()
    sys_prompt = system_prompt(cfg.prompts_dir)
    seen: dict[str, tuple[str, str]] = {}
    any_failure = False
    for chunk in _claim_chunks(claims, cfg.multipass_threshold_tokens):
        concepts: list[tuple[str, str]] | None = None
        for _ in range(EXTRACTION_ATTEMPTS):
            try:
                reply = gateway.chat(
                    ChatRequest(
                        system_prompt=sys_prompt,
                        user_prompt=render_prompt(
                            "extract_concepts",
                            cfg.prompts_dir,
                            claims=chunk,
                            max_items=str(cfg.max_technical_items),
                        ),
                        max_output_tokens=cfg.extraction_max_tokens,
                        tag="extract_concepts",
                    )
                )
            except ResponseEmpty:
                continue
            parsed = _parse_concept_lines(reply)
            if parsed:
                concepts = parsed
                break
        if concepts is None:
            any_failure = True
            continue
        for title, brief in concepts:
            seen.setdefault(title.lower(), (title, brief))
    if any_failure:
        log.warn(
            "concept extraction produced no parseable `TITLE :: BRIEF` lines "
            f"after {EXTRACTION_ATTEMPTS} attempts; continuing without those concepts"
        )
    items = []
    for i, (title, brief) in enumerate(list(seen.values())[: cfg.max_technical_items], start=1):
        items.append(
            OutlineItem(
                item_id=f"technical:{i:02d}",
                kind=ItemKind.TECHNICAL,
                title=title,
                brief=brief,
                needs_retrieval=True,
            )
        )
    return items


def enrich(
    item: OutlineItem,
    claims: ClaimSet,
    gateway: Gateway,
    retriever: Retriever | None,
    cfg: OrchestratorConfig = OrchestratorConfig(),
    run_log: RunLog | None = None,
) -> OutlineItem:
    """Retrieve one document for the concept and generate aligned context.

    Degradation paths, never fatal: a privacy rejection or empty search
    result drops the snippet and the context is generated from the claims
    alone; a blank context reply falls back to the snippet or the brief.
    Each degradation records a warning.
    """
    if item.kind is not ItemKind.TECHNICAL or not item.needs_retrieval:
        raise InvalidInput(f"enrich expects an unenriched technical item, got {item.item_id}")
    log = run_log if run_log is not None else RunLog()
    snippet = ""
    query = SearchQuery(concept=item.title, qualifier=item.brief)
    if retriever is None:
        log.warn(f"{item.item_id}: no retrieval provider configured; using claims only")
    else:
        try:
            snippet = retriever.search(guard_query(query, claims)).snippet
        except PrivacyViolation as exc:
            log.warn(f"{item.item_id}: query rejected by privacy guard ({exc}); using claims only")
        except NoResults:
            log.warn(f"{item.item_id}: search returned no document; using claims only")
    try:
        context = gateway.chat(
            ChatRequest(
                system_prompt=system_prompt(cfg.prompts_dir),
                user_prompt=render_prompt(
                    "contextualize",
                    cfg.prompts_dir,
                    title=item.title,
                    brief=item.brief or "(none)",
                    snippet=snippet or "(no external material; rely on the claims)",
                    claims=format_claims(claims),
                ),
                max_output_tokens=cfg.context_max_tokens,
                tag="contextualize",
            )
        ).strip()
    except ResponseEmpty:
        context = snippet or item.brief or item.title
        log.warn(f"{item.item_id}: blank contextualization; falling back to retrieved/brief text")
    return replace(item, context=context, needs_retrieval=False)


def orchestrate(
    claims: ClaimSet,
    figures: tuple[FigureText, ...] | list[FigureText],
    cfg: OrchestratorConfig,
    gateway: Gateway,
    retriever: Retriever | None = None,
    template_only: bool = False,
    run_log: RunLog | None = None,
) -> Outline:
    """Full outline: template items, extracted concepts, then enrichment.

    With ``template_only`` the extraction and enrichment stages are skipped
    entirely (the template-only ablation). Only BackendUnavailable escapes.
    """
    outline = build_template(claims, figures, cfg)
    if template_only:
        return outline
    technical = extract_concepts(claims, cfg, gateway, run_log)
    enriched = tuple(
        enrich(item, claims, gateway, retriever, cfg, run_log) for item in technical
    )
    return Outline(items=outline.items + enriched, claims=claims, figures=outline.figures)
