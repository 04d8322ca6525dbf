"""Drafting strategies behind one contract, so every mode evaluates uniformly.

Besides the full orchestrated pipeline and its template-only ablation, three
baseline strategies are provided: a single-pass draft, a section-by-section
draft conditioned on previously generated content, and a claim-iterative
draft that writes one paragraph per claim conditioned on the previous
paragraph. Baselines share the pipeline's input and output types, never
mutate the input document, and produce valid numbered specifications.
"""

from __future__ import annotations

from enum import Enum

from .domain import (
    InputDocument,
    ItemKind,
    Paragraph,
    Section,
    SectionName,
    Specification,
    outline_to_dict,
    renumber_sections,
    split_paragraphs,
    strip_markup,
)
from .errors import DraftFailure, ResponseEmpty
from .gateway import ChatRequest, Gateway
from .generator import GeneratorConfig, draft_all
from .logs import RunLog
from .merger import merge_all
from .orchestrator import OrchestratorConfig, orchestrate
from .prompts import format_claims, format_figures, render_prompt, system_prompt
from .retrieval import Retriever

SINGLE_GEN_MAX_TOKENS = 4096
STUB_TEXT = "This section was not separately drafted by this generation strategy."


class ModeId(Enum):
    AUTOSPEC_FULL = "autospec-full"
    AUTOSPEC_TEMPLATE = "autospec-template"
    SINGLE_GEN = "single-gen"
    MULTI_GEN = "multi-gen"
    CLAIM_ITERATIVE = "claim-iterative"


def draft(
    mode: ModeId,
    doc: InputDocument,
    gateway: Gateway,
    retriever: Retriever | None = None,
    orch_cfg: OrchestratorConfig = OrchestratorConfig(),
    gen_cfg: GeneratorConfig = GeneratorConfig(),
    run_log: RunLog | None = None,
    decisions: list[dict] | None = None,
    artifacts: dict | None = None,
) -> Specification:
    """Draft one specification with the selected strategy.

    ``decisions`` and ``artifacts``, when given, collect the insertion
    decisions and the intermediate outline/drafts for the run directory.
    """
    log = run_log if run_log is not None else RunLog()
    if mode in (ModeId.AUTOSPEC_FULL, ModeId.AUTOSPEC_TEMPLATE):
        return _pipeline(mode, doc, gateway, retriever, orch_cfg, gen_cfg, log, decisions, artifacts)
    if mode is ModeId.SINGLE_GEN:
        return _single_gen(doc, gateway, gen_cfg, log)
    if mode is ModeId.MULTI_GEN:
        return _multi_gen(doc, gateway, orch_cfg, gen_cfg, log)
    if mode is ModeId.CLAIM_ITERATIVE:
        return _claim_iterative(doc, gateway, gen_cfg, log)
    raise ValueError(f"unknown mode {mode!r}")


def _pipeline(
    mode: ModeId,
    doc: InputDocument,
    gateway: Gateway,
    retriever: Retriever | None,
    orch_cfg: OrchestratorConfig,
    gen_cfg: GeneratorConfig,
    log: RunLog,
    decisions: list[dict] | None,
    artifacts: dict | None = None,
) -> Specification:
    outline = orchestrate(
        doc.claims,
        doc.figures,
        orch_cfg,
        gateway,
        retriever,
        template_only=mode is ModeId.AUTOSPEC_TEMPLATE,
        run_log=log,
    )
    sections = draft_all(outline, gateway, gen_cfg, log)
    template_sections = [s for s in sections if s.kind is ItemKind.TEMPLATE]
    technical_sections = [s for s in sections if s.kind is ItemKind.TECHNICAL]
    if artifacts is not None:
        artifacts["outline"] = outline_to_dict(outline)
        artifacts["drafts"] = [
            {"origin_item": s.origin_item, "kind": s.kind.value, "text": s.text} for s in sections
        ]
    return merge_all(
        template_sections,
        technical_sections,
        outline,
        gateway,
        run_log=log,
        decisions=decisions,
        prompts_dir=gen_cfg.prompts_dir,
    )


_HEADING_ALIASES = {
    "ABSTRACT": SectionName.ABSTRACT,
    "BACKGROUND": SectionName.BACKGROUND,
    "SUMMARY": SectionName.SUMMARY,
    "BRIEF DESCRIPTION OF DRAWINGS": SectionName.BRIEF_DESCRIPTION_OF_DRAWINGS,
    "BRIEF DESCRIPTION OF THE DRAWINGS": SectionName.BRIEF_DESCRIPTION_OF_DRAWINGS,
    "DETAILED DESCRIPTION": SectionName.DETAILED_DESCRIPTION,
}


def _heading_for_line(line: str) -> SectionName | None:
    bare = line.strip().strip(":#* ").upper()
    return _HEADING_ALIASES.get(bare)


def split_by_headings(text: str) -> dict[SectionName, list[str]]:
    """Heading heuristics for single-pass output: canonical names at line starts."""
    chunks: dict[SectionName, list[str]] = {}
    current: SectionName | None = None
    buffer: list[str] = []

    def flush() -> None:
        if current is not None and buffer:
            chunks.setdefault(current, []).extend(split_paragraphs("\n".join(buffer)))
        buffer.clear()

    for line in text.splitlines():
        name = _heading_for_line(line)
        if name is not None:
            flush()
            current = name
        else:
            buffer.append(line)
    flush()
    return chunks


def _build_spec(source_id: str, chunks: dict[SectionName, list[str]]) -> Specification:
    sections = []
    for name in SectionName:
        texts = [strip_markup(t).strip() for t in chunks.get(name, [])]
        texts = [t for t in texts if t]
        if not texts:
            continue
        sections.append(
            Section(
                name=name,
                paragraphs=tuple(Paragraph(number=i + 1, text=t) for i, t in enumerate(texts)),
            )
        )
    return Specification(sections=renumber_sections(sections), source_id=source_id)


def _chat_with_retry(gateway: Gateway, req: ChatRequest, what: str) -> str:
    for attempt in range(2):
        try:
            return gateway.chat(req)
        except ResponseEmpty:
            continue
    raise DraftFailure(f"empty completion for {what} after retry")


def _single_gen(
    doc: InputDocument, gateway: Gateway, cfg: GeneratorConfig, log: RunLog
) -> Specification:
    reply = _chat_with_retry(
        gateway,
        ChatRequest(
            system_prompt=system_prompt(cfg.prompts_dir),
            user_prompt=render_prompt(
                "single_gen",
                cfg.prompts_dir,
                claims=format_claims(doc.claims),
                figures=format_figures(doc.figures),
            ),
            max_output_tokens=SINGLE_GEN_MAX_TOKENS,
            tag="single_gen",
        ),
        "single-pass draft",
    )
    chunks = split_by_headings(reply)
    if not chunks:
        log.warn("single-pass output has no recognizable headings; keeping everything "
                 "in the detailed description")
        chunks = {SectionName.DETAILED_DESCRIPTION: split_paragraphs(strip_markup(reply))}
    return _build_spec(doc.source_id, chunks)


def _multi_gen(
    doc: InputDocument,
    gateway: Gateway,
    orch_cfg: OrchestratorConfig,
    cfg: GeneratorConfig,
    log: RunLog,
) -> Specification:
    chunks: dict[SectionName, list[str]] = {}
    previous: list[str] = []
    for name in orch_cfg.template_plan:
        if name is SectionName.BRIEF_DESCRIPTION_OF_DRAWINGS and not doc.figures:
            continue
        reply = _chat_with_retry(
            gateway,
            ChatRequest(
                system_prompt=system_prompt(cfg.prompts_dir),
                user_prompt=render_prompt(
                    "multi_gen",
                    cfg.prompts_dir,
                    section_title=name.display,
                    claims=format_claims(doc.claims),
                    figures=format_figures(doc.figures),
                    existing="\n\n".join(previous) or "(none yet)",
                ),
                max_output_tokens=cfg.template_max_tokens,
                tag=f"multi_gen_{name.snake}",
            ),
            f"multi-gen section {name.value}",
        )
        text = strip_markup(reply).strip()
        chunks[name] = split_paragraphs(text)
        previous.append(text)
    return _build_spec(doc.source_id, chunks)


def _claim_iterative(
    doc: InputDocument, gateway: Gateway, cfg: GeneratorConfig, log: RunLog
) -> Specification:
    paragraphs: list[str] = []
    for claim in doc.claims.claims:
        req = ChatRequest(
            system_prompt=system_prompt(cfg.prompts_dir),
            user_prompt=render_prompt(
                "claim_iterative",
                cfg.prompts_dir,
                claim_text=claim.text,
                previous_paragraph=paragraphs[-1] if paragraphs else "(none)",
            ),
            max_output_tokens=cfg.technical_max_tokens,
            tag="claim_iterative",
        )
        text = ""
        for attempt in range(2):
            try:
                # One paragraph per claim: collapse whitespace runs in the reply.
                text = " ".join(strip_markup(gateway.chat(req)).split())
            except ResponseEmpty:
                continue
            if text:
                break
        if text:
            paragraphs.append(text)
        else:
            log.warn(f"claim {claim.number}: blank paragraph after retry; claim skipped")
    if not paragraphs:
        raise DraftFailure("claim-iterative drafting produced no paragraphs")
    chunks = {
        SectionName.ABSTRACT: [STUB_TEXT],
        SectionName.BACKGROUND: [STUB_TEXT],
        SectionName.SUMMARY: [STUB_TEXT],
        SectionName.DETAILED_DESCRIPTION: paragraphs,
    }
    return _build_spec(doc.source_id, chunks)
