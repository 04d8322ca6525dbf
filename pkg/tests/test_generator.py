import pytest

from specforge.domain import ItemKind, Outline, OutlineItem
from specforge.errors import DraftFailure, InvalidInput, SkipItem
from specforge.generator import (
    DraftSection,
    GeneratorConfig,
    draft_all,
    draft_template_item,
    draft_technical_item,
)
from specforge.orchestrator import OrchestratorConfig, build_template

from conftest import make_gateway

CFG = GeneratorConfig()


def template_items(demo_claims, demo_figures=()):
    return build_template(demo_claims, demo_figures, OrchestratorConfig()).items


def enriched_item(i=1, title="PCR"):
    return OutlineItem(
        item_id=f"technical:{i:02d}",
        kind=ItemKind.TECHNICAL,
        title=title,
        brief="a method",
        needs_retrieval=False,
        context=f"{title} background context.",
    )


def template_sections(items):
    return [
        DraftSection(origin_item=it.item_id, kind=ItemKind.TEMPLATE, text=f"Text for {it.item_id}.")
        for it in items
    ]


# ---------------------------------------------------------------------------
# draft_template_item


def test_draft_background_from_mock(demo_claims):
    items = template_items(demo_claims)
    gw = make_gateway({"draft_background": "Background prose.\n\nSecond paragraph."})
    section = draft_template_item(items[0], demo_claims, (), gw, CFG)
    assert section.kind is ItemKind.TEMPLATE
    assert section.origin_item == "template:background"
    assert section.text == "Background prose.\n\nSecond paragraph."


def test_draft_template_rejects_technical_item(demo_claims):
    gw = make_gateway({})
    with pytest.raises(InvalidInput):
        draft_template_item(enriched_item(), demo_claims, (), gw, CFG)


def test_drawings_prompt_contains_figure_labels(demo_claims, demo_figures):
    items = template_items(demo_claims, demo_figures)
    drawings = next(it for it in items if "drawings" in it.item_id)
    gw = make_gateway({"draft_brief_description_of_drawings": "FIG. 1 shows a vessel."})
    draft_template_item(drawings, demo_claims, demo_figures, gw, CFG)
    prompt = gw.call_log.entries[0].user_prompt
    assert "FIG. 1" in prompt and "FIG. 2" in prompt
    assert "reaction vessel 10" in prompt  # OCR text included


def test_template_prompt_includes_earlier_sections(demo_claims):
    items = template_items(demo_claims)
    existing = [DraftSection(origin_item="template:background", kind=ItemKind.TEMPLATE, text="Earlier background text.")]
    gw = make_gateway({"draft_summary": "Summary."})
    draft_template_item(items[1], demo_claims, (), gw, CFG, existing=existing)
    assert "Earlier background text." in gw.call_log.entries[0].user_prompt


def test_template_empty_twice_is_draft_failure(demo_claims):
    items = template_items(demo_claims)
    gw = make_gateway({"draft_background": ["", ""]})
    with pytest.raises(DraftFailure):
        draft_template_item(items[0], demo_claims, (), gw, CFG)
    assert len(gw.call_log.entries) == 2  # one retry


def test_template_markup_is_stripped(demo_claims):
    items = template_items(demo_claims)
    gw = make_gateway({"draft_background": "## Background\n- first point\nProse line."})
    section = draft_template_item(items[0], demo_claims, (), gw, CFG)
    assert "#" not in section.text and "- " not in section.text


def test_abstract_uses_smaller_token_budget(demo_claims):
    items = template_items(demo_claims)
    abstract = next(it for it in items if "abstract" in it.item_id)
    seen = {}

    def capture(req):
        seen["max"] = req.max_output_tokens
        return "An abstract."

    gw = make_gateway({"draft_abstract": capture})
    draft_template_item(abstract, demo_claims, (), gw, CFG)
    assert seen["max"] == CFG.abstract_max_tokens


# ---------------------------------------------------------------------------
# draft_technical_item


def test_draft_technical_from_mock(demo_claims):
    items = template_items(demo_claims)
    existing = template_sections(items)
    gw = make_gateway({"draft_technical": "Elaboration mentioning PCR at length."})
    section = draft_technical_item(enriched_item(), demo_claims, existing, gw, CFG)
    assert section.kind is ItemKind.TECHNICAL
    assert "PCR" in section.text
    # prompt grounded in context and existing disclosure
    prompt = gw.call_log.entries[0].user_prompt
    assert "PCR background context." in prompt
    assert "Text for template:background." in prompt


def test_technical_before_templates_rejected(demo_claims):
    items = template_items(demo_claims)
    partial = template_sections(items[:2])
    gw = make_gateway({})
    with pytest.raises(InvalidInput):
        draft_technical_item(
            enriched_item(), demo_claims, partial, gw, CFG,
            template_ids=[it.item_id for it in items],
        )
    with pytest.raises(InvalidInput):
        draft_technical_item(enriched_item(), demo_claims, [], gw, CFG)


def test_technical_unenriched_rejected(demo_claims):
    raw = OutlineItem(
        item_id="technical:09", kind=ItemKind.TECHNICAL, title="X", needs_retrieval=True
    )
    gw = make_gateway({})
    with pytest.raises(InvalidInput):
        draft_technical_item(raw, demo_claims, [], gw, CFG)


def test_technical_persistent_empty_is_skip(demo_claims):
    items = template_items(demo_claims)
    gw = make_gateway({"draft_technical": ["", ""]})
    with pytest.raises(SkipItem):
        draft_technical_item(enriched_item(), demo_claims, template_sections(items), gw, CFG)


# ---------------------------------------------------------------------------
# draft_all


def full_outline(demo_claims, demo_figures=()):
    base = build_template(demo_claims, demo_figures, OrchestratorConfig())
    return Outline(
        items=base.items + (enriched_item(1, "PCR"), enriched_item(2, "Polymerase")),
        claims=demo_claims,
        figures=demo_figures,
    )


def all_drafts_script(with_figures=False, technical=("PCR elaboration.", "Polymerase elaboration.")):
    script = {
        "draft_background": "Background text.",
        "draft_summary": "Summary text.",
        "draft_detailed_description": "Description one.\n\nDescription two.",
        "draft_abstract": "Abstract text.",
        "draft_technical": list(technical),
    }
    if with_figures:
        script["draft_brief_description_of_drawings"] = "FIG. 1 shows things."
    return script


def test_draft_all_orders_templates_before_technical(demo_claims, demo_figures, run_log):
    outline = full_outline(demo_claims, demo_figures)
    gw = make_gateway(all_drafts_script(with_figures=True))
    sections = draft_all(outline, gw, CFG, run_log)
    assert len(sections) == 7
    tags = gw.call_log.tags()
    template_idx = [i for i, t in enumerate(tags) if t.startswith("draft_") and t != "draft_technical"]
    technical_idx = [i for i, t in enumerate(tags) if t == "draft_technical"]
    assert max(template_idx) < min(technical_idx)


def test_draft_all_template_only(demo_claims, run_log):
    outline = build_template(demo_claims, (), OrchestratorConfig())
    gw = make_gateway(all_drafts_script())
    sections = draft_all(outline, gw, CFG, run_log)
    assert len(sections) == 4
    assert all(s.kind is ItemKind.TEMPLATE for s in sections)


def test_draft_all_one_skip_warns(demo_claims, run_log):
    outline = full_outline(demo_claims)
    gw = make_gateway(all_drafts_script(technical=("PCR elaboration.", "", "")))
    sections = draft_all(outline, gw, CFG, run_log)
    assert len(sections) == 5  # 4 template + 1 technical
    assert len(run_log.warnings) == 1
    assert "technical:02" in run_log.warnings[0]


def test_draft_all_bijection(demo_claims, run_log):
    outline = full_outline(demo_claims)
    gw = make_gateway(all_drafts_script())
    sections = draft_all(outline, gw, CFG, run_log)
    assert sorted(s.origin_item for s in sections) == sorted(it.item_id for it in outline.items)
    assert len({s.origin_item for s in sections}) == len(sections)
