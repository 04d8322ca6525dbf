"""Prompt template assets: versioned text files, one per drafting tool.

Templates use ``string.Template`` placeholders ($claims, $figures, ...) so
braces in patent text never collide with formatting. A custom directory can
override any asset by file name; missing names fall back to the packaged
defaults.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from string import Template

from .domain import ClaimSet, FigureText
from .errors import InvalidInput

_CACHE: dict[tuple[str, str | None], Template] = {}


def load_prompt(name: str, prompts_dir: str | Path | None = None) -> Template:
    """Load the named template, preferring ``prompts_dir`` when given."""
    key = (name, str(prompts_dir) if prompts_dir else None)
    if key in _CACHE:
        return _CACHE[key]
    text = None
    if prompts_dir is not None:
        candidate = Path(prompts_dir) / f"{name}.txt"
        if candidate.is_file():
            text = candidate.read_text(encoding="utf-8")
    if text is None:
        ref = resources.files("specforge.assets") / f"{name}.txt"
        if not ref.is_file():
            raise InvalidInput(f"unknown prompt asset {name!r}")
        text = ref.read_text(encoding="utf-8")
    template = Template(text)
    _CACHE[key] = template
    return template


def render_prompt(name: str, prompts_dir: str | Path | None = None, **fields: str) -> str:
    try:
        return load_prompt(name, prompts_dir).substitute(**fields).strip()
    except KeyError as exc:
        raise InvalidInput(f"prompt {name!r} is missing placeholder value {exc}") from exc


def system_prompt(prompts_dir: str | Path | None = None) -> str:
    return load_prompt("system", prompts_dir).template.strip()


def format_figures(figures: tuple[FigureText, ...] | list[FigureText]) -> str:
    if not figures:
        return "(no figures)"
    blocks = []
    for f in figures:
        ocr = f.ocr_text.strip() or "(no OCR text)"
        blocks.append(f"{f.figure_label}: {ocr}")
    return "\n".join(blocks)


def format_claims(claims: ClaimSet) -> str:
    return claims.numbered_text()
