"""Automatic disclosure metrics: n-gram diversity, profanity count, similarity.

All three run on the rendered plain text of a specification; the canonical
tokenizer strips paragraph tags, so the metrics are insensitive to
numbering. Metric failures never sink a report: unavailable fields are
marked and the rest are filled in.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import Specification, TokenStream, render, tokenize
from .errors import (
    BackendUnavailable,
    DimensionMismatch,
    InvalidInput,
    ZeroVector,
)
from .gateway import Gateway

NGD_MAX_N = 10
EMBED_SEQUENCE_LIMIT = 512
# Safety margin under the 512-token sequence cap across backend tokenizers.
DEFAULT_CHUNK_TOKENS = 400

DEFAULT_PROFANITY_PHRASES = (
    "crucial",
    "critical",
    "prior art",
    "necessary aspect",
    "necessary component",
)

_INTEGER = re.compile(r"^\d+$")


@dataclass(frozen=True)
class ProfanityLexicon:
    """Scope-limiting phrases plus the "claim <integer>" reference rule.

    Matching happens on canonical tokens, so "crucially" never matches
    "crucial". ``plural_claims`` extends the reference rule to "claims <n>".
    """

    phrases: tuple[str, ...] = DEFAULT_PROFANITY_PHRASES
    claim_reference_rule: bool = True
    plural_claims: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "phrases", tuple(p.lower() for p in self.phrases))
        if not all(p.strip() for p in self.phrases):
            raise InvalidInput("lexicon contains an empty phrase")

    @classmethod
    def from_file(cls, path: str | Path, claim_reference_rule: bool = True) -> "ProfanityLexicon":
        """One phrase per line; blank lines and '#' comments ignored."""
        phrases = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                phrases.append(line.lower())
        if not phrases:
            raise InvalidInput(f"lexicon file {path} has no phrases")
        return cls(phrases=tuple(phrases), claim_reference_rule=claim_reference_rule)


@dataclass(frozen=True)
class EvaluatorConfig:
    chunk_tokens: int = DEFAULT_CHUNK_TOKENS
    lexicon: ProfanityLexicon = field(default_factory=ProfanityLexicon)

    def __post_init__(self) -> None:
        if not 1 <= self.chunk_tokens <= EMBED_SEQUENCE_LIMIT:
            raise InvalidInput(
                f"chunk_tokens must be in [1, {EMBED_SEQUENCE_LIMIT}], got {self.chunk_tokens}"
            )


@dataclass(frozen=True)
class EvaluationReport:
    """Per-disclosure metric values; similarity is None when unavailable."""

    source_id: str
    similarity: float | None
    profanity_count: int
    ngd_generated: float
    ngd_reference: float
    diversity_difference: float
    similarity_error: str = ""

    def __post_init__(self) -> None:
        if self.similarity is not None and not -1.0 <= self.similarity <= 1.0:
            raise InvalidInput(f"similarity out of [-1, 1]: {self.similarity}")
        if self.profanity_count < 0:
            raise InvalidInput("profanity_count must be non-negative")
        for value in (self.ngd_generated, self.ngd_reference):
            if not 0.0 <= value <= NGD_MAX_N:
                raise InvalidInput(f"n-gram diversity out of [0, {NGD_MAX_N}]: {value}")
        if not math.isclose(
            self.diversity_difference,
            abs(self.ngd_generated - self.ngd_reference),
            rel_tol=0.0,
            abs_tol=1e-12,
        ):
            raise InvalidInput("diversity_difference must equal |ngd_generated - ngd_reference|")

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "similarity": self.similarity,
            "profanity_count": self.profanity_count,
            "ngd_generated": self.ngd_generated,
            "ngd_reference": self.ngd_reference,
            "diversity_difference": self.diversity_difference,
            "similarity_error": self.similarity_error,
        }


def ngram_diversity(doc: TokenStream) -> float:
    """Sum over n = 1..10 of (unique n-grams / total n-grams).

    Orders with no n-grams (documents shorter than n) contribute 0, so the
    value lies in [0, 10]; an empty stream scores 0.
    """
    tokens = doc.tokens
    total_score = 0.0
    for n in range(1, NGD_MAX_N + 1):
        total = len(tokens) - n + 1
        if total <= 0:
            break
        unique = len({tokens[i : i + n] for i in range(total)})
        total_score += unique / total
    return total_score


def diversity_difference(generated: TokenStream, reference: TokenStream) -> float:
    """Absolute n-gram diversity gap between two documents; symmetric."""
    return abs(ngram_diversity(generated) - ngram_diversity(reference))


def profanity_count(doc: str, lexicon: ProfanityLexicon = ProfanityLexicon()) -> int:
    """Count non-overlapping profanity occurrences on canonical tokens.

    Multi-token phrases match consecutive tokens; with the reference rule, a
    "claim"/"claims" token immediately followed by an integer token counts
    too. Scanning is left to right, longest match first.
    """
    tokens = tokenize(doc).tokens
    phrase_tuples = sorted(
        (tuple(tokenize(p).tokens) for p in lexicon.phrases), key=len, reverse=True
    )
    claim_words = ("claim", "claims") if lexicon.plural_claims else ("claim",)
    count = 0
    i = 0
    while i < len(tokens):
        matched = 0
        for phrase in phrase_tuples:
            if tokens[i : i + len(phrase)] == phrase:
                matched = len(phrase)
                break
        if (
            not matched
            and lexicon.claim_reference_rule
            and tokens[i] in claim_words
            and i + 1 < len(tokens)
            and _INTEGER.match(tokens[i + 1])
        ):
            matched = 2
        if matched:
            count += 1
            i += matched
        else:
            i += 1
    return count


def _chunk_texts(tokens: Sequence[str], chunk_tokens: int) -> list[str]:
    return [
        " ".join(tokens[i : i + chunk_tokens]) for i in range(0, len(tokens), chunk_tokens)
    ]


def pooled_embedding(text: str, gateway: Gateway, chunk_tokens: int) -> np.ndarray:
    """Chunk on canonical tokens, embed each chunk, mean-pool element-wise."""
    tokens = tokenize(text).tokens
    if not tokens:
        raise InvalidInput("document has no tokens to embed")
    vectors = [
        np.asarray(gateway.embed(chunk).values, dtype=float)
        for chunk in _chunk_texts(tokens, chunk_tokens)
    ]
    return np.mean(vectors, axis=0)


def embedding_similarity(
    generated: str,
    reference: str,
    gateway: Gateway,
    chunk_tokens: int = DEFAULT_CHUNK_TOKENS,
) -> float:
    """Cosine similarity of the two mean-pooled chunk-embedding vectors."""
    if not 1 <= chunk_tokens <= EMBED_SEQUENCE_LIMIT:
        raise InvalidInput(
            f"chunk_tokens must be in [1, {EMBED_SEQUENCE_LIMIT}], got {chunk_tokens}"
        )
    pooled_g = pooled_embedding(generated, gateway, chunk_tokens)
    pooled_r = pooled_embedding(reference, gateway, chunk_tokens)
    norm_g = float(np.linalg.norm(pooled_g))
    norm_r = float(np.linalg.norm(pooled_r))
    if norm_g == 0.0 or norm_r == 0.0:
        raise ZeroVector("a pooled embedding has zero norm; similarity undefined")
    return float(np.clip(np.dot(pooled_g, pooled_r) / (norm_g * norm_r), -1.0, 1.0))


def evaluate(
    generated: Specification,
    reference: Specification,
    cfg: EvaluatorConfig = EvaluatorConfig(),
    gateway: Gateway | None = None,
) -> EvaluationReport:
    """Run all metrics on a (generated, reference) pair of specifications.

    Embedding similarity needs a gateway; when it is missing or fails, the
    report marks the field unavailable instead of failing wholesale.
    """
    text_g = render(generated)
    text_r = render(reference)
    stream_g = tokenize(text_g)
    stream_r = tokenize(text_r)
    ngd_g = ngram_diversity(stream_g)
    ngd_r = ngram_diversity(stream_r)
    similarity: float | None = None
    error = ""
    if gateway is None:
        error = "no embedding backend configured"
    else:
        try:
            similarity = embedding_similarity(text_g, text_r, gateway, cfg.chunk_tokens)
        except (BackendUnavailable, ZeroVector, DimensionMismatch, InvalidInput) as exc:
            error = f"{type(exc).__name__}: {exc}"
    return EvaluationReport(
        source_id=generated.source_id,
        similarity=similarity,
        profanity_count=profanity_count(text_g, cfg.lexicon),
        ngd_generated=ngd_g,
        ngd_reference=ngd_r,
        diversity_difference=abs(ngd_g - ngd_r),
        similarity_error=error,
    )


def aggregate_reports(reports: Sequence[EvaluationReport]) -> dict[str, dict[str, float | int]]:
    """Mean and sample standard deviation per metric over a corpus of reports."""
    metrics: dict[str, list[float]] = {
        "similarity": [r.similarity for r in reports if r.similarity is not None],
        "profanity_count": [float(r.profanity_count) for r in reports],
        "ngd_generated": [r.ngd_generated for r in reports],
        "ngd_reference": [r.ngd_reference for r in reports],
        "diversity_difference": [r.diversity_difference for r in reports],
    }
    table: dict[str, dict[str, float | int]] = {}
    for name, values in metrics.items():
        if not values:
            table[name] = {"n": 0}
            continue
        arr = np.asarray(values, dtype=float)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        table[name] = {"mean": float(arr.mean()), "sd": sd, "n": len(arr)}
    return table
