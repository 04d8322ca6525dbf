"""specforge: draft patent specifications from claims and evaluate disclosures.

The pipeline builds an outline (template items, then retrieval-enriched
technical items), drafts each item, and merges everything into a sequentially
numbered specification. The evaluator scores any (generated, reference)
disclosure pair, and the annotations module computes expert-evaluation
statistics.
"""

from .domain import (
    Claim,
    ClaimSet,
    FigureText,
    InputDocument,
    ItemKind,
    Outline,
    OutlineItem,
    Paragraph,
    Section,
    SectionName,
    Specification,
    TokenStream,
    load_document,
    parse,
    render,
    renumber,
    tokenize,
)
from .evaluator import (
    EvaluationReport,
    EvaluatorConfig,
    ProfanityLexicon,
    diversity_difference,
    embedding_similarity,
    evaluate,
    ngram_diversity,
    profanity_count,
)
from .gateway import ChatRequest, EmbeddingVector, Gateway, OpenAIBackend, ScriptedBackend
from .generator import DraftSection, GeneratorConfig, draft_all
from .merger import InsertionDecision, assemble_template, merge_all, splice_technical
from .modes import ModeId, draft
from .orchestrator import OrchestratorConfig, build_template, enrich, extract_concepts, orchestrate
from .retrieval import (
    LocalCorpusProvider,
    RetrievedDoc,
    Retriever,
    SearchQuery,
    WebSearchProvider,
    guard_query,
)

__version__ = "0.1.0"
