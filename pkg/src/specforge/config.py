"""Run configuration: JSON file plus environment-variable overrides.

Secrets travel via SPECFORGE_API_KEY / SPECFORGE_SEARCH_KEY (never flags);
the config file may hold keys for local testing but the environment wins.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import InvalidInput
from .evaluator import EvaluatorConfig, ProfanityLexicon
from .gateway import Gateway, OpenAIBackend, ScriptedBackend
from .generator import GeneratorConfig
from .logs import CallLog, QueryLog
from .modes import ModeId
from .orchestrator import OrchestratorConfig
from .retrieval import LocalCorpusProvider, Retriever, WebSearchProvider

API_KEY_ENV = "SPECFORGE_API_KEY"
SEARCH_KEY_ENV = "SPECFORGE_SEARCH_KEY"


@dataclass(frozen=True)
class BackendSettings:
    kind: str = "mock"  # "openai" or "mock"
    base_url: str = ""
    model: str = ""
    embedding_model: str = ""
    embedding_dimension: int = 8
    api_key: str = ""
    max_retries: int = 3
    backoff_seconds: float = 0.25
    timeout: float = 60.0
    max_concurrency: int = 0  # 0 = unlimited in-flight requests
    script: str = ""  # mock only: path to a tag -> responses JSON file
    repeat_last: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("openai", "mock"):
            raise InvalidInput(f"backend kind must be openai or mock, got {self.kind!r}")
        if self.kind == "openai" and not self.base_url:
            raise InvalidInput("openai backend requires base_url")


@dataclass(frozen=True)
class RetrievalSettings:
    provider: str = "none"  # "none", "local", or "web"
    local_corpus: str = ""
    endpoint: str = ""
    api_key: str = ""
    min_interval_seconds: float = 0.0

    def __post_init__(self) -> None:
        if self.provider not in ("none", "local", "web"):
            raise InvalidInput(f"retrieval provider must be none/local/web, got {self.provider!r}")


@dataclass(frozen=True)
class RunConfig:
    backend: BackendSettings = field(default_factory=BackendSettings)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    mode: ModeId = ModeId.AUTOSPEC_FULL
    orchestrator: OrchestratorConfig = field(default_factory=OrchestratorConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    chunk_tokens: int = 400
    lexicon_path: str = ""
    prompts_dir: str = ""
    concurrency: int = 1
    seed_label: str = "run"

    def evaluator_config(self) -> EvaluatorConfig:
        lexicon = (
            ProfanityLexicon.from_file(self.lexicon_path)
            if self.lexicon_path
            else ProfanityLexicon()
        )
        return EvaluatorConfig(chunk_tokens=self.chunk_tokens, lexicon=lexicon)


def _settings(cls, data: Mapping, what: str):
    try:
        return cls(**data)
    except TypeError as exc:
        raise InvalidInput(f"bad {what} settings: {exc}") from exc


def load_config(path: str | Path | None, env: Mapping[str, str] | None = None) -> RunConfig:
    """Load a RunConfig from JSON; None yields the defaults. Env keys override."""
    env = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    backend_data = dict(data.get("backend", {}))
    if env.get(API_KEY_ENV):
        backend_data["api_key"] = env[API_KEY_ENV]
    retrieval_data = dict(data.get("retrieval", {}))
    if env.get(SEARCH_KEY_ENV):
        retrieval_data["api_key"] = env[SEARCH_KEY_ENV]
    prompts_dir = data.get("prompts_dir", "") or ""
    orch_data = dict(data.get("orchestrator", {}))
    gen_data = dict(data.get("generator", {}))
    if prompts_dir:
        orch_data.setdefault("prompts_dir", prompts_dir)
        gen_data.setdefault("prompts_dir", prompts_dir)
    try:
        mode = ModeId(data.get("mode", ModeId.AUTOSPEC_FULL.value))
    except ValueError as exc:
        raise InvalidInput(f"unknown mode {data.get('mode')!r}") from exc
    evaluator_data = data.get("evaluator", {})
    return RunConfig(
        backend=_settings(BackendSettings, backend_data, "backend"),
        retrieval=_settings(RetrievalSettings, retrieval_data, "retrieval"),
        mode=mode,
        orchestrator=_settings(OrchestratorConfig, orch_data, "orchestrator"),
        generator=_settings(GeneratorConfig, gen_data, "generator"),
        chunk_tokens=int(evaluator_data.get("chunk_tokens", 400)),
        lexicon_path=str(evaluator_data.get("lexicon", "") or ""),
        prompts_dir=prompts_dir,
        concurrency=int(data.get("concurrency", 1)),
        seed_label=str(data.get("seed_label", "run")),
    )


def _load_script(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"cannot read mock script {path}: {exc}") from exc
    if not isinstance(data.get("responses"), dict):
        raise InvalidInput(f"mock script {path} needs a 'responses' object")
    return data


def make_gateway(cfg: RunConfig, call_log: CallLog | None = None) -> Gateway:
    """Build a fresh gateway (own call log) for one document run."""
    settings = cfg.backend
    if settings.kind == "mock":
        responses: dict = {}
        repeat_last = settings.repeat_last
        if settings.script:
            script = _load_script(settings.script)
            responses = script["responses"]
            repeat_last = bool(script.get("repeat_last", repeat_last))
        backend = ScriptedBackend(
            responses=responses,
            embedding_dimension=settings.embedding_dimension,
            repeat_last=repeat_last,
        )
    else:
        backend = OpenAIBackend(
            base_url=settings.base_url,
            model=settings.model,
            embedding_model=settings.embedding_model,
            embedding_dimension=settings.embedding_dimension,
            api_key=settings.api_key,
            timeout=settings.timeout,
        )
    return Gateway(
        backend,
        call_log=call_log,
        max_retries=settings.max_retries,
        backoff_seconds=settings.backoff_seconds,
        max_concurrency=settings.max_concurrency or None,
    )


def make_retriever(
    cfg: RunConfig,
    query_log: QueryLog | None = None,
    local_corpus_override: str | None = None,
) -> Retriever | None:
    settings = cfg.retrieval
    corpus = local_corpus_override or settings.local_corpus
    if local_corpus_override:
        provider = LocalCorpusProvider(corpus)
    elif settings.provider == "none":
        return None
    elif settings.provider == "local":
        if not corpus:
            raise InvalidInput("local retrieval provider needs a corpus directory")
        provider = LocalCorpusProvider(corpus)
    else:
        if not settings.endpoint:
            raise InvalidInput("web retrieval provider needs an endpoint")
        provider = WebSearchProvider(
            endpoint=settings.endpoint,
            api_key=settings.api_key,
            min_interval_seconds=settings.min_interval_seconds,
        )
    return Retriever(provider, query_log=query_log)
