"""Top-1 document retrieval with a privacy guard on every outgoing query.

Confidential claim text must never reach a search provider. The guard rejects
any query sharing an 8-gram (on canonical tokens) with any claim, a threshold
long enough that ordinary technical phrases pass and short enough that no
claim sentence leaks. Retrieval is enrichment, not a hard dependency: an
empty result is reported, never fatal.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from .domain import ClaimSet, tokenize
from .errors import InvalidInput, NoResults, PrivacyViolation
from .logs import Clock, QueryLog, utc_now_iso

PRIVACY_NGRAM = 8


@dataclass(frozen=True)
class SearchQuery:
    """A concept phrase plus an optional domain qualifier.

    Built only from outline item titles and briefs, never from claim text;
    :func:`guard_query` enforces this before anything leaves the machine.
    """

    concept: str
    qualifier: str = ""

    def __post_init__(self) -> None:
        if not self.concept.strip():
            raise InvalidInput("search query concept is empty")

    def text(self) -> str:
        return f"{self.concept} {self.qualifier}".strip()


@dataclass(frozen=True)
class RetrievedDoc:
    url_or_path: str
    snippet: str
    fetched_at: str

    def __post_init__(self) -> None:
        if not self.snippet.strip():
            raise InvalidInput("retrieved document snippet is empty")


def claim_ngrams(claims: ClaimSet, n: int = PRIVACY_NGRAM) -> set[tuple[str, ...]]:
    """All n-grams present in any single claim's token stream."""
    grams: set[tuple[str, ...]] = set()
    for claim in claims.claims:
        grams.update(tokenize(claim.text).ngrams(n))
    return grams


def guard_query(query: SearchQuery, claims: ClaimSet) -> SearchQuery:
    """Pass the query through unchanged iff it shares no 8-gram with claim text.

    Queries shorter than 8 tokens cannot contain an 8-gram and always pass.
    Raises PrivacyViolation otherwise; the caller must regenerate the concept
    phrase or skip retrieval.
    """
    query_tokens = tokenize(query.text())
    if len(query_tokens) < PRIVACY_NGRAM:
        return query
    forbidden = claim_ngrams(claims)
    for gram in query_tokens.ngrams(PRIVACY_NGRAM):
        if gram in forbidden:
            raise PrivacyViolation(
                f"query shares claim text: ...{' '.join(gram)}..."
            )
    return query


class SearchProvider(Protocol):
    def top_document(self, query: SearchQuery) -> RetrievedDoc | None: ...


class LocalCorpusProvider:
    """Offline provider over a directory of plain-text documents.

    Ranking is unique-token overlap with the query; ties break by document
    name order, so results are deterministic. Documents with zero overlap
    never match.
    """

    def __init__(self, directory: str | Path, snippet_chars: int = 2000, clock: Clock = utc_now_iso) -> None:
        self.directory = Path(directory)
        self.snippet_chars = snippet_chars
        self._clock = clock
        self._docs: list[tuple[str, str, set[str]]] = []
        if self.directory.is_dir():
            for path in sorted(self.directory.glob("*.txt")):
                text = path.read_text(encoding="utf-8")
                self._docs.append((str(path), text, set(tokenize(text))))

    def top_document(self, query: SearchQuery) -> RetrievedDoc | None:
        query_tokens = set(tokenize(query.text()))
        best: tuple[int, str, str] | None = None
        for path, text, doc_tokens in self._docs:
            score = len(query_tokens & doc_tokens)
            if score > 0 and (best is None or score > best[0]):
                best = (score, path, text)
        if best is None:
            return None
        snippet = best[2][: self.snippet_chars].strip()
        return RetrievedDoc(url_or_path=best[1], snippet=snippet, fetched_at=self._clock())


class WebSearchProvider:
    """HTTP search client: GET endpoint?q=...&count=1 with a bearer key.

    Expects a JSON body of the shape {"results": [{"url": ..., "snippet": ...}]}.
    Transport problems surface as an empty result (retrieval is best-effort).
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        timeout: float = 30.0,
        min_interval_seconds: float = 0.0,
        client: httpx.Client | None = None,
        clock: Clock = utc_now_iso,
    ) -> None:
        self.endpoint = endpoint
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout)
        self._clock = clock
        self._min_interval = min_interval_seconds
        self._last_call = 0.0
        self._lock = threading.Lock()

    def _throttle(self) -> None:
        if not self._min_interval:
            return
        with self._lock:
            wait = self._last_call + self._min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()

    def top_document(self, query: SearchQuery) -> RetrievedDoc | None:
        self._throttle()
        try:
            response = self._client.get(
                self.endpoint, params={"q": query.text(), "count": 1}, headers=self._headers
            )
            response.raise_for_status()
            results = response.json().get("results", [])
        except (httpx.HTTPError, ValueError):
            return None
        if not results:
            return None
        first = results[0]
        snippet = str(first.get("snippet", "")).strip()
        if not snippet:
            return None
        return RetrievedDoc(
            url_or_path=str(first.get("url", "")),
            snippet=snippet,
            fetched_at=self._clock(),
        )


class Retriever:
    """One provider plus the append-only audit log of outgoing queries."""

    def __init__(self, provider: SearchProvider, query_log: QueryLog | None = None, clock: Clock = utc_now_iso) -> None:
        self.provider = provider
        self.query_log = query_log if query_log is not None else QueryLog(clock=clock)

    def search(self, query: SearchQuery) -> RetrievedDoc:
        """Send a guarded query to the provider; returns at most one document.

        Callers must run :func:`guard_query` first; every query reaching this
        method is logged as outgoing. Raises NoResults when the provider has
        nothing, which callers treat as a warning, not a failure.
        """
        self.query_log.record(query.concept, query.qualifier, query.text())
        doc = self.provider.top_document(query)
        if doc is None:
            raise NoResults(f"no document for query {query.text()!r}")
        return doc

    def fetch(self, query: SearchQuery, claims: ClaimSet) -> RetrievedDoc:
        """Guard then search, in one call."""
        return self.search(guard_query(query, claims))
