"""Append-only run logs: model calls, outgoing search queries, and warnings.

Each log is thread-safe and ordered by completion. Timestamps are produced by
an injectable clock so tests and reproducibility checks can pin them.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Generic, TypeVar

logger = logging.getLogger("specforge")

Clock = Callable[[], str]


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass(frozen=True)
class CallEntry:
    """One completed gateway request. Prompts are logged verbatim, never mutated."""

    tag: str
    system_prompt: str
    user_prompt: str
    response: str
    timestamp: str


@dataclass(frozen=True)
class QueryEntry:
    """One outgoing search query (post privacy guard)."""

    concept: str
    qualifier: str
    query_text: str
    timestamp: str


@dataclass(frozen=True)
class RunEvent:
    level: str
    message: str
    timestamp: str


E = TypeVar("E")


class _AppendLog(Generic[E]):
    def __init__(self, clock: Clock = utc_now_iso) -> None:
        self._entries: list[E] = []
        self._lock = threading.Lock()
        self._clock = clock

    def _append(self, entry: E) -> None:
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> tuple[E, ...]:
        with self._lock:
            return tuple(self._entries)

    def __len__(self) -> int:
        return len(self.entries)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(e), sort_keys=True) + "\n" for e in self.entries)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


class CallLog(_AppendLog[CallEntry]):
    """Ordered record of every completed chat/embedding request."""

    def record(self, tag: str, system_prompt: str, user_prompt: str, response: str) -> None:
        self._append(
            CallEntry(
                tag=tag,
                system_prompt=system_prompt,
                user_prompt=user_prompt,
                response=response,
                timestamp=self._clock(),
            )
        )

    def tags(self) -> tuple[str, ...]:
        return tuple(e.tag for e in self.entries)


class QueryLog(_AppendLog[QueryEntry]):
    """Audit trail of every query sent to a search provider."""

    def record(self, concept: str, qualifier: str, query_text: str) -> None:
        self._append(
            QueryEntry(
                concept=concept,
                qualifier=qualifier,
                query_text=query_text,
                timestamp=self._clock(),
            )
        )


class RunLog(_AppendLog[RunEvent]):
    """Pipeline events; warnings here are part of the degradation contracts."""

    def info(self, message: str) -> None:
        logger.info(message)
        self._append(RunEvent(level="info", message=message, timestamp=self._clock()))

    def warn(self, message: str) -> None:
        logger.warning(message)
        self._append(RunEvent(level="warning", message=message, timestamp=self._clock()))

    @property
    def warnings(self) -> tuple[str, ...]:
        return tuple(e.message for e in self.entries if e.level == "warning")
