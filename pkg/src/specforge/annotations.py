"""Expert-evaluation data model and agreement statistics.

Annotation records carry five 1-5 category scores plus a preference rank
over the competing disclosures for the same source. On top of them:
per-method score aggregation, ranking-based win/loss/tie rates, Kendall's
tau-b, and weighted Cohen's kappa.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .errors import DegenerateInput, EmptyGroup, InvalidInput, NoOverlap

CATEGORIES = ("LanguageStyle", "Elaboration", "Diversity", "FactualAccuracy", "Coverage")
SCORE_MIN, SCORE_MAX = 1, 5


@dataclass(frozen=True)
class AnnotationRecord:
    """One expert's scores and preference rank for one (source, method) pair."""

    annotator_id: str
    source_id: str
    method_id: str
    scores: Mapping[str, int]
    rank: int
    comments: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", dict(self.scores))
        if not self.annotator_id or not self.source_id or not self.method_id:
            raise InvalidInput("annotator_id, source_id, and method_id must be non-empty")
        if set(self.scores) != set(CATEGORIES):
            raise InvalidInput(
                f"scores must cover exactly {CATEGORIES}, got {sorted(self.scores)}"
            )
        for category, value in self.scores.items():
            if isinstance(value, bool) or not isinstance(value, int) or not SCORE_MIN <= value <= SCORE_MAX:
                raise InvalidInput(f"{category} score must be an integer in [1, 5], got {value!r}")
        if isinstance(self.rank, bool) or not isinstance(self.rank, int) or self.rank < 1:
            raise InvalidInput(f"rank must be a positive integer, got {self.rank!r}")

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "source_id": self.source_id,
            "method_id": self.method_id,
            "scores": dict(self.scores),
            "rank": self.rank,
            "comments": self.comments,
        }


@dataclass(frozen=True)
class AgreementResult:
    kendall_tau: float
    p_value: float
    weighted_kappa: float
    n_items: int

    def __post_init__(self) -> None:
        if not -1.0 <= self.kendall_tau <= 1.0:
            raise InvalidInput(f"kendall_tau out of [-1, 1]: {self.kendall_tau}")
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidInput(f"p_value out of [0, 1]: {self.p_value}")
        if not -1.0 <= self.weighted_kappa <= 1.0:
            raise InvalidInput(f"weighted_kappa out of [-1, 1]: {self.weighted_kappa}")
        if self.n_items < 1:
            raise InvalidInput("n_items must be positive")


def validate_rank_groups(records: Sequence[AnnotationRecord], allow_tied_ranks: bool = False) -> None:
    """Ranks within each (annotator, source) group must be a permutation of 1..k.

    ``allow_tied_ranks`` relaxes the check to "every rank in [1, k]" for
    datasets where experts could mark disclosures equally useful.
    """
    groups: dict[tuple[str, str], list[int]] = {}
    for r in records:
        groups.setdefault((r.annotator_id, r.source_id), []).append(r.rank)
    for (annotator, source), ranks in groups.items():
        k = len(ranks)
        if allow_tied_ranks:
            if any(not 1 <= rank <= k for rank in ranks):
                raise InvalidInput(
                    f"ranks for annotator {annotator!r} on {source!r} must lie in 1..{k}"
                )
        elif sorted(ranks) != list(range(1, k + 1)):
            raise InvalidInput(
                f"ranks for annotator {annotator!r} on {source!r} must be a "
                f"permutation of 1..{k}, got {sorted(ranks)}"
            )


def load_annotations(
    path: str | Path, allow_tied_ranks: bool = False
) -> list[AnnotationRecord]:
    """Read JSON Lines annotation records; reject the file on the first bad line."""
    path = Path(path)
    records: list[AnnotationRecord] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            records.append(
                AnnotationRecord(
                    annotator_id=str(data["annotator_id"]),
                    source_id=str(data["source_id"]),
                    method_id=str(data["method_id"]),
                    scores=data["scores"],
                    rank=data["rank"],
                    comments=str(data.get("comments", "")),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, InvalidInput) as exc:
            raise InvalidInput(f"{path}:{lineno}: malformed annotation record: {exc}") from exc
    seen = set()
    for r in records:
        key = (r.annotator_id, r.source_id, r.method_id)
        if key in seen:
            raise InvalidInput(f"{path}: duplicate record for {key}")
        seen.add(key)
    validate_rank_groups(records, allow_tied_ranks)
    return records


def write_annotations(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    """Write records in the same JSON Lines layout that load_annotations reads."""
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def aggregate_scores(
    records: Sequence[AnnotationRecord], methods: Sequence[str] | None = None
) -> dict[str, dict[str, tuple[float, float]]]:
    """Sample mean and standard deviation per (method, category).

    Returns {method: {category: (mean, sd)}}; singleton groups report sd 0.
    Raises EmptyGroup when there are no records, or when an explicitly
    requested method has none.
    """
    if not records:
        raise EmptyGroup("no annotation records to aggregate")
    by_method: dict[str, list[AnnotationRecord]] = {}
    for r in records:
        by_method.setdefault(r.method_id, []).append(r)
    wanted = list(methods) if methods is not None else sorted(by_method)
    table: dict[str, dict[str, tuple[float, float]]] = {}
    for method in wanted:
        group = by_method.get(method)
        if not group:
            raise EmptyGroup(f"no records for method {method!r}")
        table[method] = {}
        for category in CATEGORIES:
            values = np.asarray([r.scores[category] for r in group], dtype=float)
            sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            table[method][category] = (float(values.mean()), sd)
    return table


@dataclass(frozen=True)
class WinLossTie:
    """Exact pairwise rates; percentages are Fractions so they sum to 100 exactly."""

    win: Fraction
    loss: Fraction
    tie: Fraction
    comparisons: int

    def as_floats(self) -> tuple[float, float, float]:
        return float(self.win), float(self.loss), float(self.tie)


def win_loss_tie(
    records: Sequence[AnnotationRecord], method_a: str, method_b: str
) -> WinLossTie:
    """Rank-based win/loss/tie rates of method_a against method_b.

    One comparison per (annotator, source) that ranked both methods; a wins
    when its rank is smaller (1 = best). Raises NoOverlap when no comparison
    exists.
    """
    ranks: dict[tuple[str, str], dict[str, int]] = {}
    for r in records:
        if r.method_id in (method_a, method_b):
            ranks.setdefault((r.annotator_id, r.source_id), {})[r.method_id] = r.rank
    wins = losses = ties = 0
    for pair in ranks.values():
        if method_a not in pair or method_b not in pair:
            continue
        if pair[method_a] < pair[method_b]:
            wins += 1
        elif pair[method_a] > pair[method_b]:
            losses += 1
        else:
            ties += 1
    total = wins + losses + ties
    if total == 0:
        raise NoOverlap(f"no shared rankings for {method_a!r} vs {method_b!r}")
    return WinLossTie(
        win=Fraction(100 * wins, total),
        loss=Fraction(100 * losses, total),
        tie=Fraction(100 * ties, total),
        comparisons=total,
    )


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Tie-corrected Kendall's tau-b with a normal-approximation p-value."""
    if len(x) != len(y):
        raise InvalidInput(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise InvalidInput("kendall_tau needs at least two observations")
    if len(set(x)) < 2 or len(set(y)) < 2:
        raise DegenerateInput("tau is undefined when either list is constant")
    if len(x) == 2:
        # scipy's tie-corrected variance is 0/0 at n=2; with two distinct
        # values there are no ties, so use the plain normal approximation.
        tau = 1.0 if (x[1] - x[0]) * (y[1] - y[0]) > 0 else -1.0
        n = 2
        z = 3 * tau * math.sqrt(n * (n - 1)) / math.sqrt(2 * (2 * n + 5))
        p_value = 2 * (1 - scipy_stats.norm.cdf(abs(z)))
        return tau, float(p_value)
    result = scipy_stats.kendalltau(x, y, variant="b", method="asymptotic")
    tau, p_value = float(result.statistic), float(result.pvalue)
    if not np.isfinite(tau):
        raise DegenerateInput("tau is undefined for this input")
    return tau, min(max(p_value, 0.0), 1.0)


def weighted_kappa(
    x: Sequence[int],
    y: Sequence[int],
    weighting: str = "linear",
    categories: Sequence[int] | None = None,
) -> float:
    """Weighted Cohen's kappa: 1 - (sum w*O) / (sum w*E).

    Disagreement weights are |i-j| (linear) or (i-j)^2 (quadratic) over
    category indices; the expected matrix comes from the raters' marginals.
    Symmetric in the two raters. Raises DegenerateInput when the expected
    disagreement is zero.
    """
    if len(x) != len(y):
        raise InvalidInput(f"length mismatch: {len(x)} vs {len(y)}")
    if not x:
        raise InvalidInput("weighted_kappa needs at least one observation")
    if weighting not in ("linear", "quadratic"):
        raise InvalidInput(f"weighting must be linear or quadratic, got {weighting!r}")
    cats = sorted(set(x) | set(y)) if categories is None else list(categories)
    index = {c: i for i, c in enumerate(cats)}
    k = len(cats)
    observed = np.zeros((k, k), dtype=float)
    for a, b in zip(x, y):
        if a not in index or b not in index:
            raise InvalidInput(f"score outside categories {cats}: {(a, b)}")
        observed[index[a], index[b]] += 1
    n = observed.sum()
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    idx = np.arange(k, dtype=float)
    diff = np.abs(idx[:, None] - idx[None, :])
    weights = diff if weighting == "linear" else diff**2
    denominator = float((weights * expected).sum())
    if denominator == 0.0:
        raise DegenerateInput("expected disagreement is zero; kappa undefined")
    return float(1.0 - (weights * observed).sum() / denominator)


def paired_scores(
    records: Sequence[AnnotationRecord], annotator_a: str, annotator_b: str
) -> tuple[list[int], list[int], int]:
    """Category scores for the (source, method) items both annotators rated.

    Returns the two aligned score vectors (one entry per item per category,
    deterministic order) and the number of shared items.
    """
    def keyed(annotator: str) -> dict[tuple[str, str], AnnotationRecord]:
        return {
            (r.source_id, r.method_id): r
            for r in records
            if r.annotator_id == annotator
        }

    a_records = keyed(annotator_a)
    b_records = keyed(annotator_b)
    shared = sorted(set(a_records) & set(b_records))
    xs: list[int] = []
    ys: list[int] = []
    for key in shared:
        for category in CATEGORIES:
            xs.append(a_records[key].scores[category])
            ys.append(b_records[key].scores[category])
    return xs, ys, len(shared)


def pairwise_agreement(
    records: Sequence[AnnotationRecord],
    annotator_a: str,
    annotator_b: str,
    weighting: str = "linear",
) -> AgreementResult:
    """Inter-annotator agreement over the two annotators' overlapping ratings."""
    xs, ys, shared = paired_scores(records, annotator_a, annotator_b)
    if shared == 0 or len(xs) < 2:
        raise DegenerateInput(
            f"insufficient overlap between {annotator_a!r} and {annotator_b!r}"
        )
    tau, p_value = kendall_tau(xs, ys)
    kappa = weighted_kappa(xs, ys, weighting=weighting, categories=range(SCORE_MIN, SCORE_MAX + 1))
    return AgreementResult(kendall_tau=tau, p_value=p_value, weighted_kappa=kappa, n_items=len(xs))


def score_ttest(
    records: Sequence[AnnotationRecord], method_a: str, method_b: str, category: str
) -> tuple[float, float]:
    """Optional utility: independent two-sample t-test on one category's scores."""
    if category not in CATEGORIES:
        raise InvalidInput(f"unknown category {category!r}")
    a = [r.scores[category] for r in records if r.method_id == method_a]
    b = [r.scores[category] for r in records if r.method_id == method_b]
    if len(a) < 2 or len(b) < 2:
        raise DegenerateInput("t-test needs at least two scores per method")
    result = scipy_stats.ttest_ind(a, b)
    return float(result.statistic), float(result.pvalue)
