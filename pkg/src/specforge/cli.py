"""Command-line entry point: draft, evaluate, and stats.

Every draft run writes a per-document artifact directory holding the
outline, drafts, insertion decisions, query log, and call log, because
patent drafting demands an auditable local trail. Timestamps appear only
inside log files, so re-running on identical inputs with the mock backend
reproduces the other artifacts byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import annotations as ann
from .config import RunConfig, load_config, make_gateway, make_retriever
from .domain import load_document, parse, render, specification_to_dict
from .errors import DegenerateInput, InvalidInput, NoOverlap, SpecForgeError
from .evaluator import EvaluatorConfig, ProfanityLexicon, aggregate_reports, evaluate
from .logs import QueryLog, RunLog
from .modes import ModeId, draft as draft_spec


def _write_json(path: Path, data: object) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# draft


def _draft_one(doc_path: Path, cfg: RunConfig, mode: ModeId, out_dir: Path,
               local_corpus: str | None) -> tuple[str, str]:
    """Draft one document; returns (source_id, "ok" | error text)."""
    doc = load_document(doc_path)
    run_dir = out_dir / doc.source_id
    run_dir.mkdir(parents=True, exist_ok=True)
    run_log = RunLog()
    query_log = QueryLog()
    gateway = make_gateway(cfg)
    retriever = make_retriever(cfg, query_log=query_log, local_corpus_override=local_corpus)
    decisions: list[dict] = []
    artifacts: dict = {}
    try:
        spec = draft_spec(
            mode,
            doc,
            gateway,
            retriever,
            orch_cfg=cfg.orchestrator,
            gen_cfg=cfg.generator,
            run_log=run_log,
            decisions=decisions,
            artifacts=artifacts,
        )
        (run_dir / "specification.txt").write_text(render(spec), encoding="utf-8")
        _write_json(run_dir / "specification.json", specification_to_dict(spec))
        status = "ok"
    except SpecForgeError as exc:
        run_log.warn(f"document failed: {type(exc).__name__}: {exc}")
        status = f"{type(exc).__name__}: {exc}"
    if "outline" in artifacts:
        _write_json(run_dir / "outline.json", artifacts["outline"])
    if "drafts" in artifacts:
        _write_json(run_dir / "drafts.json", artifacts["drafts"])
    _write_json(run_dir / "decisions.json", decisions)
    gateway.call_log.write(run_dir / "calls.jsonl")
    query_log.write(run_dir / "queries.jsonl")
    run_log.write(run_dir / "run.jsonl")
    return doc.source_id, status


def cmd_draft(args: argparse.Namespace) -> int:
    if not args.config:
        print("draft requires --config (backend settings)", file=sys.stderr)
        return 2
    cfg = load_config(args.config)
    mode = ModeId(args.mode) if args.mode else cfg.mode
    if args.template_only:
        mode = ModeId.AUTOSPEC_TEMPLATE
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = [Path(p) for p in args.inputs]
    results: dict[str, str] = {}

    def run(path: Path) -> None:
        try:
            source_id, status = _draft_one(path, cfg, mode, out_dir, args.local_corpus)
        except (SpecForgeError, OSError) as exc:
            source_id, status = path.stem, f"{type(exc).__name__}: {exc}"
        results[source_id] = status

    if cfg.concurrency > 1:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            list(pool.map(run, inputs))
    else:
        for path in inputs:
            run(path)
    summary = {
        "mode": mode.value,
        "seed_label": cfg.seed_label,
        "documents": dict(sorted(results.items())),
    }
    _write_json(out_dir / "summary.json", summary)
    failed = [s for s, status in results.items() if status != "ok"]
    for source_id in sorted(results):
        print(f"{source_id}: {results[source_id]}")
    if failed:
        print(f"{len(failed)}/{len(results)} documents failed", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    eval_cfg = cfg.evaluator_config()
    if args.chunk_tokens:
        eval_cfg = EvaluatorConfig(chunk_tokens=args.chunk_tokens, lexicon=eval_cfg.lexicon)
    if args.lexicon:
        eval_cfg = EvaluatorConfig(
            chunk_tokens=eval_cfg.chunk_tokens, lexicon=ProfanityLexicon.from_file(args.lexicon)
        )
    gateway = make_gateway(cfg) if args.config else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    generated_dir = Path(args.generated)
    reports = []
    for path in args.inputs:
        doc = load_document(path)
        if doc.gold_specification is None:
            print(f"warning: {doc.source_id}: no gold specification; pair skipped", file=sys.stderr)
            continue
        generated_path = generated_dir / f"{doc.source_id}.txt"
        if not generated_path.is_file():
            print(
                f"warning: {doc.source_id}: no generated file {generated_path}; pair skipped",
                file=sys.stderr,
            )
            continue
        generated = parse(generated_path.read_text(encoding="utf-8"), source_id=doc.source_id)
        report = evaluate(generated, doc.gold_specification, eval_cfg, gateway)
        _write_json(out_dir / f"{doc.source_id}.report.json", report.to_dict())
        reports.append(report)
    if not reports:
        print("no valid (generated, reference) pairs", file=sys.stderr)
        _write_json(out_dir / "aggregate.json", {})
        return 1
    aggregate = aggregate_reports(reports)
    _write_json(out_dir / "aggregate.json", aggregate)
    print(f"{'metric':<22}{'mean':>10}{'sd':>10}{'n':>6}")
    for metric, cells in aggregate.items():
        if cells.get("n"):
            print(f"{metric:<22}{cells['mean']:>10.4f}{cells['sd']:>10.4f}{cells['n']:>6}")
        else:
            print(f"{metric:<22}{'n/a':>10}{'n/a':>10}{0:>6}")
    return 0


# ---------------------------------------------------------------------------
# stats


def cmd_stats(args: argparse.Namespace) -> int:
    records: list[ann.AnnotationRecord] = []
    try:
        for path in args.annotations:
            records.extend(ann.load_annotations(path, allow_tied_ranks=args.allow_tied_ranks))
        ann.validate_rank_groups(records, allow_tied_ranks=args.allow_tied_ranks)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not records:
        print("no annotation records", file=sys.stderr)
        return 1
    output: dict = {}

    table = ann.aggregate_scores(records)
    output["scores"] = {
        method: {cat: {"mean": mean, "sd": sd} for cat, (mean, sd) in row.items()}
        for method, row in table.items()
    }
    methods = sorted(table)
    print("SCORES  mean (sd)")
    header = f"{'method':<20}" + "".join(f"{cat:>18}" for cat in ann.CATEGORIES)
    print(header)
    for method in methods:
        cells = "".join(
            f"{table[method][cat][0]:>11.2f} ({table[method][cat][1]:.2f})"
            for cat in ann.CATEGORIES
        )
        print(f"{method:<20}{cells}")

    print("\nWIN/LOSS/TIE  (row vs column, % of shared rankings)")
    output["win_loss_tie"] = {}
    for a in methods:
        for b in methods:
            if a >= b:
                continue
            try:
                wlt = ann.win_loss_tie(records, a, b)
            except NoOverlap:
                continue
            win, loss, tie = wlt.as_floats()
            output["win_loss_tie"][f"{a} vs {b}"] = {
                "win": win, "loss": loss, "tie": tie, "comparisons": wlt.comparisons,
            }
            print(
                f"{a} vs {b}: win {win:.1f}%  loss {loss:.1f}%  tie {tie:.1f}%"
                f"  (n={wlt.comparisons})"
            )

    print("\nAGREEMENT  (overlapping ratings per annotator pair)")
    output["agreement"] = {}
    annotators = sorted({r.annotator_id for r in records})
    if len(annotators) < 2:
        print("insufficient overlap: fewer than two annotators")
        output["agreement"] = "insufficient overlap"
    for i, a in enumerate(annotators):
        for b in annotators[i + 1 :]:
            label = f"{a}/{b}"
            try:
                linear = ann.pairwise_agreement(records, a, b, weighting="linear")
                quadratic = ann.pairwise_agreement(records, a, b, weighting="quadratic")
            except DegenerateInput as exc:
                print(f"{label}: insufficient overlap ({exc})")
                output["agreement"][label] = "insufficient overlap"
                continue
            output["agreement"][label] = {
                "kendall_tau": linear.kendall_tau,
                "p_value": linear.p_value,
                "kappa_linear": linear.weighted_kappa,
                "kappa_quadratic": quadratic.weighted_kappa,
                "n_ratings": linear.n_items,
            }
            print(
                f"{label}: tau={linear.kendall_tau:.3f} (p={linear.p_value:.4f})  "
                f"kappa_linear={linear.weighted_kappa:.3f}  "
                f"kappa_quadratic={quadratic.weighted_kappa:.3f}  (n={linear.n_items})"
            )

    if args.ttest:
        print("\nT-TESTS  (independent two-sample, per category)")
        output["ttest"] = {}
        for i, a in enumerate(methods):
            for b in methods[i + 1 :]:
                for cat in ann.CATEGORIES:
                    try:
                        t, p = ann.score_ttest(records, a, b, cat)
                    except DegenerateInput:
                        continue
                    output["ttest"][f"{a} vs {b} [{cat}]"] = {"t": t, "p": p}
                    print(f"{a} vs {b} [{cat}]: t={t:.3f} p={p:.4f}")

    if args.out:
        _write_json(Path(args.out), output)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specforge",
        description="Draft patent specifications from claims, evaluate disclosures, "
        "and compute annotation statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_draft = sub.add_parser("draft", help="draft specifications for input documents")
    p_draft.add_argument("inputs", nargs="+", help="input document JSON files")
    p_draft.add_argument("--config", required=False, help="run configuration JSON")
    p_draft.add_argument("--mode", choices=[m.value for m in ModeId], help="drafting strategy")
    p_draft.add_argument("--out", default="runs", help="output directory")
    p_draft.add_argument(
        "--template-only",
        action="store_true",
        help="skip concept extraction and retrieval (template-only ablation)",
    )
    p_draft.add_argument("--local-corpus", help="directory of .txt documents for offline retrieval")
    p_draft.set_defaults(func=cmd_draft)

    p_eval = sub.add_parser("evaluate", help="score generated disclosures against references")
    p_eval.add_argument("inputs", nargs="+", help="input documents carrying gold_specification")
    p_eval.add_argument("--config", help="run configuration JSON (for the embedding backend)")
    p_eval.add_argument("--generated", required=True, help="directory of <source_id>.txt drafts")
    p_eval.add_argument("--out", default="evaluation", help="output directory")
    p_eval.add_argument("--chunk-tokens", type=int, help="embedding chunk size in tokens")
    p_eval.add_argument("--lexicon", help="profanity lexicon file, one phrase per line")
    p_eval.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser("stats", help="aggregate annotation records")
    p_stats.add_argument("annotations", nargs="+", help="annotation JSONL files")
    p_stats.add_argument("--out", help="write the full results as JSON here")
    p_stats.add_argument("--ttest", action="store_true", help="also run per-category t-tests")
    p_stats.add_argument(
        "--allow-tied-ranks",
        action="store_true",
        help="accept datasets where an annotator ranked two disclosures equally",
    )
    p_stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecForgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
