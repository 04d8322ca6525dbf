import json
import shutil
from pathlib import Path

import pytest

from specforge.cli import main
from specforge.domain import document_from_dict, load_document, parse, render

import synth
import random


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")


@pytest.fixture
def workspace(tmp_path):
    """Three input documents plus a mock config whose script covers them all."""
    rng = random.Random(23)
    doc_dicts = [synth.make_patent_dict(rng, i, with_gold=True) for i in range(3)]
    inputs = []
    for dd in doc_dicts:
        path = tmp_path / f"{dd['source_id']}.json"
        write_json(path, dd)
        inputs.append(path)
    # merge the per-document scripts; repeat_last covers count differences
    responses: dict[str, list] = {}
    for dd in doc_dicts:
        doc = document_from_dict(dd)
        script = synth.build_pipeline_script(doc, n_concepts=2)
        for tag, values in script.items():
            responses.setdefault(tag, []).extend(values)
    script_path = tmp_path / "script.json"
    write_json(script_path, {"responses": responses, "repeat_last": True})
    config_path = tmp_path / "config.json"
    write_json(
        config_path,
        {
            "backend": {"kind": "mock", "script": str(script_path), "embedding_dimension": 8},
            "mode": "autospec-full",
            "seed_label": "test-run",
        },
    )
    return tmp_path, config_path, inputs


def test_draft_three_documents(workspace, capsys):
    tmp_path, config, inputs = workspace
    out = tmp_path / "runs"
    code = main(["draft", "--config", str(config), "--out", str(out)] + [str(p) for p in inputs])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["documents"]) == 3
    assert all(v == "ok" for v in summary["documents"].values())
    for path in inputs:
        doc = load_document(path)
        run_dir = out / doc.source_id
        for name in (
            "specification.txt",
            "specification.json",
            "outline.json",
            "drafts.json",
            "decisions.json",
            "calls.jsonl",
            "queries.jsonl",
            "run.jsonl",
        ):
            assert (run_dir / name).is_file(), name
        spec = parse((run_dir / "specification.txt").read_text(), source_id=doc.source_id)
        assert spec.paragraph_count() == synth.expected_paragraph_total(doc, 2)


def test_draft_requires_config(tmp_path, capsys):
    doc = tmp_path / "d.json"
    write_json(doc, synth.make_patent_dict(random.Random(0), 0))
    assert main(["draft", str(doc)]) == 2


def test_draft_bad_endpoint_fails_all(tmp_path):
    rng = random.Random(5)
    doc_path = tmp_path / "doc.json"
    write_json(doc_path, synth.make_patent_dict(rng, 0))
    config = tmp_path / "config.json"
    write_json(
        config,
        {
            "backend": {
                "kind": "openai",
                "base_url": "http://127.0.0.1:1",  # nothing listens here
                "model": "m",
                "max_retries": 0,
                "backoff_seconds": 0.0,
                "timeout": 0.2,
            }
        },
    )
    out = tmp_path / "runs"
    code = main(["draft", "--config", str(config), "--out", str(out), str(doc_path)])
    assert code == 1
    summary = json.loads((out / "summary.json").read_text())
    assert all("BackendUnavailable" in v for v in summary["documents"].values())


def test_template_only_run_has_no_retrieval_or_splices(workspace):
    tmp_path, config, inputs = workspace
    out = tmp_path / "runs-template"
    code = main(
        ["draft", "--config", str(config), "--out", str(out), "--template-only", str(inputs[0])]
    )
    assert code == 0
    doc = load_document(inputs[0])
    run_dir = out / doc.source_id
    assert json.loads((run_dir / "decisions.json").read_text()) == []
    assert (run_dir / "queries.jsonl").read_text() == ""
    calls = [json.loads(line) for line in (run_dir / "calls.jsonl").read_text().splitlines()]
    assert all(c["tag"] not in ("splice", "extract_concepts", "contextualize") for c in calls)


def test_draft_rerun_is_byte_identical(workspace):
    tmp_path, config, inputs = workspace
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        assert main(["draft", "--config", str(config), "--out", str(out)] + [str(p) for p in inputs]) == 0
    for path in inputs:
        doc = load_document(path)
        for name in ("specification.txt", "outline.json", "drafts.json", "decisions.json", "specification.json"):
            a = (out1 / doc.source_id / name).read_bytes()
            b = (out2 / doc.source_id / name).read_bytes()
            assert a == b, f"{doc.source_id}/{name} differs between identical runs"
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()


def test_draft_with_local_corpus_logs_queries(workspace):
    tmp_path, config, inputs = workspace
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "ref.txt").write_text("Concept A and concept B discussed alongside membranes.")
    out = tmp_path / "runs-corpus"
    code = main(
        ["draft", "--config", str(config), "--out", str(out), "--local-corpus", str(corpus), str(inputs[0])]
    )
    assert code == 0
    doc = load_document(inputs[0])
    queries = (out / doc.source_id / "queries.jsonl").read_text().splitlines()
    assert len(queries) == 2  # one outgoing query per technical concept


# ---------------------------------------------------------------------------
# evaluate


def test_evaluate_identity_pair(workspace, capsys):
    tmp_path, config, inputs = workspace
    # use each document's gold text as the "generated" file: identity pair
    gen_dir = tmp_path / "generated"
    gen_dir.mkdir()
    for path in inputs:
        doc = load_document(path)
        (gen_dir / f"{doc.source_id}.txt").write_text(render(doc.gold_specification))
    out = tmp_path / "eval"
    code = main(
        ["evaluate", "--config", str(config), "--generated", str(gen_dir), "--out", str(out)]
        + [str(p) for p in inputs]
    )
    assert code == 0
    for path in inputs:
        doc = load_document(path)
        report = json.loads((out / f"{doc.source_id}.report.json").read_text())
        assert report["similarity"] == pytest.approx(1.0, abs=1e-9)
        assert report["diversity_difference"] == 0.0
    aggregate = json.loads((out / "aggregate.json").read_text())
    assert aggregate["similarity"]["mean"] == pytest.approx(1.0, abs=1e-9)
    assert aggregate["similarity"]["n"] == 3


def test_evaluate_aggregate_is_mean_of_reports(workspace):
    tmp_path, config, inputs = workspace
    gen_dir = tmp_path / "generated2"
    gen_dir.mkdir()
    # drafted pipeline output vs gold reference
    runs = tmp_path / "runs-for-eval"
    main(["draft", "--config", str(config), "--out", str(runs)] + [str(p) for p in inputs])
    for path in inputs:
        doc = load_document(path)
        shutil.copy(runs / doc.source_id / "specification.txt", gen_dir / f"{doc.source_id}.txt")
    out = tmp_path / "eval2"
    code = main(
        ["evaluate", "--config", str(config), "--generated", str(gen_dir), "--out", str(out)]
        + [str(p) for p in inputs]
    )
    assert code == 0
    reports = [
        json.loads((out / f"{load_document(p).source_id}.report.json").read_text()) for p in inputs
    ]
    aggregate = json.loads((out / "aggregate.json").read_text())
    mean_ngd = sum(r["ngd_generated"] for r in reports) / len(reports)
    assert aggregate["ngd_generated"]["mean"] == pytest.approx(mean_ngd, abs=1e-12)


def test_evaluate_skips_missing_and_fails_on_zero_pairs(tmp_path, capsys):
    rng = random.Random(1)
    doc_dict = synth.make_patent_dict(rng, 0, with_gold=False)  # no gold reference
    path = tmp_path / "doc.json"
    write_json(path, doc_dict)
    gen_dir = tmp_path / "gen"
    gen_dir.mkdir()
    out = tmp_path / "eval"
    code = main(["evaluate", "--generated", str(gen_dir), "--out", str(out), str(path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "skipped" in err


# ---------------------------------------------------------------------------
# stats


def stats_file(tmp_path, records) -> Path:
    path = tmp_path / "ann.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return path


def ann_record(annotator, source, method, value, rank):
    return {
        "annotator_id": annotator,
        "source_id": source,
        "method_id": method,
        "scores": {
            "LanguageStyle": value,
            "Elaboration": value,
            "Diversity": value,
            "FactualAccuracy": value,
            "Coverage": value,
        },
        "rank": rank,
    }


def test_stats_end_to_end(tmp_path, capsys):
    records = []
    values = {"m1": [4, 5, 4, 3], "m2": [2, 3, 2, 4]}
    for i in range(4):
        for annotator in ("a1", "a2"):
            records.append(ann_record(annotator, f"p{i}", "m1", values["m1"][i], 1))
            records.append(ann_record(annotator, f"p{i}", "m2", values["m2"][i], 2))
    path = stats_file(tmp_path, records)
    out = tmp_path / "stats.json"
    code = main(["stats", str(path), "--out", str(out), "--ttest"])
    assert code == 0
    text = capsys.readouterr().out
    assert "SCORES" in text and "WIN/LOSS/TIE" in text and "AGREEMENT" in text
    data = json.loads(out.read_text())
    assert data["win_loss_tie"]["m1 vs m2"]["win"] == 100.0
    assert data["scores"]["m1"]["Coverage"]["mean"] == pytest.approx(4.0)
    assert data["agreement"]["a1/a2"]["kendall_tau"] == pytest.approx(1.0)


def test_stats_single_annotator_reports_insufficient_overlap(tmp_path, capsys):
    records = [ann_record("a1", "p1", "m1", 3, 1), ann_record("a1", "p1", "m2", 4, 2)]
    code = main(["stats", str(stats_file(tmp_path, records))])
    assert code == 0
    assert "insufficient overlap" in capsys.readouterr().out


def test_stats_identical_annotators_tau_one(tmp_path, capsys):
    records = []
    for i, value in enumerate([1, 2, 3, 4, 5]):
        for annotator in ("x", "y"):
            records.append(ann_record(annotator, f"p{i}", "m1", value, 1))
    code = main(["stats", str(stats_file(tmp_path, records))])
    assert code == 0
    assert "tau=1.000" in capsys.readouterr().out


def test_stats_rejects_malformed_file_with_line_diagnostic(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(ann_record("a", "p", "m", 3, 1)) + "\nnot json\n")
    code = main(["stats", str(path)])
    assert code == 2
    assert ":2:" in capsys.readouterr().err


def test_stats_rejects_tied_ranks_without_flag(tmp_path, capsys):
    records = [ann_record("a", "p", "m1", 3, 1), ann_record("a", "p", "m2", 3, 1)]
    path = stats_file(tmp_path, records)
    assert main(["stats", str(path)]) == 2
    assert main(["stats", str(path), "--allow-tied-ranks"]) == 0


def test_mode_flag_autospec_template(workspace):
    tmp_path, config, inputs = workspace
    out = tmp_path / "runs-mode-flag"
    code = main(
        ["draft", "--config", str(config), "--out", str(out), "--mode", "autospec-template", str(inputs[0])]
    )
    assert code == 0
    doc = load_document(inputs[0])
    assert json.loads((out / doc.source_id / "decisions.json").read_text()) == []
