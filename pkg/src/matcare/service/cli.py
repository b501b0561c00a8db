"""Operator command line: serve the API, manage corpora, run evaluations."""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click

from ..emr.schema import default_schema
from ..evaluation import (
    NormalizationOptions,
    cross_model_report,
    field_accuracy,
    load_corpus,
    rate_redflags,
    record_categorization,
    wer as compute_wer,
)
from ..emr.document import diff_documents
from ..lexicon import default_lexicon
from ..llm.backend import MockLlmBackend
from ..retrieval import default_corpus as default_guidelines, index_corpus
from ..rules import default_rules
from ..transcripts import MockSpeechBackend
from .. import workflow as wf
from .api import ServiceState, create_app
from .storage import Store


@click.group()
def main() -> None:
    """Maternal-care record service and evaluation harness."""


def _build_state(data_dir: str, mock_backends: bool) -> ServiceState:
    schema = default_schema()
    lexicon = default_lexicon()
    if not mock_backends:
        raise click.ClickException(
            "only the offline mock backends are bundled; pass "
            "--mock-backends (a real backend adapter must be configured "
            "in code)")
    ctx = wf.WorkflowContext(
        schema=schema,
        lexicon=lexicon,
        backend=MockLlmBackend.with_default_fixtures(schema, lexicon),
        rules=default_rules(),
        retrieval_index=index_corpus(default_guidelines()),
        ultrasound_extractor=wf.MockUltrasoundExtractor(),
    )
    return ServiceState(Store(Path(data_dir)), ctx,
                        speech_backend=MockSpeechBackend(fixtures={}))


@main.command()
@click.option("--data-dir", default="./matcare-data", show_default=True)
@click.option("--listen", default="127.0.0.1:8000", show_default=True,
              help="host:port to bind")
@click.option("--mock-backends/--no-mock-backends", default=True,
              show_default=True,
              help="run fully offline against the bundled mock backends")
def serve(data_dir: str, listen: str, mock_backends: bool) -> None:
    """Run the record-service API."""
    import uvicorn

    host, _, port = listen.partition(":")
    app = create_app(_build_state(data_dir, mock_backends))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


@main.command("import-corpus")
@click.argument("src", type=click.Path(exists=True, file_okay=False))
@click.argument("dest", type=click.Path(file_okay=False))
def import_corpus(src: str, dest: str) -> None:
    """Validate an evaluation corpus and copy it into place."""
    schema = default_schema()
    bundles = load_corpus(Path(src), schema)
    dest_path = Path(dest)
    dest_path.mkdir(parents=True, exist_ok=True)
    for bundle in bundles:
        shutil.copytree(Path(src) / bundle.patient_id,
                        dest_path / bundle.patient_id, dirs_exist_ok=True)
    click.echo(f"imported {len(bundles)} patient bundles into {dest}")


@main.command("export-visit")
@click.argument("visit_id")
@click.option("--data-dir", default="./matcare-data", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the archive to a file instead of stdout")
@click.option("--anonymize/--no-anonymize", default=False, show_default=True)
def export_visit(visit_id: str, data_dir: str, out: str,
                 anonymize: bool) -> None:
    """Export a visit archive (event log, EMR, report, surveys)."""
    from .api import _pseudonym

    store = Store(Path(data_dir))
    archive = dict(store.load_visit(visit_id))
    archive["surveys"] = store.get_surveys(visit_id)
    patient = store.get_patient(archive["mr_number"]).to_json()
    if anonymize:
        patient["name"] = _pseudonym(patient["mr_number"])
    archive["patient"] = patient
    text = json.dumps(archive, indent=2, sort_keys=True, ensure_ascii=False)
    if out:
        Path(out).write_text(text, "utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)


@main.group()
def eval() -> None:
    """Evaluation commands over corpus bundles."""


@eval.command("wer")
@click.argument("corpus", type=click.Path(exists=True, file_okay=False))
@click.option("--casefold/--no-casefold", default=True, show_default=True)
@click.option("--strip-punct/--no-strip-punct", default=True,
              show_default=True)
@click.option("--collapse-repetitions/--no-collapse-repetitions",
              default=False, show_default=True)
@click.option("--roman-urdu/--no-roman-urdu", default=False,
              show_default=True,
              help="canonicalize Roman-Urdu spelling variants")
@click.option("--json", "as_json", is_flag=True, default=False)
def eval_wer(corpus: str, casefold: bool, strip_punct: bool,
             collapse_repetitions: bool, roman_urdu: bool,
             as_json: bool) -> None:
    """Word error rate per patient plus a corpus aggregate."""
    schema = default_schema()
    lexicon = default_lexicon()
    opts = NormalizationOptions(
        casefold=casefold, strip_punct=strip_punct,
        collapse_repetitions=collapse_repetitions,
        roman_urdu_canonicalize=roman_urdu)
    rows = []
    total_errors = total_words = 0
    for bundle in load_corpus(Path(corpus), schema):
        bundle.require("reference", "hypothesis")
        result = compute_wer(bundle.reference, bundle.hypothesis, opts,
                             lexicon)
        rows.append({"patient": bundle.patient_id,
                     "substitutions": result.substitutions,
                     "deletions": result.deletions,
                     "insertions": result.insertions,
                     "ref_words": result.ref_words,
                     "wer": result.wer})
        total_errors += (result.substitutions + result.deletions
                         + result.insertions)
        total_words += result.ref_words
    aggregate = total_errors / total_words
    if as_json:
        click.echo(json.dumps({"options": vars(opts) if hasattr(opts, "__dict__") else opts.__dict__,
                               "rows": rows, "aggregate_wer": aggregate},
                              default=str))
        return
    click.echo(f"normalization: casefold={opts.casefold} "
               f"strip_punct={opts.strip_punct} "
               f"collapse_repetitions={opts.collapse_repetitions} "
               f"roman_urdu={opts.roman_urdu_canonicalize}")
    click.echo("patient\tS\tD\tI\tN\tWER")
    for row in rows:
        click.echo(f"{row['patient']}\t{row['substitutions']}\t"
                   f"{row['deletions']}\t{row['insertions']}\t"
                   f"{row['ref_words']}\t{row['wer'] * 100:.1f}%")
    click.echo(f"aggregate\t\t\t\t\t{aggregate * 100:.1f}%")


@eval.command("accuracy")
@click.argument("corpus", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True, default=False)
def eval_accuracy(corpus: str, as_json: bool) -> None:
    """Field-level EMR accuracy against ground truth."""
    schema = default_schema()
    rows = []
    correct = total = 0
    for bundle in load_corpus(Path(corpus), schema):
        bundle.require("system_emr", "truth_emr")
        result = field_accuracy(bundle.system_emr, bundle.truth_emr, schema)
        rows.append({"patient": bundle.patient_id, **result.to_json()})
        correct += result.correct
        total += result.total
    aggregate = correct / total if total else 1.0
    if as_json:
        click.echo(json.dumps({"rows": rows, "aggregate_accuracy": aggregate}))
        return
    click.echo("patient\tcorrect\ttotal\taccuracy")
    for row in rows:
        click.echo(f"{row['patient']}\t{row['correct']}\t{row['total']}\t"
                   f"{row['accuracy'] * 100:.1f}%")
    click.echo(f"aggregate\t{correct}\t{total}\t{aggregate * 100:.1f}%")


@eval.command("categorize")
@click.argument("corpus", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True, default=False)
def eval_categorize(corpus: str, as_json: bool) -> None:
    """Tally clinician error categorizations (labels.json per bundle)."""
    schema = default_schema()
    out = {}
    for bundle in load_corpus(Path(corpus), schema):
        bundle.require("system_emr", "truth_emr")
        labels_path = Path(corpus) / bundle.patient_id / "labels.json"
        if not labels_path.exists():
            continue
        labels = [tuple(item) for item in
                  json.loads(labels_path.read_text("utf-8"))]
        diffs = diff_documents(bundle.system_emr, bundle.truth_emr, schema)
        tally = record_categorization(diffs, labels)
        out[bundle.patient_id] = tally.to_json()
    if not out:
        raise click.ClickException("no labels.json files found in corpus")
    if as_json:
        click.echo(json.dumps(out))
        return
    for patient, tally in out.items():
        click.echo(patient)
        for category, count in tally["counts"].items():
            pct = tally["percentages"][category]
            click.echo(f"  {category}: {count} ({pct:.1f}% of "
                       f"{tally['total_fields']} fields)")


@eval.command("flags")
@click.argument("corpus", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True, default=False)
def eval_flags(corpus: str, as_json: bool) -> None:
    """Aggregate clinician ratings of generated red flags."""
    schema = default_schema()
    out = {}
    for bundle in load_corpus(Path(corpus), schema):
        bundle.require("flags", "ratings")
        report = rate_redflags(bundle.flags, bundle.ratings)
        out[bundle.patient_id] = report.to_json()
    if as_json:
        click.echo(json.dumps(out))
        return
    for patient, report in out.items():
        pooled = report["pooled"]
        acc = pooled["accuracy_percent"]
        rel = pooled["relevance_percent"]
        click.echo(
            f"{patient}: rated={pooled['rated']} "
            f"accuracy={'-' if acc is None else f'{acc:.2f}%'} "
            f"relevance={'-' if rel is None else f'{rel:.2f}%'} "
            f"unrated={len(report['unrated_flag_ids'])}")


@eval.command("cross-model")
@click.argument("runs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True, default=False)
def eval_cross_model(runs, as_json: bool) -> None:
    """Compare accuracy across backends; each RUN directory is a corpus
    named after its backend."""
    schema = default_schema()
    run_results = []
    for run in runs:
        run_path = Path(run)
        per_patient = {}
        for bundle in load_corpus(run_path, schema):
            bundle.require("system_emr", "truth_emr")
            per_patient[bundle.patient_id] = field_accuracy(
                bundle.system_emr, bundle.truth_emr, schema)
        run_results.append((run_path.name, per_patient))
    report = cross_model_report(run_results)
    if as_json:
        click.echo(json.dumps(report.to_json()))
    else:
        click.echo(report.render_table())


if __name__ == "__main__":
    sys.exit(main())
