"""Batch CLI driving every workflow.

Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import annotation, evaluation
from .config import resolve_config
from .corpus import generate_synthetic, load_notes, load_templates, save_notes
from .engines import make_llm_engine, make_rules_engine
from .errors import VaxtriageError
from .labels import VaccineLabel
from .lexicon import load_default_lexicon, load_lexicon
from .llm import extract_batch, load_system_prompt


def _load_lexicon_opt(path: str | None):
    if path:
        with open(path, "rb") as fh:
            return load_lexicon(fh)
    return load_default_lexicon()


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
def main() -> None:
    """Vaccine-mention extraction toolkit for ED triage notes."""


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--engine", type=click.Choice(["rules", "llm"]), default="rules", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Output JSONL; stdout when omitted.")
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default="jsonl", show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def extract(in_path, engine, out_path, fmt, lexicon_path, config_path) -> None:
    """Run an extractor over a note file; one result object per line."""
    try:
        cfg = resolve_config(config_path)
        lexicon = _load_lexicon_opt(lexicon_path or (str(cfg.lexicon_path) if cfg.lexicon_path else None))
        with open(in_path, "rb") as fh:
            dataset = load_notes(fh, format=fmt, name=Path(in_path).stem)
        if engine == "rules":
            runner = make_rules_engine(lexicon, cfg.rules)
            results = [runner(note) for note in dataset.notes]
        else:
            if cfg.endpoint is None:
                _fail("llm engine requires an endpoint in the config file")
            results = extract_batch(dataset, cfg.endpoint, lexicon, cfg.decoding)
        lines = []
        for note, result in zip(dataset.notes, results):
            record = {"id": note.id, **result.to_dict()}
            if "raw" not in record:
                record["raw"] = result.label.to_string()
            lines.append(json.dumps(record, ensure_ascii=False))
        payload = "\n".join(lines) + "\n"
        if out_path:
            Path(out_path).write_text(payload, "utf-8")
        else:
            click.echo(payload, nl=False)
    except VaxtriageError as exc:
        _fail(str(exc))


@main.command(name="eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write the full report JSON here.")
def eval_cmd(pred_path, gold_path, lexicon_path, out_path) -> None:
    """Score predictions against gold labels; prints the two scoring tables."""
    try:
        lexicon = _load_lexicon_opt(lexicon_path)
        with open(gold_path, "rb") as fh:
            golds = load_notes(fh, name="gold")
        predictions = []
        for line_no, line in enumerate(Path(pred_path).read_text("utf-8").split("\n"), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                predictions.append(
                    evaluation.Prediction(
                        note_id=rec["id"],
                        label=VaccineLabel.from_string(rec["label"]),
                        raw=rec.get("raw"),
                    )
                )
            except (KeyError, ValueError) as exc:
                _fail(f"{pred_path}:{line_no}: {exc}")
        rep = evaluation.report(predictions, golds, lexicon)
        click.echo(evaluation.render_presence_table(rep))
        click.echo()
        click.echo(evaluation.render_name_table(rep))
        click.echo()
        click.echo(evaluation.render_summary(rep))
        if out_path:
            Path(out_path).write_text(rep.to_json(), "utf-8")
    except VaxtriageError as exc:
        _fail(str(exc))


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--engine", type=click.Choice(["rules", "llm"]), default="rules", show_default=True)
@click.option("--store", "store_path", required=True, type=click.Path(file_okay=False))
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def prelabel(in_path, engine, store_path, lexicon_path, config_path) -> None:
    """Queue engine proposals for human review."""
    try:
        cfg = resolve_config(config_path)
        lexicon = _load_lexicon_opt(lexicon_path or (str(cfg.lexicon_path) if cfg.lexicon_path else None))
        with open(in_path, "rb") as fh:
            dataset = load_notes(fh, name=Path(in_path).stem)
        if engine == "rules":
            runner = make_rules_engine(lexicon, cfg.rules)
        else:
            if cfg.endpoint is None:
                _fail("llm engine requires an endpoint in the config file")
            runner = make_llm_engine(cfg.endpoint, lexicon, cfg.decoding)
        store = annotation.AnnotationStore(
            store_path, lease_ttl=cfg.lease_ttl,
            second_opinion_fraction=cfg.second_opinion_fraction,
        )
        count = annotation.prelabel(store, dataset, runner, engine)
        click.echo(f"enqueued {count} of {len(dataset)} notes")
    except VaxtriageError as exc:
        _fail(str(exc))


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--manifest", "manifest_path", type=click.Path(dir_okay=False), default=None)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
def export(store_path, out_path, manifest_path, lexicon_path) -> None:
    """Export confirmed labels as a fine-tuning chat dataset."""
    try:
        lexicon = _load_lexicon_opt(lexicon_path)
        store = annotation.AnnotationStore(store_path)
        payload, manifest = annotation.export_dataset(store, lexicon, load_system_prompt())
        Path(out_path).write_text(payload, "utf-8")
        mpath = manifest_path or (out_path + ".manifest.json")
        Path(mpath).write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", "utf-8")
        click.echo(f"exported {manifest['record_count']} records to {out_path}")
    except VaxtriageError as exc:
        _fail(str(exc))


@main.command()
@click.option("--seed", required=True, type=int)
@click.option("--n", required=True, type=int)
@click.option("--fraction", type=float, default=0.7, show_default=True)
@click.option("--templates", "templates_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def synth(seed, n, fraction, templates_path, out_path) -> None:
    """Generate a deterministic synthetic labeled corpus."""
    try:
        if templates_path:
            with open(templates_path, "rb") as fh:
                templates = load_templates(fh)
        else:
            templates = load_templates()
        dataset = generate_synthetic(seed, n, fraction, templates)
        payload = save_notes(dataset)
        if out_path:
            Path(out_path).write_text(payload, "utf-8")
        else:
            click.echo(payload, nl=False)
    except VaxtriageError as exc:
        _fail(str(exc))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--store", "store_path", type=click.Path(file_okay=False), default=None)
@click.option("--ui", "ui_path", type=click.Path(exists=True, file_okay=False), default=None)
def serve(config_path, host, port, store_path, ui_path) -> None:
    """Run the HTTP service (API plus review UI assets)."""
    try:
        cfg = resolve_config(config_path)
        if host:
            cfg.listen_host = host
        if port:
            cfg.listen_port = port
        if store_path:
            cfg.store_path = Path(store_path)
        if ui_path:
            cfg.ui_asset_path = Path(ui_path)
        from .service import serve as run_service

        run_service(cfg)
    except VaxtriageError as exc:
        _fail(str(exc))


@main.group()
def lexicon() -> None:
    """Lexicon maintenance."""


@lexicon.command()
@click.option("--file", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
def check(lexicon_path) -> None:
    """Validate a lexicon file and print its shape."""
    try:
        lex = _load_lexicon_opt(lexicon_path)
        surfaces = sum(len(e.surfaces) for e in lex.entries)
        click.echo(f"lexicon ok: version {lex.version}")
        click.echo(f"  entries: {len(lex.entries)} ({surfaces} surfaces)")
        click.echo(f"  generic triggers: {len(lex.generic_triggers)}")
        click.echo(f"  injection words: {len(lex.injection_words)}")
        click.echo(f"  exclusion terms: {len(lex.non_vaccine_context)}")
        click.echo(f"  future cues: {len(lex.future_cues)}")
    except VaxtriageError as exc:
        _fail(str(exc))


@main.command(name="mock-serve")
@click.option("--notes", "notes_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--responses", "responses_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8401, show_default=True)
def mock_serve(notes_path, responses_path, host, port) -> None:
    """Serve scripted chat-completion responses for offline pipeline runs."""
    try:
        import uvicorn

        from .mock_server import create_mock_app, load_response_fixture

        with open(notes_path, "rb") as fh:
            dataset = load_notes(fh, name="mock")
        with open(responses_path, "rb") as fh:
            responses = load_response_fixture(fh)
        uvicorn.run(create_mock_app(dataset, responses), host=host, port=port)
    except VaxtriageError as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
