from __future__ import annotations

import json
from importlib import resources

import pytest
from click.testing import CliRunner

from vaxtriage.cli import main
from vaxtriage.corpus import load_notes
from vaxtriage.rules import extract as rules_extract


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def golden_path(tmp_path):
    text = resources.files("vaxtriage").joinpath("data/fixtures/golden_notes.jsonl").read_text("utf-8")
    path = tmp_path / "golden.jsonl"
    path.write_text(text, "utf-8")
    return path


class TestSynth:
    def test_deterministic_output_files(self, runner, tmp_path):
        out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (out1, out2):
            result = runner.invoke(main, ["synth", "--seed", "7", "--n", "10", "--out", str(out)])
            assert result.exit_code == 0, result.output
        assert out1.read_bytes() == out2.read_bytes()

    def test_output_loads_back(self, runner, tmp_path):
        out = tmp_path / "c.jsonl"
        runner.invoke(main, ["synth", "--seed", "3", "--n", "12", "--fraction", "0.5", "--out", str(out)])
        ds = load_notes(out.read_bytes())
        assert len(ds) == 12
        assert ds.class_counts() == (6, 6)

    def test_usage_error_is_exit_2(self, runner):
        assert runner.invoke(main, ["synth", "--n", "10"]).exit_code == 2


class TestExtract:
    def test_golden_five_of_five(self, runner, golden_path, tmp_path):
        out = tmp_path / "pred.jsonl"
        result = runner.invoke(
            main, ["extract", "--engine", "rules", "--in", str(golden_path), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        got = {r["id"]: r["label"] for r in rows}
        assert got == {
            "g1": "6 weeks",
            "g2": "Unspecified",
            "g3": "Rotavirus",
            "g4": "Influenza",
            "g5": "No",
        }

    def test_cli_matches_library_exactly(self, runner, golden_path, tmp_path, lexicon, golden_dataset):
        out = tmp_path / "pred.jsonl"
        runner.invoke(main, ["extract", "--in", str(golden_path), "--out", str(out)])
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        for row, note in zip(rows, golden_dataset.notes):
            direct = rules_extract(note, lexicon)
            assert row["label"] == direct.label.to_string()
            assert row.get("matched_span") == (
                list(direct.matched_span) if direct.matched_span else None
            )

    def test_missing_file_is_usage_error(self, runner):
        result = runner.invoke(main, ["extract", "--in", "nope.jsonl"])
        assert result.exit_code == 2


class TestEval:
    def _write_fixture(self, tmp_path, tp, tn, fn, fp):
        gold_lines, pred_lines = [], []
        i = 0
        for _ in range(tp):
            gold_lines.append({"id": f"n{i}", "age_years": 1, "age_months": 0,
                               "text": "flu vax today", "gold": "Influenza"})
            pred_lines.append({"id": f"n{i}", "label": "Influenza", "raw": "Influenza"})
            i += 1
        for _ in range(tn):
            gold_lines.append({"id": f"n{i}", "age_years": 1, "age_months": 0,
                               "text": "abdo pain", "gold": "No"})
            pred_lines.append({"id": f"n{i}", "label": "No", "raw": "No"})
            i += 1
        for _ in range(fn):
            gold_lines.append({"id": f"n{i}", "age_years": 1, "age_months": 0,
                               "text": "rotarix given", "gold": "Rotavirus"})
            pred_lines.append({"id": f"n{i}", "label": "No", "raw": "No"})
            i += 1
        for _ in range(fp):
            gold_lines.append({"id": f"n{i}", "age_years": 1, "age_months": 0,
                               "text": "nil significant", "gold": "No"})
            pred_lines.append({"id": f"n{i}", "label": "Unspecified", "raw": "Unspecified"})
            i += 1
        gold = tmp_path / "gold.jsonl"
        pred = tmp_path / "pred.jsonl"
        gold.write_text("\n".join(json.dumps(r) for r in gold_lines) + "\n")
        pred.write_text("\n".join(json.dumps(r) for r in pred_lines) + "\n")
        return pred, gold

    def test_reference_row_output(self, runner, tmp_path):
        pred, gold = self._write_fixture(tmp_path, 225, 18, 13, 3)
        result = runner.invoke(main, ["eval", "--pred", str(pred), "--gold", str(gold)])
        assert result.exit_code == 0, result.output
        assert "P 0.99 R 0.95 F1 0.97" in result.output

    def test_report_json_written(self, runner, tmp_path):
        pred, gold = self._write_fixture(tmp_path, 4, 3, 1, 1)
        out = tmp_path / "report.json"
        result = runner.invoke(
            main, ["eval", "--pred", str(pred), "--gold", str(gold), "--out", str(out)]
        )
        assert result.exit_code == 0
        report = json.loads(out.read_text())
        assert report["counts"] == {"tp": 4, "tn": 3, "fp": 1, "fn": 1}
        assert report["schema_version"] == "1"

    def test_mismatched_ids_exit_1(self, runner, tmp_path):
        pred, gold = self._write_fixture(tmp_path, 1, 1, 0, 0)
        pred.write_text('{"id": "zz", "label": "No"}\n')
        result = runner.invoke(main, ["eval", "--pred", str(pred), "--gold", str(gold)])
        assert result.exit_code == 1
        assert "error" in result.output


class TestPrelabelExport:
    def test_full_flow(self, runner, golden_path, tmp_path):
        store = tmp_path / "store"
        result = runner.invoke(
            main,
            ["prelabel", "--in", str(golden_path), "--engine", "rules", "--store", str(store)],
        )
        assert result.exit_code == 0, result.output
        assert "enqueued 5 of 5" in result.output

        # decide everything directly through the store, then export via CLI
        from vaxtriage.annotation import AnnotationStore

        s = AnnotationStore(store)
        while (rec := s.next_pending("alice")) is not None:
            s.submit_decision(rec.note.id, "alice", "accept")

        out = tmp_path / "train.jsonl"
        result = runner.invoke(main, ["export", "--store", str(store), "--out", str(out)])
        assert result.exit_code == 0, result.output
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 5
        manifest = json.loads((tmp_path / "train.jsonl.manifest.json").read_text())
        assert manifest["record_count"] == 5
        assert manifest["class_counts"]["Rotavirus"] == 1

    def test_export_empty_store_exit_1(self, runner, tmp_path):
        store = tmp_path / "empty-store"
        store.mkdir()
        result = runner.invoke(
            main, ["export", "--store", str(store), "--out", str(tmp_path / "x.jsonl")]
        )
        assert result.exit_code == 1

    def test_prelabel_rerun_enqueues_zero(self, runner, golden_path, tmp_path):
        store = tmp_path / "store2"
        runner.invoke(main, ["prelabel", "--in", str(golden_path), "--store", str(store)])
        result = runner.invoke(main, ["prelabel", "--in", str(golden_path), "--store", str(store)])
        assert "enqueued 0 of 5" in result.output


class TestLexiconCheck:
    def test_default_lexicon_ok(self, runner):
        result = runner.invoke(main, ["lexicon", "check"])
        assert result.exit_code == 0
        assert "lexicon ok" in result.output

    def test_broken_lexicon_exit_1(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"entries": []}')
        result = runner.invoke(main, ["lexicon", "check", "--file", str(bad)])
        assert result.exit_code == 1


class TestLabelStrings:
    def test_extract_output_feeds_eval(self, runner, golden_path, tmp_path):
        pred = tmp_path / "pred.jsonl"
        runner.invoke(main, ["extract", "--in", str(golden_path), "--out", str(pred)])
        result = runner.invoke(
            main, ["eval", "--pred", str(pred), "--gold", str(golden_path)]
        )
        assert result.exit_code == 0, result.output
        # rules engine is exact on the golden five
        assert "P 1.00 R 1.00 F1 1.00" in result.output
