"""Independent naive scorer used to cross-check the evaluator.

Deliberately shares no code with the package: it re-reads the lexicon JSON
itself, re-implements folding inline, and scores with plain loops over
(id -> outcome) dictionaries. Keep it dumb; its value is independence.
"""

from __future__ import annotations

import json
import re
from importlib import resources


def _fold(s: str) -> str:
    return re.sub(r"[^a-z0-9]+", "", s.lower())


def load_synonym_map() -> dict[str, str]:
    """fold(surface) -> canonical_id straight from the shipped lexicon JSON."""
    text = resources.files("vaxtriage").joinpath("data/lexicon.json").read_text("utf-8")
    doc = json.loads(text)
    mapping: dict[str, str] = {}
    for entry in doc["entries"]:
        for surface in entry["surfaces"]:
            mapping[_fold(surface)] = entry["canonical_id"]
    return mapping


def naive_present(variant: str) -> bool:
    return variant in ("Named", "Unspecified")


def naive_confusion(preds: list[dict], golds: list[dict]) -> dict[str, int]:
    gold_by_id = {g["id"]: g for g in golds}
    counts = {"tp": 0, "tn": 0, "fp": 0, "fn": 0}
    for p in preds:
        g = gold_by_id[p["id"]]
        pp = naive_present(p["variant"])
        gp = naive_present(g["variant"])
        if pp and gp:
            counts["tp"] += 1
        if not pp and not gp:
            counts["tn"] += 1
        if pp and not gp:
            counts["fp"] += 1
        if not pp and gp:
            counts["fn"] += 1
    return counts


def naive_metrics(counts: dict[str, int]) -> tuple[float, float, float]:
    tp, fp, fn = counts["tp"], counts["fp"], counts["fn"]
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def naive_same_name(a: str, b: str, synonyms: dict[str, str]) -> bool:
    ca = synonyms.get(_fold(a))
    cb = synonyms.get(_fold(b))
    if ca is not None and ca == cb:
        return True
    return _fold(a) == _fold(b)


def naive_name_accuracy(
    preds: list[dict], golds: list[dict], synonyms: dict[str, str]
) -> tuple[tuple[int, int], tuple[int, int]]:
    gold_by_id = {g["id"]: g for g in golds}
    correct_all = 0
    correct_unspec = 0
    total_unspec = 0
    for p in preds:
        g = gold_by_id[p["id"]]
        if g["variant"] == "No":
            ok = p["variant"] == "No"
        elif g["variant"] == "Unspecified":
            ok = p["variant"] == "Unspecified"
        else:
            pred_name = p.get("surface") or p.get("canonical") or ""
            ok = p["variant"] == "Named" and naive_same_name(
                pred_name, g["canonical"], synonyms
            )
        correct_all += ok
        if g["variant"] == "Unspecified":
            total_unspec += 1
            correct_unspec += ok
    return (correct_all, len(preds)), (correct_unspec, total_unspec)


def naive_exact(preds: list[dict], golds: list[dict]) -> tuple[int, int]:
    gold_by_id = {g["id"]: g for g in golds}
    count = 0
    for p in preds:
        g = gold_by_id[p["id"]]
        gold_string = g["canonical"] if g["variant"] == "Named" else g["variant"]
        if p["raw"].strip() == gold_string.strip():
            count += 1
    return count, len(preds)
