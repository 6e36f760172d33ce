"""Two-level scoring: presence-level confusion metrics and name-level accuracy.

Presence level collapses the three-way label to vaccine-present (Named or
Unspecified) versus absent (No) and scores TP/TN/FP/FN with precision, recall
and F1. Name level scores whether the predicted identity is right, judged
through the lexicon's equivalence relation, plus the exact-match rate (raw
response string-equal to the gold label, a proxy for post-processing burden).

Alignment is by note id, never by position: batch engines may drop notes.

Display rounding matches the reference tables: half-up applied from the
thousandths place through to two decimals (so 0.97479 displays as 0.98).
Full-precision values are always retained alongside.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence, Union

from .corpus import Dataset
from .errors import VaxtriageError
from .labels import ExtractionResult, LabelVariant, VaccineLabel
from .lexicon import Lexicon

SCHEMA_VERSION = "1"


class EvaluationError(VaxtriageError, ValueError):
    pass


@dataclass(frozen=True)
class Prediction:
    """One engine output keyed by note id.

    raw is the pre-normalization response string used for exact-match
    scoring; engines that emit no free text (the rule engine) use their
    canonical label string.
    """

    note_id: str
    label: VaccineLabel
    raw: Optional[str] = None

    @property
    def raw_string(self) -> str:
        return self.raw if self.raw is not None else self.label.to_string()


@dataclass(frozen=True)
class GoldLabel:
    note_id: str
    label: VaccineLabel


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    flags: tuple[str, ...] = ()


@dataclass
class EvalReport:
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    name_correct_all: tuple[int, int]
    name_correct_unspecified: tuple[int, int]
    exact_match: tuple[int, int]
    per_note: list[dict]
    flags: list[str] = field(default_factory=list)
    lexicon_version: str = "unversioned"
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "lexicon_version": self.lexicon_version,
            "counts": {"tp": self.counts.tp, "tn": self.counts.tn,
                       "fp": self.counts.fp, "fn": self.counts.fn},
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "name_correct_all": list(self.name_correct_all),
            "name_correct_unspecified": list(self.name_correct_unspecified),
            "exact_match": list(self.exact_match),
            "flags": list(self.flags),
            "per_note": self.per_note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            counts=ConfusionCounts(**d["counts"]),
            precision=d["precision"],
            recall=d["recall"],
            f1=d["f1"],
            name_correct_all=tuple(d["name_correct_all"]),
            name_correct_unspecified=tuple(d["name_correct_unspecified"]),
            exact_match=tuple(d["exact_match"]),
            per_note=d["per_note"],
            flags=list(d.get("flags", [])),
            lexicon_version=d.get("lexicon_version", "unversioned"),
            schema_version=d.get("schema_version", SCHEMA_VERSION),
        )

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))


# -- rounding for display -----------------------------------------------------


def round_half_up(x: float, places: int) -> float:
    return float(Decimal(repr(x)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def display_rate(x: float) -> float:
    """Two-decimal display value: half-up via the thousandths place."""
    return round_half_up(round_half_up(x, 3), 2)


def display_percent(x: float, decimals: int = 1) -> float:
    """Percentage display (0..100) at the given precision, half-up."""
    return round_half_up(100.0 * x, decimals)


# -- scoring ------------------------------------------------------------------


def binarize(label: VaccineLabel) -> bool:
    """Presence-level simplification: Named and Unspecified are present, No is absent."""
    return label.variant is not LabelVariant.NO


GoldsInput = Union[Dataset, Sequence[GoldLabel]]


def _gold_map(golds: GoldsInput) -> dict[str, VaccineLabel]:
    if isinstance(golds, Dataset):
        mapping = {}
        for note in golds.notes:
            if note.gold is None:
                raise EvaluationError(f"note {note.id!r} has no gold label")
            mapping[note.id] = note.gold
        return mapping
    mapping = {}
    for g in golds:
        if g.note_id in mapping:
            raise EvaluationError(f"duplicate gold id {g.note_id!r}")
        mapping[g.note_id] = g.label
    return mapping


def _aligned(predictions: Sequence[Prediction], golds: GoldsInput) -> list[tuple[Prediction, VaccineLabel]]:
    gold_map = _gold_map(golds)
    pred_ids = [p.note_id for p in predictions]
    if len(set(pred_ids)) != len(pred_ids):
        dupes = sorted({i for i in pred_ids if pred_ids.count(i) > 1})
        raise EvaluationError(f"duplicate prediction ids: {dupes}")
    missing = sorted(set(gold_map) - set(pred_ids))
    extra = sorted(set(pred_ids) - set(gold_map))
    if missing or extra:
        raise EvaluationError(
            f"id mismatch between predictions and golds: missing={missing[:5]} extra={extra[:5]}"
        )
    return [(p, gold_map[p.note_id]) for p in predictions]


def confusion(predictions: Sequence[Prediction], golds: GoldsInput) -> ConfusionCounts:
    tp = tn = fp = fn = 0
    for pred, gold in _aligned(predictions, golds):
        p, g = binarize(pred.label), binarize(gold)
        if p and g:
            tp += 1
        elif not p and not g:
            tn += 1
        elif p and not g:
            fp += 1
        else:
            fn += 1
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def metrics(counts: ConfusionCounts) -> Metrics:
    """Precision/recall/F1 at full precision; zero denominators yield 0, flagged."""
    flags = []
    if counts.tp + counts.fp > 0:
        precision = counts.tp / (counts.tp + counts.fp)
    else:
        precision, flags = 0.0, flags + ["precision-zero-denominator"]
    if counts.tp + counts.fn > 0:
        recall = counts.tp / (counts.tp + counts.fn)
    else:
        recall, flags = 0.0, flags + ["recall-zero-denominator"]
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1, flags = 0.0, flags + ["f1-zero-denominator"]
    return Metrics(precision=precision, recall=recall, f1=f1, flags=tuple(flags))


def _name_correct(pred: VaccineLabel, gold: VaccineLabel, lexicon: Lexicon) -> bool:
    if gold.variant is LabelVariant.NO:
        return pred.variant is LabelVariant.NO
    if gold.variant is LabelVariant.UNSPECIFIED:
        return pred.variant is LabelVariant.UNSPECIFIED
    if pred.variant is not LabelVariant.NAMED:
        return False
    pred_name = pred.surface or pred.canonical_id or ""
    return lexicon.equivalent(pred_name, gold.canonical_id or "")


def name_accuracy(
    predictions: Sequence[Prediction],
    golds: GoldsInput,
    lexicon: Lexicon,
) -> tuple[tuple[int, int], tuple[int, int]]:
    """((correct, total) overall, (correct, total) on the gold-Unspecified subset)."""
    overall_correct = overall_total = 0
    unspec_correct = unspec_total = 0
    for pred, gold in _aligned(predictions, golds):
        correct = _name_correct(pred.label, gold, lexicon)
        overall_total += 1
        overall_correct += correct
        if gold.variant is LabelVariant.UNSPECIFIED:
            unspec_total += 1
            unspec_correct += correct
    return (overall_correct, overall_total), (unspec_correct, unspec_total)


def exact_match_rate(
    predictions: Sequence[Prediction],
    golds: GoldsInput,
) -> tuple[int, int, float]:
    """Count of raw strings equal to the gold label string (trimmed, case-sensitive)."""
    pairs = _aligned(predictions, golds)
    if not pairs:
        raise EvaluationError("exact-match rate is undefined for an empty input set")
    count = sum(
        1 for pred, gold in pairs
        if pred.raw_string.strip() == gold.to_string().strip()
    )
    return count, len(pairs), count / len(pairs)


def report(
    predictions: Sequence[Prediction],
    golds: GoldsInput,
    lexicon: Lexicon,
) -> EvalReport:
    """Full two-level report with per-note drill-down."""
    pairs = _aligned(predictions, golds)
    if not pairs:
        raise EvaluationError("cannot build a report from zero predictions")
    counts = confusion(predictions, golds)
    m = metrics(counts)
    name_all, name_unspec = name_accuracy(predictions, golds, lexicon)
    exact_count, exact_total, _ = exact_match_rate(predictions, golds)

    per_note = []
    for pred, gold in pairs:
        p, g = binarize(pred.label), binarize(gold)
        outcome = ("TP" if g else "FP") if p else ("FN" if g else "TN")
        per_note.append(
            {
                "id": pred.note_id,
                "gold": gold.to_string(),
                "predicted": pred.label.to_string(),
                "presence": outcome,
                "name_correct": _name_correct(pred.label, gold, lexicon),
                "exact": pred.raw_string.strip() == gold.to_string().strip(),
            }
        )

    return EvalReport(
        counts=counts,
        precision=m.precision,
        recall=m.recall,
        f1=m.f1,
        name_correct_all=name_all,
        name_correct_unspecified=name_unspec,
        exact_match=(exact_count, exact_total),
        per_note=per_note,
        flags=list(m.flags),
        lexicon_version=lexicon.version,
    )


# -- rendering ----------------------------------------------------------------


def render_presence_table(rep: EvalReport, row_label: str = "engine") -> str:
    header = f"{'Run':<16}{'TP':>5}{'TN':>5}{'FN':>5}{'FP':>5}{'Precision':>11}{'Recall':>8}{'F1':>6}"
    c = rep.counts
    row = (
        f"{row_label:<16}{c.tp:>5}{c.tn:>5}{c.fn:>5}{c.fp:>5}"
        f"{display_rate(rep.precision):>11.2f}{display_rate(rep.recall):>8.2f}"
        f"{display_rate(rep.f1):>6.2f}"
    )
    return "\n".join([header, row])


def render_name_table(rep: EvalReport) -> str:
    uc, ut = rep.name_correct_unspecified
    ac, at = rep.name_correct_all
    ec, et = rep.exact_match
    lines = [
        f"{'Subset':<20}{'Correct':>9}{'Incorrect':>11}{'% Correct':>11}",
        f"{f'Unspecified ({ut})':<20}{uc:>9}{ut - uc:>11}"
        f"{display_percent(uc / ut if ut else 0.0, 0):>10.0f}%",
        f"{f'All ({at})':<20}{ac:>9}{at - ac:>11}"
        f"{display_percent(ac / at if at else 0.0, 1):>10.1f}%",
        f"Exact match: {ec}/{et} = {display_percent(ec / et if et else 0.0, 1):.1f}%",
    ]
    return "\n".join(lines)


def render_summary(rep: EvalReport) -> str:
    return (
        f"P {display_rate(rep.precision):.2f} "
        f"R {display_rate(rep.recall):.2f} "
        f"F1 {display_rate(rep.f1):.2f}"
    )


def predictions_from_results(
    notes: Sequence, results: Sequence[ExtractionResult]
) -> list[Prediction]:
    """Pair engine results with their notes, carrying raw strings when present."""
    if len(notes) != len(results):
        raise EvaluationError("notes and results differ in length")
    preds = []
    for note, result in zip(notes, results):
        preds.append(
            Prediction(
                note_id=note.id,
                label=result.label,
                raw=result.exact_match_surface,
            )
        )
    return preds


def golds_from_dataset(dataset: Dataset) -> list[GoldLabel]:
    golds = []
    for note in dataset.notes:
        if note.gold is None:
            raise EvaluationError(f"note {note.id!r} has no gold label")
        golds.append(GoldLabel(note_id=note.id, label=note.gold))
    return golds
