"""Triage-note datasets: loading, validation, the age prefix, and synthesis.

Notes are stored age-split: the structured age fields plus the shorthand text
that follows the prefix. JSONL is the canonical on-disk format; CSV is
import-only.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Optional, Union

from .errors import VaxtriageError
from .labels import VaccineLabel

JSONL_FIELDS = ("id", "age_years", "age_months", "text", "gold")
CSV_COLUMNS = ("id", "age_years", "age_months", "text", "gold")


class CorpusError(VaxtriageError, ValueError):
    pass


class MalformedRecord(CorpusError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateId(CorpusError):
    def __init__(self, note_id: str, line: Optional[int] = None) -> None:
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate note id {note_id!r}{where}")
        self.note_id = note_id


class MissingAgePrefix(CorpusError):
    pass


class AgeOutOfRange(CorpusError):
    pass


@dataclass(frozen=True)
class TriageNote:
    """One ED presentation: identifier, structured age, shorthand text, optional gold."""

    id: str
    age_years: int
    age_months: int
    text: str
    gold: Optional[VaccineLabel] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("note id must be non-empty")
        if self.age_years < 0:
            raise CorpusError(f"{self.id}: age_years must be non-negative")
        if not 0 <= self.age_months < 12:
            raise CorpusError(f"{self.id}: age_months must be in 0..11")
        if not self.text.strip():
            raise CorpusError(f"{self.id}: text must be non-empty after trimming")

    @property
    def age_total_months(self) -> int:
        return 12 * self.age_years + self.age_months

    def age_prefix(self) -> str:
        return f"Age: {self.age_years}Y {self.age_months}M."


@dataclass(frozen=True)
class Dataset:
    notes: tuple[TriageNote, ...]
    name: str = "dataset"

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for note in self.notes:
            if note.id in seen:
                raise DuplicateId(note.id)
            seen.add(note.id)

    def __len__(self) -> int:
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)

    def note(self, note_id: str) -> TriageNote:
        for n in self.notes:
            if n.id == note_id:
                return n
        raise CorpusError(f"no note with id {note_id!r}")

    def class_counts(self) -> tuple[int, int]:
        """(vaccine-present, vaccine-absent) over gold-labeled notes."""
        present = sum(
            1 for n in self.notes if n.gold is not None and n.gold.variant.value != "No"
        )
        absent = sum(
            1 for n in self.notes if n.gold is not None and n.gold.variant.value == "No"
        )
        return present, absent


# -- age prefix ---------------------------------------------------------------

_AGE_RE = re.compile(
    r"""^\s*age\s*:\s*
        (?:(?P<y>\d+)\s*y(?:rs?|ears?)?\s*\.?)?
        \s*
        (?:(?P<m>\d+)\s*m(?:o|ths?|onths?)?\s*\.?)?
    """,
    re.IGNORECASE | re.VERBOSE,
)


def parse_age_prefix(raw: str) -> tuple[int, int, str]:
    """Split "Age: <Y>Y <M>M. <text>" into (years, months, remainder).

    Tolerates extra spaces ("13Y 2 M"), a missing years component ("5M."),
    and an optional trailing period. A months-only value of 12 or more is
    normalized into years+months; months >= 12 alongside an explicit years
    component is an error.
    """
    m = _AGE_RE.match(raw)
    if not m or (m.group("y") is None and m.group("m") is None):
        raise MissingAgePrefix(f"no recognizable age prefix in {raw[:40]!r}")
    years = int(m.group("y")) if m.group("y") is not None else 0
    months = int(m.group("m")) if m.group("m") is not None else 0
    if months >= 12:
        if m.group("y") is not None:
            raise AgeOutOfRange(f"months component {months} must be < 12")
        years, months = divmod(months, 12)
    remainder = raw[m.end():]
    remainder = remainder.lstrip()
    if remainder.startswith("."):
        remainder = remainder[1:].lstrip()
    return years, months, remainder


# -- loading ------------------------------------------------------------------


def _coerce_text(source: Union[IO[bytes], IO[str], bytes, str]) -> str:
    if hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        data = source
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusError(f"input is not valid UTF-8: {exc}") from exc
    return data


def _parse_gold(value, line: int, lexicon) -> Optional[VaccineLabel]:
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise MalformedRecord(line, f"gold must be a string, got {type(value).__name__}")
    try:
        return VaccineLabel.from_string(value, lexicon)
    except VaxtriageError as exc:
        raise MalformedRecord(line, str(exc)) from exc


def _build_note(record: dict, line: int, lexicon) -> TriageNote:
    missing = [k for k in ("id", "age_years", "age_months", "text") if k not in record]
    if missing:
        raise MalformedRecord(line, f"missing fields: {', '.join(missing)}")
    unknown = [k for k in record if k not in JSONL_FIELDS]
    if unknown:
        raise MalformedRecord(line, f"unknown fields: {', '.join(sorted(unknown))}")
    try:
        note = TriageNote(
            id=str(record["id"]),
            age_years=int(record["age_years"]),
            age_months=int(record["age_months"]),
            text=str(record["text"]),
            gold=_parse_gold(record.get("gold"), line, lexicon),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MalformedRecord):
            raise
        raise MalformedRecord(line, str(exc)) from exc
    return note


def load_notes(
    source: Union[IO[bytes], IO[str], bytes, str],
    format: str = "jsonl",
    name: str = "dataset",
    lexicon=None,
) -> Dataset:
    """Load a dataset from a JSONL or CSV byte stream.

    Malformed records are rejected with their line number; duplicate ids are
    rejected naming the id. When a lexicon is supplied, gold label strings are
    validated against it (unknown names are errors).
    """
    text = _coerce_text(source)
    if format == "jsonl":
        notes = _load_jsonl(text, lexicon)
    elif format == "csv":
        notes = _load_csv(text, lexicon)
    else:
        raise CorpusError(f"unknown format {format!r} (expected jsonl or csv)")
    seen: dict[str, int] = {}
    for note, line in notes:
        if note.id in seen:
            raise DuplicateId(note.id, line)
        seen[note.id] = line
    return Dataset(notes=tuple(n for n, _ in notes), name=name)


def _load_jsonl(text: str, lexicon) -> list[tuple[TriageNote, int]]:
    notes: list[tuple[TriageNote, int]] = []
    # LF-delimited by contract; splitlines() would also break on stray
    # unicode line separators (U+0085 etc.) that JSON leaves unescaped
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise MalformedRecord(line_no, "record must be a JSON object")
        notes.append((_build_note(record, line_no, lexicon), line_no))
    return notes


def _load_csv(text: str, lexicon) -> list[tuple[TriageNote, int]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    required = [c for c in ("id", "age_years", "age_months", "text") if c not in reader.fieldnames]
    if required:
        raise MalformedRecord(1, f"missing CSV columns: {', '.join(required)}")
    unknown = [c for c in reader.fieldnames if c not in CSV_COLUMNS]
    if unknown:
        raise MalformedRecord(1, f"unknown CSV columns: {', '.join(unknown)}")
    notes: list[tuple[TriageNote, int]] = []
    for line_no, row in enumerate(reader, start=2):
        record = {k: v for k, v in row.items() if v not in (None, "")}
        notes.append((_build_note(record, line_no, lexicon), line_no))
    return notes


def save_notes(dataset: Dataset, out: Union[IO[str], IO[bytes], None] = None) -> str:
    """Serialize to canonical JSONL (UTF-8, LF, fields in schema order)."""
    lines = []
    for note in dataset.notes:
        record: dict = {
            "id": note.id,
            "age_years": note.age_years,
            "age_months": note.age_months,
            "text": note.text,
        }
        if note.gold is not None:
            record["gold"] = note.gold.to_string()
        lines.append(json.dumps(record, ensure_ascii=False))
    payload = "\n".join(lines) + ("\n" if lines else "")
    if out is not None:
        if isinstance(out, io.TextIOBase):
            out.write(payload)
        else:
            out.write(payload.encode("utf-8"))  # type: ignore[union-attr]
    return payload


# -- synthesis ----------------------------------------------------------------


@dataclass(frozen=True)
class NoteTemplate:
    """A synthetic-note pattern with its declared gold label.

    Ages may be pinned (schedule-point patterns need a coherent age) or drawn
    from the given inclusive ranges.
    """

    text: str
    gold: str
    age_years: Optional[int] = None
    age_months: Optional[int] = None
    age_years_range: tuple[int, int] = (0, 14)
    age_months_range: tuple[int, int] = (0, 11)

    @property
    def is_vaccine_present(self) -> bool:
        return self.gold.strip().lower() != "no"


def load_templates(source: Union[IO[bytes], IO[str], bytes, str, None] = None) -> list[NoteTemplate]:
    """Load note templates; defaults to the versioned set shipped with the package."""
    if source is None:
        text = resources.files("vaxtriage").joinpath("data/templates.json").read_text("utf-8")
    else:
        text = _coerce_text(source)
    doc = json.loads(text)
    templates = []
    for t in doc["templates"]:
        templates.append(
            NoteTemplate(
                text=t["text"],
                gold=t["gold"],
                age_years=t.get("age_years"),
                age_months=t.get("age_months"),
                age_years_range=tuple(t.get("age_years_range", (0, 14))),
                age_months_range=tuple(t.get("age_months_range", (0, 11))),
            )
        )
    return templates


def generate_synthetic(
    seed: int,
    n: int,
    vaccine_fraction: float,
    templates: Iterable[NoteTemplate],
    name: str = "synthetic",
) -> Dataset:
    """Deterministic template-based corpus with a controlled class balance.

    Pure function of (seed, n, vaccine_fraction, templates): the same inputs
    produce byte-identical datasets. The number of vaccine-present notes is
    round(n * vaccine_fraction), which keeps the balance within one note of
    the requested fraction.
    """
    templates = list(templates)
    if n < 1:
        raise CorpusError("n must be >= 1")
    if not 0.0 <= vaccine_fraction <= 1.0:
        raise CorpusError("vaccine_fraction must be in [0, 1]")
    if not templates:
        raise CorpusError("template set is empty")
    present_pool = [t for t in templates if t.is_vaccine_present]
    absent_pool = [t for t in templates if not t.is_vaccine_present]
    n_present = int(n * vaccine_fraction + 0.5)
    n_absent = n - n_present
    if n_present > 0 and not present_pool:
        raise CorpusError("no vaccine-present templates available")
    if n_absent > 0 and not absent_pool:
        raise CorpusError("no vaccine-absent templates available")

    rng = random.Random(seed)
    picks = [rng.choice(present_pool) for _ in range(n_present)]
    picks += [rng.choice(absent_pool) for _ in range(n_absent)]
    rng.shuffle(picks)

    notes = []
    for i, tpl in enumerate(picks, start=1):
        years = tpl.age_years if tpl.age_years is not None else rng.randint(*tpl.age_years_range)
        months = tpl.age_months if tpl.age_months is not None else rng.randint(*tpl.age_months_range)
        notes.append(
            TriageNote(
                id=f"syn-{i:04d}",
                age_years=years,
                age_months=months,
                text=tpl.text,
                gold=VaccineLabel.from_string(tpl.gold),
            )
        )
    return Dataset(notes=tuple(notes), name=name)
