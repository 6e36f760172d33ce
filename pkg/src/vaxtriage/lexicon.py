"""Canonical vaccine identities, synonym surfaces, and the equivalence relation.

The lexicon file is the codified judging rubric for name-level scoring: two
strings are the "same vaccine" exactly when this module says so. It also
carries the trigger vocabularies the rule engine runs on (generic vaccination
words, injection words with their exclusion contexts, and future-tense cues).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Optional, Union

from .errors import VaxtriageError
from .text import fold, word_count

ENTRY_KINDS = ("disease-named", "brand", "schedule-point")

_SCHEDULE_ID_RE = re.compile(r"^(\d+)\s*(week|weeks|month|months|year|years)$", re.I)

WEEKS_PER_MONTH = 52.0 / 12.0


class LexiconError(VaxtriageError, ValueError):
    pass


@dataclass(frozen=True)
class VaccineEntry:
    canonical_id: str
    surfaces: frozenset[str]
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ENTRY_KINDS:
            raise LexiconError(f"{self.canonical_id}: unknown kind {self.kind!r}")
        if fold(self.canonical_id) not in {fold(s) for s in self.surfaces}:
            raise LexiconError(
                f"{self.canonical_id}: canonical id must appear in its own surface set"
            )


class Lexicon:
    """Immutable after construction; safe for concurrent readers."""

    def __init__(
        self,
        entries: Iterable[VaccineEntry],
        generic_triggers: Iterable[str],
        injection_words: Iterable[str],
        non_vaccine_context: Iterable[str],
        future_cues: Iterable[str],
        version: str = "unversioned",
    ) -> None:
        self.entries: tuple[VaccineEntry, ...] = tuple(entries)
        self.generic_triggers = frozenset(generic_triggers)
        self.injection_words = frozenset(injection_words)
        self.non_vaccine_context = frozenset(non_vaccine_context)
        self.future_cues = frozenset(future_cues)
        self.version = version
        self._validate()
        self._surface_to_canonical: dict[str, str] = {}
        self._surface_raw: dict[str, str] = {}
        for entry in self.entries:
            for surface in entry.surfaces:
                key = fold(surface)
                owner = self._surface_to_canonical.get(key)
                if owner is not None and owner != entry.canonical_id:
                    raise LexiconError(
                        f"ambiguous surface {surface!r}: maps to both "
                        f"{owner} and {entry.canonical_id}"
                    )
                self._surface_to_canonical[key] = entry.canonical_id
                self._surface_raw.setdefault(key, surface)
        self._max_surface_tokens = max(
            (word_count(s) for e in self.entries for s in e.surfaces), default=1
        )

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        if not self.entries:
            raise LexiconError("lexicon has no entries")
        for name, values in (
            ("generic_triggers", self.generic_triggers),
            ("injection_words", self.injection_words),
            ("non_vaccine_context", self.non_vaccine_context),
            ("future_cues", self.future_cues),
        ):
            if not values:
                raise LexiconError(f"required set {name} is empty")
        seen_ids: set[str] = set()
        for entry in self.entries:
            if entry.canonical_id in seen_ids:
                raise LexiconError(f"duplicate canonical_id {entry.canonical_id!r}")
            seen_ids.add(entry.canonical_id)
        trigger_folds = {fold(t) for t in self.generic_triggers}
        for entry in self.entries:
            for surface in entry.surfaces:
                if fold(surface) in trigger_folds:
                    raise LexiconError(
                        f"surface {surface!r} of {entry.canonical_id} collides "
                        "with a generic trigger"
                    )

    # -- lookups ------------------------------------------------------------

    def canonical_of(self, surface: str) -> Optional[str]:
        """Case- and punctuation-insensitive lookup; None when unknown."""
        return self._surface_to_canonical.get(fold(surface))

    def equivalent(self, a: str, b: str) -> bool:
        """True when a and b denote the same vaccine identity.

        Known surfaces compare through their canonical ids; unknown strings
        compare by fold, so a literal echo of an unknown name still matches
        itself.
        """
        ca = self.canonical_of(a)
        cb = self.canonical_of(b)
        if ca is not None and ca == cb:
            return True
        return fold(a) == fold(b)

    def entry(self, canonical_id: str) -> Optional[VaccineEntry]:
        for e in self.entries:
            if e.canonical_id == canonical_id:
                return e
        return None

    def canonical_ids(self) -> list[str]:
        return [e.canonical_id for e in self.entries]

    def named_surface_index(self, include_schedule_points: bool = False) -> dict[str, tuple[str, str]]:
        """fold(surface) -> (canonical_id, original surface) for text matching.

        Schedule-point entries are excluded by default: bare age phrases in a
        triage note describe the patient, not a vaccine; schedule labels are
        inferred by the rule engine's schedule logic instead.
        """
        index: dict[str, tuple[str, str]] = {}
        for entry in self.entries:
            if entry.kind == "schedule-point" and not include_schedule_points:
                continue
            for surface in entry.surfaces:
                index[fold(surface)] = (entry.canonical_id, surface)
        return index

    @property
    def max_surface_tokens(self) -> int:
        return self._max_surface_tokens

    def schedule_points(self) -> list[tuple[str, float]]:
        """(canonical_id, age in weeks) for every schedule-point entry."""
        points = []
        for entry in self.entries:
            if entry.kind != "schedule-point":
                continue
            weeks = parse_age_quantity_weeks(entry.canonical_id)
            if weeks is None:
                raise LexiconError(
                    f"schedule-point id {entry.canonical_id!r} is not an age quantity"
                )
            points.append((entry.canonical_id, weeks))
        return points


def parse_age_quantity_weeks(s: str) -> Optional[float]:
    """Convert an age-quantity phrase ("6 weeks", "4 months") to weeks."""
    m = _SCHEDULE_ID_RE.match(s.strip())
    if not m:
        return None
    n = int(m.group(1))
    unit = m.group(2).lower()
    if unit.startswith("week"):
        return float(n)
    if unit.startswith("month"):
        return n * WEEKS_PER_MONTH
    return n * 52.0


# -- loading ----------------------------------------------------------------


def load_lexicon(source: Union[IO[bytes], IO[str], bytes, str]) -> Lexicon:
    """Load and validate a lexicon from its JSON encoding.

    Invariant violations are hard errors naming the offending surface or set.
    """
    if hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        data = source
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LexiconError(f"lexicon is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise LexiconError(f"lexicon is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise LexiconError("lexicon root must be a JSON object")
    try:
        raw_entries = doc["entries"]
        entries = [
            VaccineEntry(
                canonical_id=e["canonical_id"],
                surfaces=frozenset(e["surfaces"]),
                kind=e.get("kind", "disease-named"),
            )
            for e in raw_entries
        ]
        return Lexicon(
            entries=entries,
            generic_triggers=doc["generic_triggers"],
            injection_words=doc["injection_words"],
            non_vaccine_context=doc["non_vaccine_context"],
            future_cues=doc["future_cues"],
            version=doc.get("version", "unversioned"),
        )
    except KeyError as exc:
        raise LexiconError(f"lexicon missing required key: {exc}") from exc


def load_default_lexicon() -> Lexicon:
    """The lexicon shipped with the package."""
    text = resources.files("vaxtriage").joinpath("data/lexicon.json").read_text("utf-8")
    return load_lexicon(text)
