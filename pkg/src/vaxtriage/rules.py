"""Deterministic baseline extractor over idiosyncratic triage shorthand.

The cascade mirrors the extraction instructions the LLM engine is given:

1. a named vaccine beats everything ("flu vax 2/7 ago" -> Influenza);
2. otherwise a generic vaccination word means Unspecified ("post immms");
3. injection words only count when nothing nearby marks them as a
   non-vaccine injection ("insulin injection" -> nothing);
4. a future cue shortly before a mention cancels it ("due for flu vaccine");
5. an age-quantity next to a generic trigger, or an infant at a schedule
   age, upgrades Unspecified to the schedule-point identity
   ("6wo vaccinations yesterday" at age 1 month -> "6 weeks").

Everything here is a pure function of (note, lexicon, config): no shared
state, safe to run across notes in parallel.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .corpus import TriageNote
from .labels import ExtractionResult, VaccineLabel
from .lexicon import Lexicon, WEEKS_PER_MONTH
from .text import fold

_TOKEN_RE = re.compile(
    r"(?P<frac>\d+/\d+)"
    r"|(?P<word>[A-Za-z0-9]+(?:['’-][A-Za-z0-9]+)*)"
    r"|(?P<bound>[.;])"
)

_AGE_QTY_RE = re.compile(
    r"^(\d+)(w|wk|wks|wo|week|weeks|m|mo|mos|mth|mths|month|months|y|yr|yrs|year|years)$"
)

_UNIT_WEEKS = {
    "w": 1.0, "wk": 1.0, "wks": 1.0, "wo": 1.0, "week": 1.0, "weeks": 1.0,
    "m": WEEKS_PER_MONTH, "mo": WEEKS_PER_MONTH, "mos": WEEKS_PER_MONTH,
    "mth": WEEKS_PER_MONTH, "mths": WEEKS_PER_MONTH,
    "month": WEEKS_PER_MONTH, "months": WEEKS_PER_MONTH,
    "y": 52.0, "yr": 52.0, "yrs": 52.0, "year": 52.0, "years": 52.0,
}

# Wording that says a vaccination already happened; consulted only by the
# age-based schedule inference.
_PAST_CUES = frozenset(
    ["yesterday", "today", "ago", "post", "recent", "recently", "earlier",
     "last", "prev", "previous", "am", "pm", "overnight", "tonight"]
)


@dataclass(frozen=True)
class Token:
    """One unit of normalized note text, with offsets back into the raw string."""

    text: str
    fold: str
    start: int
    end: int
    sent: int
    kind: str  # "word" | "fraction" | "boundary"

    @property
    def variants(self) -> frozenset[str]:
        spaced = re.sub(r"['’-]", " ", self.text)
        return frozenset({self.text, self.fold, spaced})


@dataclass(frozen=True)
class RuleConfig:
    """Tunables the reconstruction leaves open; defaults match the shipped docs."""

    future_cue_window: int = 4
    context_window: int = 3
    schedule_tolerance_weeks: float = 2.0
    fuzzy_generic: bool = True


DEFAULT_CONFIG = RuleConfig()


@dataclass(frozen=True)
class Match:
    """A candidate hit: token range [tok_start, tok_end) plus char span."""

    kind: str  # "named" | "generic" | "injection"
    surface: str
    span: tuple[int, int]
    tok_start: int
    tok_end: int
    canonical_id: Optional[str] = None
    matched_term: Optional[str] = None


def normalize_text(raw: str) -> list[Token]:
    """Tokenize shorthand into lowercased units.

    Hyphenated words stay single tokens but their fold erases the hyphen, so
    "rota-virus" is comparable with "rota virus" and "rotavirus". Clinical
    fraction shorthand ("2/7", "2/52") is kept whole. Sentence boundaries
    ("." and ";") are preserved as marker tokens.
    """
    if not raw or not raw.strip():
        raise ValueError("normalize_text requires non-empty text")
    tokens: list[Token] = []
    sent = 0
    for m in _TOKEN_RE.finditer(raw):
        if m.lastgroup == "bound":
            tokens.append(Token(m.group(), m.group(), m.start(), m.end(), sent, "boundary"))
            sent += 1
            continue
        kind = "fraction" if m.lastgroup == "frac" else "word"
        text = m.group().lower()
        tokens.append(Token(text, fold(text), m.start(), m.end(), sent, kind))
    return tokens


def word_tokens(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if t.kind != "boundary"]


def _edit_distance_leq1(a: str, b: str) -> bool:
    """True when levenshtein(a, b) <= 1, without building the full table."""
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la > lb:
        a, b, la, lb = b, a, lb, la
    i = 0
    while i < la and a[i] == b[i]:
        i += 1
    if la == lb:
        return a[i + 1:] == b[i + 1:]
    return a[i:] == b[i + 1:]


def _surface_text(words: list[Token], i: int, j: int) -> str:
    return " ".join(t.text for t in words[i:j])


def _windows(words: list[Token], max_len: int):
    """Same-sentence windows as (start, end, joined fold)."""
    n = len(words)
    for i in range(n):
        for k in range(min(max_len, n - i), 0, -1):
            window = words[i:i + k]
            if window[-1].sent != window[0].sent:
                continue
            yield i, i + k, "".join(t.fold for t in window)


def _resolve_overlaps(candidates: list[Match]) -> list[Match]:
    """Longest match wins; ties go to the leftmost. Result is in text order."""
    chosen: list[Match] = []
    ordered = sorted(
        candidates,
        key=lambda m: (-(m.tok_end - m.tok_start), -(m.span[1] - m.span[0]), m.tok_start),
    )
    for cand in ordered:
        overlaps = any(
            not (cand.tok_end <= c.tok_start or cand.tok_start >= c.tok_end)
            for c in chosen
        )
        if not overlaps:
            chosen.append(cand)
    return sorted(chosen, key=lambda m: m.tok_start)


def detect_named(tokens: list[Token], lexicon: Lexicon) -> list[Match]:
    """Case-insensitive longest-leftmost matching of entry surfaces."""
    words = word_tokens(tokens)
    index = lexicon.named_surface_index()
    candidates: list[Match] = []
    for i, j, key in _windows(words, lexicon.max_surface_tokens):
        hit = index.get(key)
        if hit is None:
            continue
        candidates.append(
            Match(
                kind="named",
                surface=_surface_text(words, i, j),
                span=(words[i].start, words[j - 1].end),
                tok_start=i,
                tok_end=j,
                canonical_id=hit[0],
            )
        )
    return _resolve_overlaps(candidates)


def detect_generic(
    tokens: list[Token],
    lexicon: Lexicon,
    config: RuleConfig = DEFAULT_CONFIG,
) -> list[Match]:
    """Vaccination-without-a-name mentions.

    Generic triggers match exactly, plus edit-distance-1 for triggers of
    length >= 4 (catches "immms"). Injection words count only when no
    non-vaccine context term sits within config.context_window word tokens
    on either side.
    """
    words = word_tokens(tokens)
    trigger_folds = {fold(t) for t in lexicon.generic_triggers}
    fuzzy_triggers = [t for t in trigger_folds if len(t) >= 4]
    max_trigger_len = max((len(t.split()) for t in lexicon.generic_triggers), default=1)
    injection_folds = {fold(t) for t in lexicon.injection_words}
    context_folds = {fold(t) for t in lexicon.non_vaccine_context}

    candidates: list[Match] = []

    # multi-token triggers via windows (exact only)
    if max_trigger_len > 1:
        for i, j, key in _windows(words, max_trigger_len):
            if j - i > 1 and key in trigger_folds:
                candidates.append(
                    Match("generic", _surface_text(words, i, j),
                          (words[i].start, words[j - 1].end), i, j, matched_term=key)
                )

    for idx, tok in enumerate(words):
        if tok.kind != "word":
            continue
        if tok.fold in trigger_folds:
            candidates.append(
                Match("generic", tok.text, (tok.start, tok.end), idx, idx + 1,
                      matched_term=tok.fold)
            )
            continue
        if config.fuzzy_generic:
            near = next(
                (t for t in sorted(fuzzy_triggers)
                 if _edit_distance_leq1(tok.fold, t)),
                None,
            )
            if near is not None:
                candidates.append(
                    Match("generic", tok.text, (tok.start, tok.end), idx, idx + 1,
                          matched_term=near)
                )
                continue
        if tok.fold in injection_folds:
            lo = max(0, idx - config.context_window)
            hi = min(len(words), idx + config.context_window + 1)
            nearby = {w.fold for w in words[lo:hi]}
            if nearby & context_folds:
                continue
            candidates.append(
                Match("injection", tok.text, (tok.start, tok.end), idx, idx + 1,
                      matched_term=tok.fold)
            )
    return _resolve_overlaps(candidates)


def future_filter(
    matches: list[Match],
    tokens: list[Token],
    lexicon: Lexicon,
    config: RuleConfig = DEFAULT_CONFIG,
) -> list[Match]:
    """Drop matches preceded by a future cue within the cue window.

    The window is config.future_cue_window word tokens immediately before the
    match, bounded by the sentence the match sits in: "due for flu vaccine"
    loses its match, "was due for imms last year, had flu vax yesterday"
    keeps the flu vax.
    """
    words = word_tokens(tokens)
    cue_folds = {fold(c) for c in lexicon.future_cues}
    max_cue_len = max((len(c.split()) for c in lexicon.future_cues), default=1)

    kept: list[Match] = []
    for m in matches:
        sent = words[m.tok_start].sent
        lo = max(0, m.tok_start - config.future_cue_window)
        cued = False
        for j in range(lo, m.tok_start):
            if words[j].sent != sent:
                continue
            for k in range(1, max_cue_len + 1):
                if j + k > m.tok_start:
                    break
                key = "".join(t.fold for t in words[j:j + k])
                if key in cue_folds:
                    cued = True
                    break
            if cued:
                break
        if not cued:
            kept.append(m)
    return kept


def _age_quantity_before(words: list[Token], idx: int) -> Optional[float]:
    """Weeks encoded by an age-quantity directly before token idx, if any."""
    if idx >= 1:
        m = _AGE_QTY_RE.match(words[idx - 1].fold)
        if m and words[idx - 1].sent == words[idx].sent:
            return int(m.group(1)) * _UNIT_WEEKS[m.group(2)]
    if idx >= 2 and words[idx - 2].sent == words[idx].sent:
        qty, unit = words[idx - 2].fold, words[idx - 1].fold
        if qty.isdigit() and unit in _UNIT_WEEKS:
            return int(qty) * _UNIT_WEEKS[unit]
    return None


def _nearest_schedule(weeks: float, lexicon: Lexicon, tolerance: float) -> Optional[str]:
    best: Optional[tuple[float, str]] = None
    for canonical, point_weeks in lexicon.schedule_points():
        dist = abs(point_weeks - weeks)
        if dist <= tolerance and (best is None or dist < best[0]):
            best = (dist, canonical)
    return best[1] if best else None


def schedule_point(
    note: TriageNote,
    generic_match: Match,
    lexicon: Lexicon,
    config: RuleConfig = DEFAULT_CONFIG,
    tokens: Optional[list[Token]] = None,
) -> Optional[str]:
    """Schedule-point identity for a surviving generic match, or None.

    Fires when an age-quantity token directly precedes the trigger
    ("6wo vaccinations", "4mo imms"), or when the patient's age falls within
    the configured tolerance of a schedule point and the sentence says the
    vaccination already happened.
    """
    if tokens is None:
        tokens = normalize_text(note.text)
    words = word_tokens(tokens)

    qty_weeks = _age_quantity_before(words, generic_match.tok_start)
    if qty_weeks is not None:
        hit = _nearest_schedule(qty_weeks, lexicon, config.schedule_tolerance_weeks)
        if hit is not None:
            return hit

    age_weeks = note.age_total_months * WEEKS_PER_MONTH
    hit = _nearest_schedule(age_weeks, lexicon, config.schedule_tolerance_weeks)
    if hit is not None:
        sent = words[generic_match.tok_start].sent
        if any(w.sent == sent and w.fold in _PAST_CUES for w in words):
            return hit
    return None


def extract(
    note: TriageNote,
    lexicon: Lexicon,
    config: RuleConfig = DEFAULT_CONFIG,
) -> ExtractionResult:
    """Run the full cascade over one note."""
    tokens = normalize_text(note.text)
    words = word_tokens(tokens)

    named = future_filter(detect_named(tokens, lexicon), tokens, lexicon, config)
    if named:
        first = named[0]
        return ExtractionResult(
            label=VaccineLabel.named(first.canonical_id, surface=first.surface),
            engine="rules",
            matched_span=first.span,
        )

    generic = future_filter(detect_generic(tokens, lexicon, config), tokens, lexicon, config)
    if generic:
        first = generic[0]
        schedule_id = schedule_point(note, first, lexicon, config, tokens=tokens)
        if schedule_id is not None:
            qty = _age_quantity_before(words, first.tok_start)
            if qty is not None:
                # include the age-quantity evidence in the span
                lead = first.tok_start - (2 if (
                    first.tok_start >= 2
                    and words[first.tok_start - 1].fold in _UNIT_WEEKS
                ) else 1)
                span = (words[lead].start, words[first.tok_end - 1].end)
                surface = _surface_text(words, lead, first.tok_end)
            else:
                span = first.span
                surface = first.surface
            return ExtractionResult(
                label=VaccineLabel.named(schedule_id, surface=surface),
                engine="rules",
                matched_span=span,
            )
        return ExtractionResult(
            label=VaccineLabel.unspecified(),
            engine="rules",
            matched_span=first.span,
        )

    return ExtractionResult(label=VaccineLabel.no(), engine="rules")
