"""Prompt construction, chat-completion client, and response normalization.

Works against any OpenAI-compatible endpoint: POST {base_url}/v1/chat/completions
with system+user messages, reading choices[0].message.content. The system
instruction block is a versioned package resource and is identical for every
note; only the user message varies.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import httpx

from .corpus import Dataset, TriageNote
from .errors import VaxtriageError
from .labels import ExtractionResult, VaccineLabel
from .lexicon import Lexicon
from .text import fold


class ModelCallError(VaxtriageError):
    pass


class ModelTimeout(ModelCallError):
    pass


class TransportError(ModelCallError):
    pass


class HttpStatusError(ModelCallError):
    def __init__(self, status: int, body_excerpt: str) -> None:
        super().__init__(f"HTTP {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class RetryExhausted(ModelCallError):
    pass


class ResponseParseError(VaxtriageError):
    """Raised when no stage of the repair cascade yields a label; carries the raw text."""

    def __init__(self, raw: str) -> None:
        super().__init__(f"could not parse model response: {raw[:120]!r}")
        self.raw = raw


@dataclass(frozen=True)
class Decoding:
    temperature: float = 0.0
    max_tokens: int = 64
    model_name: Optional[str] = None


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    decoding: Decoding


@dataclass(frozen=True)
class ModelEndpoint:
    base_url: str
    model_name: str
    auth_token: Optional[str] = None
    timeout: float = 30.0
    max_parallel_requests: int = 4
    retry_budget: int = 1

    def __post_init__(self) -> None:
        if self.max_parallel_requests < 1:
            raise VaxtriageError("max_parallel_requests must be >= 1")
        if self.timeout <= 0:
            raise VaxtriageError("timeout must be positive")


def load_system_prompt() -> str:
    """The versioned extraction instruction block, byte-for-byte."""
    return resources.files("vaxtriage").joinpath("data/prompt_system.txt").read_text("utf-8")


_SYSTEM_TEXT: Optional[str] = None


def _system_text() -> str:
    global _SYSTEM_TEXT
    if _SYSTEM_TEXT is None:
        _SYSTEM_TEXT = load_system_prompt()
    return _SYSTEM_TEXT


def build_prompt(note: TriageNote, decoding: Decoding = Decoding()) -> PromptBundle:
    """Deterministic prompt for one note.

    The user message reconstructs the age prefix and embeds the note text
    unmodified; any escaping is the transport layer's concern.
    """
    return PromptBundle(
        system_text=_system_text(),
        user_text=f"{note.age_prefix()} {note.text}",
        decoding=decoding,
    )


def call_model(endpoint: ModelEndpoint, bundle: PromptBundle) -> str:
    """One chat-completion round trip; returns the assistant text.

    Transient failures (timeouts, transport errors, 5xx) are retried up to
    endpoint.retry_budget times. Exhausted 5xx retries surface as
    RetryExhausted; exhausted transport failures re-raise their own class.
    Non-5xx HTTP errors are not retried.
    """
    url = endpoint.base_url.rstrip("/") + "/v1/chat/completions"
    payload = {
        "model": bundle.decoding.model_name or endpoint.model_name,
        "messages": [
            {"role": "system", "content": bundle.system_text},
            {"role": "user", "content": bundle.user_text},
        ],
        "temperature": bundle.decoding.temperature,
        "max_tokens": bundle.decoding.max_tokens,
    }
    headers = {}
    if endpoint.auth_token:
        headers["Authorization"] = f"Bearer {endpoint.auth_token}"

    attempts = endpoint.retry_budget + 1
    last_exc: Optional[ModelCallError] = None
    for _ in range(attempts):
        try:
            response = httpx.post(url, json=payload, headers=headers, timeout=endpoint.timeout)
        except httpx.TimeoutException as exc:
            last_exc = ModelTimeout(str(exc))
            continue
        except httpx.HTTPError as exc:
            last_exc = TransportError(str(exc))
            continue
        if response.status_code >= 500:
            last_exc = HttpStatusError(response.status_code, response.text[:200])
            continue
        if response.status_code >= 400:
            raise HttpStatusError(response.status_code, response.text[:200])
        try:
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise TransportError(f"malformed completion envelope: {exc}") from exc

    if isinstance(last_exc, HttpStatusError):
        raise RetryExhausted(
            f"gave up after {attempts} attempts, last: HTTP {last_exc.status}"
        ) from last_exc
    raise last_exc  # type: ignore[misc]


_FENCE_RE = re.compile(r"^\s*```[a-zA-Z0-9_-]*\s*\n?(.*?)\n?\s*```\s*$", re.DOTALL)


def _first_object_substring(raw: str) -> Optional[str]:
    """The first brace-balanced {...} substring, or None."""
    start = raw.find("{")
    if start < 0:
        return None
    depth = 0
    for i in range(start, len(raw)):
        if raw[i] == "{":
            depth += 1
        elif raw[i] == "}":
            depth -= 1
            if depth == 0:
                return raw[start:i + 1]
    return None


def _vaccination_value(obj: object) -> Optional[str]:
    """Case-insensitive "Vaccination" lookup, at most one object level deep."""
    if not isinstance(obj, dict):
        return None
    for key, value in obj.items():
        if isinstance(key, str) and key.lower() == "vaccination":
            if isinstance(value, (str, int, float)):
                return str(value)
    for value in obj.values():
        if isinstance(value, dict):
            nested = _vaccination_value(value)
            if nested is not None:
                return nested
    return None


def parse_response(raw: str) -> str:
    """Extract the raw label string from a model response.

    Repair cascade: (1) parse the whole body as a JSON object, (2) strip a
    code fence and retry, (3) take the first {...} substring and retry,
    (4) give up with ResponseParseError carrying the raw text for audit.
    """
    candidates = [raw]
    fence = _FENCE_RE.match(raw)
    if fence:
        candidates.append(fence.group(1))
    obj = _first_object_substring(raw)
    if obj is not None:
        candidates.append(obj)
    for candidate in candidates:
        try:
            parsed = json.loads(candidate)
        except (json.JSONDecodeError, TypeError):
            continue
        value = _vaccination_value(parsed)
        if value is not None:
            return value
    raise ResponseParseError(raw)


def normalize_response(
    raw_label: str,
    lexicon: Lexicon,
    gold_surface: Optional[str] = None,
) -> ExtractionResult:
    """Map a raw label string onto a VaccineLabel.

    "No"/"Unspecified" match case-insensitively with a trailing period
    tolerated. Anything else is a vaccine name: resolved through the lexicon
    when known, otherwise kept verbatim (folded) and flagged unknown rather
    than coerced. The raw string is retained for exact-match scoring against
    gold_surface.
    """
    if not raw_label:
        raise VaxtriageError("normalize_response requires a non-empty raw label")
    trimmed = raw_label.strip()
    bare = trimmed[:-1].strip() if trimmed.endswith(".") else trimmed
    low = bare.lower()
    unknown = False
    if low == "no":
        label = VaccineLabel.no()
    elif low == "unspecified":
        label = VaccineLabel.unspecified()
    else:
        canonical = lexicon.canonical_of(bare)
        if canonical is None:
            canonical = fold(bare)
            unknown = True
        label = VaccineLabel.named(canonical, surface=bare)
    exact: Optional[bool] = None
    if gold_surface is not None:
        exact = trimmed == gold_surface.strip()
    return ExtractionResult(
        label=label,
        engine="llm",
        exact_match_surface=trimmed,
        exact_match=exact,
        unknown_surface=unknown,
    )


def extract_one(
    note: TriageNote,
    endpoint: ModelEndpoint,
    lexicon: Lexicon,
    decoding: Decoding = Decoding(),
) -> ExtractionResult:
    """Full prompt -> call -> parse -> normalize pipeline for one note."""
    bundle = build_prompt(note, decoding)
    raw = call_model(endpoint, bundle)
    gold_surface = note.gold.to_string() if note.gold is not None else None
    try:
        raw_label = parse_response(raw)
    except ResponseParseError:
        # A failed parse asserts nothing; score it as absence, keep the audit trail.
        return ExtractionResult(
            label=VaccineLabel.no(),
            engine="llm",
            raw_response=raw,
            parse_failed=True,
        )
    result = normalize_response(raw_label, lexicon, gold_surface)
    result.raw_response = raw
    return result


def extract_batch(
    notes: Sequence[TriageNote] | Dataset,
    endpoint: ModelEndpoint,
    lexicon: Lexicon,
    decoding: Decoding = Decoding(),
) -> list[ExtractionResult]:
    """Extract a batch, preserving input order regardless of completion order.

    Per-note failures never abort the batch: transport errors become error
    records labeled No, parse failures become No with the parse-failed flag.
    """
    note_list = list(notes)
    if not note_list:
        return []

    def worker(note: TriageNote) -> ExtractionResult:
        try:
            return extract_one(note, endpoint, lexicon, decoding)
        except ModelCallError as exc:
            return ExtractionResult(
                label=VaccineLabel.no(),
                engine="llm",
                error=f"{type(exc).__name__}: {exc}",
            )

    with ThreadPoolExecutor(max_workers=endpoint.max_parallel_requests) as pool:
        return list(pool.map(worker, note_list))
