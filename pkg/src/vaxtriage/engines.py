"""Uniform note -> ExtractionResult adapters over the two extractors."""

from __future__ import annotations

from typing import Callable, Optional

from .corpus import TriageNote
from .labels import ExtractionResult
from .lexicon import Lexicon
from .llm import Decoding, ModelEndpoint, extract_one
from .rules import DEFAULT_CONFIG, RuleConfig, extract

Engine = Callable[[TriageNote], ExtractionResult]


def make_rules_engine(lexicon: Lexicon, config: RuleConfig = DEFAULT_CONFIG) -> Engine:
    def run(note: TriageNote) -> ExtractionResult:
        return extract(note, lexicon, config)

    return run


def make_llm_engine(
    endpoint: ModelEndpoint,
    lexicon: Lexicon,
    decoding: Optional[Decoding] = None,
) -> Engine:
    decoding = decoding or Decoding()

    def run(note: TriageNote) -> ExtractionResult:
        return extract_one(note, endpoint, lexicon, decoding)

    return run
