"""Vaccine-mention extraction toolkit for emergency-department triage notes.

Extracts vaccine mentions with a rule engine or any OpenAI-compatible chat
model, normalizes them to canonical identities, scores engines at the
presence and name levels, and runs a human-in-the-loop bootstrapping
workflow that exports fine-tuning-ready chat datasets.
"""

from .corpus import Dataset, TriageNote, generate_synthetic, load_notes, parse_age_prefix, save_notes
from .labels import ExtractionResult, LabelVariant, VaccineLabel
from .lexicon import Lexicon, VaccineEntry, load_default_lexicon, load_lexicon
from .rules import RuleConfig, extract
from .llm import Decoding, ModelEndpoint, build_prompt, extract_batch, normalize_response, parse_response

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Decoding",
    "ExtractionResult",
    "LabelVariant",
    "Lexicon",
    "ModelEndpoint",
    "RuleConfig",
    "TriageNote",
    "VaccineEntry",
    "VaccineLabel",
    "__version__",
    "build_prompt",
    "extract",
    "extract_batch",
    "generate_synthetic",
    "load_default_lexicon",
    "load_lexicon",
    "load_notes",
    "normalize_response",
    "parse_age_prefix",
    "parse_response",
    "save_notes",
]
