"""Core label and result types shared by every engine and the evaluator."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from .errors import VaxtriageError


class LabelError(VaxtriageError, ValueError):
    pass


class LabelVariant(str, Enum):
    NO = "No"
    UNSPECIFIED = "Unspecified"
    NAMED = "Named"


@dataclass(frozen=True)
class VaccineLabel:
    """Three-way extraction outcome: No, Unspecified, or a named vaccine.

    Named labels carry the canonical vaccine identity and, when known, the
    surface form the engine actually saw ("flu vax" for Influenza).
    """

    variant: LabelVariant
    canonical_id: Optional[str] = None
    surface: Optional[str] = None

    def __post_init__(self) -> None:
        if self.variant is LabelVariant.NAMED:
            if not self.canonical_id:
                raise LabelError("Named label requires a non-empty canonical_id")
        elif self.canonical_id is not None or self.surface is not None:
            raise LabelError(f"{self.variant.value} label carries no name")

    @classmethod
    def no(cls) -> "VaccineLabel":
        return cls(LabelVariant.NO)

    @classmethod
    def unspecified(cls) -> "VaccineLabel":
        return cls(LabelVariant.UNSPECIFIED)

    @classmethod
    def named(cls, canonical_id: str, surface: Optional[str] = None) -> "VaccineLabel":
        return cls(LabelVariant.NAMED, canonical_id=canonical_id, surface=surface)

    def key(self) -> tuple:
        """Semantic identity: variant plus canonical, ignoring surface provenance."""
        return (self.variant.value, self.canonical_id)

    def same_as(self, other: "VaccineLabel") -> bool:
        return self.key() == other.key()

    def to_string(self) -> str:
        """The file encoding: "No", "Unspecified", or the canonical id."""
        if self.variant is LabelVariant.NAMED:
            return self.canonical_id  # type: ignore[return-value]
        return self.variant.value

    @classmethod
    def from_string(cls, s: str, lexicon: Any = None) -> "VaccineLabel":
        """Parse a file-encoded label string.

        With a lexicon, named strings are resolved to their canonical id and
        unknown names are rejected; without one, the string is kept verbatim.
        """
        s = s.strip()
        if not s:
            raise LabelError("empty label string")
        low = s.lower()
        if low == "no":
            return cls.no()
        if low == "unspecified":
            return cls.unspecified()
        if lexicon is not None:
            canonical = lexicon.canonical_of(s)
            if canonical is None:
                raise LabelError(f"unknown label string: {s!r}")
            return cls.named(canonical)
        return cls.named(s)


@dataclass
class ExtractionResult:
    """A label plus provenance for audit.

    matched_span is (start, end) character offsets into the note text for
    rule-engine hits; raw_response and the flags describe model behavior.
    """

    label: VaccineLabel
    engine: str
    matched_span: Optional[tuple[int, int]] = None
    raw_response: Optional[str] = None
    exact_match_surface: Optional[str] = None
    exact_match: Optional[bool] = None
    unknown_surface: bool = False
    parse_failed: bool = False
    error: Optional[str] = None

    def to_dict(self) -> dict:
        d: dict = {
            "label": self.label.to_string(),
            "variant": self.label.variant.value,
            "engine": self.engine,
        }
        if self.label.surface is not None:
            d["surface"] = self.label.surface
        if self.matched_span is not None:
            d["matched_span"] = list(self.matched_span)
        if self.raw_response is not None:
            d["raw_response"] = self.raw_response
        if self.exact_match_surface is not None:
            d["raw"] = self.exact_match_surface
        if self.exact_match is not None:
            d["exact_match"] = self.exact_match
        if self.unknown_surface:
            d["unknown_surface"] = True
        if self.parse_failed:
            d["parse_failed"] = True
        if self.error is not None:
            d["error"] = self.error
        return d


def label_from_fields(variant: str, canonical_id: Optional[str] = None,
                      surface: Optional[str] = None) -> VaccineLabel:
    """Rebuild a label from serialized variant fields."""
    v = LabelVariant(variant)
    if v is LabelVariant.NAMED:
        return VaccineLabel.named(canonical_id or "", surface)
    return VaccineLabel(v)
