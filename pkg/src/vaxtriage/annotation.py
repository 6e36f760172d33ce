"""Label bootstrapping: engine pre-labels, a human review queue, and export.

The store is a single append-only JSONL log of decision events plus an
optional snapshot; replaying the log reconstructs the store exactly, which is
both the persistence model and the audit trail. All mutations serialize
through one writer lock; reads take snapshots.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .corpus import Dataset, TriageNote
from .errors import VaxtriageError
from .labels import ExtractionResult, VaccineLabel, label_from_fields
from .lexicon import Lexicon

LOG_NAME = "decisions.log.jsonl"
SNAPSHOT_NAME = "snapshot.json"

PENDING = "pending"
ACCEPTED = "accepted"
CORRECTED = "corrected"


class AnnotationError(VaxtriageError):
    pass


class UnknownRecord(AnnotationError):
    pass


class LeaseViolation(AnnotationError):
    pass


class IdenticalCorrection(AnnotationError):
    pass


class NothingToExport(AnnotationError):
    pass


@dataclass
class AnnotationRecord:
    note: TriageNote
    proposed: Optional[VaccineLabel]
    engine: Optional[str]
    proposed_span: Optional[tuple[int, int]] = None
    status: str = PENDING
    final: Optional[VaccineLabel] = None
    reviewer: Optional[str] = None
    decided_at: Optional[float] = None
    second_opinion: Optional[tuple[str, VaccineLabel]] = None
    skip_count: int = 0
    queue_pos: int = 0

    def to_dict(self) -> dict:
        d: dict = {
            "record_id": self.note.id,
            "note": {
                "id": self.note.id,
                "age_years": self.note.age_years,
                "age_months": self.note.age_months,
                "text": self.note.text,
                "gold": self.note.gold.to_string() if self.note.gold else None,
            },
            "proposed": self.proposed.to_string() if self.proposed else None,
            "engine": self.engine,
            "proposed_span": list(self.proposed_span) if self.proposed_span else None,
            "status": self.status,
            "final": self.final.to_string() if self.final else None,
            "reviewer": self.reviewer,
            "decided_at": self.decided_at,
            "skip_count": self.skip_count,
        }
        if self.second_opinion is not None:
            d["second_opinion"] = {
                "reviewer": self.second_opinion[0],
                "label": self.second_opinion[1].to_string(),
            }
        return d


def _label_to_event(label: Optional[VaccineLabel]) -> Optional[dict]:
    if label is None:
        return None
    return {
        "variant": label.variant.value,
        "canonical_id": label.canonical_id,
        "surface": label.surface,
    }


def _label_from_event(d: Optional[dict]) -> Optional[VaccineLabel]:
    if d is None:
        return None
    return label_from_fields(d["variant"], d.get("canonical_id"), d.get("surface"))


def _stable_fraction(record_id: str) -> float:
    """Deterministic hash of a record id onto [0, 1), for dual-review sampling."""
    digest = hashlib.sha256(record_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class AnnotationStore:
    """Append-only event-sourced store for annotation records.

    Every state change appends one log event; opening the store replays the
    log (from the snapshot onward when one exists). Leases guard concurrent
    reviewers and expire after lease_ttl seconds.
    """

    def __init__(
        self,
        directory: Path | str,
        lease_ttl: float = 300.0,
        second_opinion_fraction: float = 0.0,
        clock: Callable[[], float] = time.time,
    ) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.lease_ttl = lease_ttl
        self.second_opinion_fraction = second_opinion_fraction
        self._clock = clock
        self._lock = threading.RLock()
        self._records: dict[str, AnnotationRecord] = {}
        self._leases: dict[str, tuple[str, float]] = {}  # record_id -> (reviewer, expires)
        self._seq = 0
        self._queue_counter = 0
        self._replay_existing()

    # -- persistence ---------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self.directory / LOG_NAME

    @property
    def event_count(self) -> int:
        return self._seq

    @property
    def snapshot_path(self) -> Path:
        return self.directory / SNAPSHOT_NAME

    def _replay_existing(self) -> None:
        start_seq = 0
        if self.snapshot_path.exists():
            snap = json.loads(self.snapshot_path.read_text("utf-8"))
            start_seq = snap["seq"]
            self._load_state(snap)
        if self.log_path.exists():
            with self.log_path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["seq"] <= start_seq:
                        continue
                    self._apply(event)
                    self._seq = event["seq"]

    def _append(self, action: str, **fields) -> dict:
        """Build, apply, and persist one event. Caller must hold the lock."""
        self._seq += 1
        event = {"seq": self._seq, "ts": self._clock(), "action": action, **fields}
        self._apply(event)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False) + "\n")
        return event

    def _apply(self, event: dict) -> None:
        action = event["action"]
        record_id = event.get("record_id")
        if action == "enqueue":
            note_fields = event["note"]
            gold = note_fields.get("gold")
            note = TriageNote(
                id=note_fields["id"],
                age_years=note_fields["age_years"],
                age_months=note_fields["age_months"],
                text=note_fields["text"],
                gold=VaccineLabel.from_string(gold) if gold else None,
            )
            self._queue_counter += 1
            span = event.get("span")
            self._records[note.id] = AnnotationRecord(
                note=note,
                proposed=_label_from_event(event.get("proposed")),
                engine=event.get("engine"),
                proposed_span=tuple(span) if span else None,
                queue_pos=self._queue_counter,
            )
        elif action == "lease":
            self._leases[record_id] = (event["reviewer"], event["expires"])
        elif action == "accept":
            rec = self._records[record_id]
            rec.status = ACCEPTED
            rec.final = rec.proposed
            rec.reviewer = event["reviewer"]
            rec.decided_at = event["ts"]
            self._leases.pop(record_id, None)
        elif action == "correct":
            rec = self._records[record_id]
            rec.status = CORRECTED
            rec.final = _label_from_event(event["label"])
            rec.reviewer = event["reviewer"]
            rec.decided_at = event["ts"]
            self._leases.pop(record_id, None)
        elif action == "skip":
            rec = self._records[record_id]
            rec.status = PENDING
            rec.skip_count += 1
            self._queue_counter += 1
            rec.queue_pos = self._queue_counter
            self._leases.pop(record_id, None)
        elif action == "second_opinion":
            rec = self._records[record_id]
            rec.second_opinion = (event["reviewer"], _label_from_event(event["label"]))
        else:
            raise AnnotationError(f"unknown log action {action!r}")

    def snapshot(self) -> Path:
        """Write a point-in-time snapshot; replay then starts after it."""
        with self._lock:
            state = {
                "seq": self._seq,
                "queue_counter": self._queue_counter,
                "records": [self._record_state(r) for r in self._records.values()],
                "leases": {
                    rid: {"reviewer": rev, "expires": exp}
                    for rid, (rev, exp) in self._leases.items()
                },
            }
            self.snapshot_path.write_text(
                json.dumps(state, ensure_ascii=False, indent=2), "utf-8"
            )
            return self.snapshot_path

    def _record_state(self, rec: AnnotationRecord) -> dict:
        return {
            "note": {
                "id": rec.note.id,
                "age_years": rec.note.age_years,
                "age_months": rec.note.age_months,
                "text": rec.note.text,
                "gold": rec.note.gold.to_string() if rec.note.gold else None,
            },
            "proposed": _label_to_event(rec.proposed),
            "engine": rec.engine,
            "proposed_span": list(rec.proposed_span) if rec.proposed_span else None,
            "status": rec.status,
            "final": _label_to_event(rec.final),
            "reviewer": rec.reviewer,
            "decided_at": rec.decided_at,
            "second_opinion": None if rec.second_opinion is None else {
                "reviewer": rec.second_opinion[0],
                "label": _label_to_event(rec.second_opinion[1]),
            },
            "skip_count": rec.skip_count,
            "queue_pos": rec.queue_pos,
        }

    def _load_state(self, snap: dict) -> None:
        self._queue_counter = snap["queue_counter"]
        for rs in snap["records"]:
            nf = rs["note"]
            note = TriageNote(
                id=nf["id"], age_years=nf["age_years"], age_months=nf["age_months"],
                text=nf["text"],
                gold=VaccineLabel.from_string(nf["gold"]) if nf.get("gold") else None,
            )
            so = rs.get("second_opinion")
            snap_span = rs.get("proposed_span")
            self._records[note.id] = AnnotationRecord(
                note=note,
                proposed=_label_from_event(rs["proposed"]),
                engine=rs["engine"],
                proposed_span=tuple(snap_span) if snap_span else None,
                status=rs["status"],
                final=_label_from_event(rs["final"]),
                reviewer=rs["reviewer"],
                decided_at=rs["decided_at"],
                second_opinion=None if so is None else (
                    so["reviewer"], _label_from_event(so["label"])
                ),
                skip_count=rs["skip_count"],
                queue_pos=rs["queue_pos"],
            )
        for rid, lease in snap.get("leases", {}).items():
            self._leases[rid] = (lease["reviewer"], lease["expires"])

    # -- queue operations ------------------------------------------------------

    def enqueue(
        self,
        note: TriageNote,
        proposal: Optional[VaccineLabel],
        engine: Optional[str],
        span: Optional[tuple[int, int]] = None,
    ) -> bool:
        """Add one pending record; no-op (False) when the note id is already present."""
        with self._lock:
            if note.id in self._records:
                return False
            self._append(
                "enqueue",
                record_id=note.id,
                note={
                    "id": note.id,
                    "age_years": note.age_years,
                    "age_months": note.age_months,
                    "text": note.text,
                    "gold": note.gold.to_string() if note.gold else None,
                },
                proposed=_label_to_event(proposal),
                engine=engine,
                span=list(span) if span else None,
            )
            return True

    def next_pending(self, reviewer: str) -> Optional[AnnotationRecord]:
        """Oldest pending record not leased to another reviewer; leases it."""
        with self._lock:
            now = self._clock()
            pending = sorted(
                (r for r in self._records.values() if r.status == PENDING),
                key=lambda r: r.queue_pos,
            )
            for rec in pending:
                lease = self._leases.get(rec.note.id)
                if lease is not None and lease[1] > now and lease[0] != reviewer:
                    continue
                self._append(
                    "lease",
                    record_id=rec.note.id,
                    reviewer=reviewer,
                    expires=now + self.lease_ttl,
                )
                return rec
            return None

    def _require_lease(self, record_id: str, reviewer: str) -> AnnotationRecord:
        rec = self._records.get(record_id)
        if rec is None:
            raise UnknownRecord(f"no record {record_id!r}")
        if rec.status != PENDING:
            raise LeaseViolation(f"record {record_id!r} is already decided")
        lease = self._leases.get(record_id)
        now = self._clock()
        if lease is None or lease[1] <= now or lease[0] != reviewer:
            raise LeaseViolation(f"record {record_id!r} is not leased to {reviewer!r}")
        return rec

    def submit_decision(
        self,
        record_id: str,
        reviewer: str,
        decision: str,
        label: Optional[VaccineLabel] = None,
    ) -> AnnotationRecord:
        """Accept, correct, or skip a leased record."""
        with self._lock:
            rec = self._require_lease(record_id, reviewer)
            if decision == "accept":
                if rec.proposed is None:
                    raise AnnotationError(
                        f"record {record_id!r} has no proposal; use correct"
                    )
                self._append("accept", record_id=record_id, reviewer=reviewer)
            elif decision == "correct":
                if label is None:
                    raise AnnotationError("correct decision requires a label")
                if rec.proposed is not None and label.same_as(rec.proposed):
                    raise IdenticalCorrection(
                        "correction label equals the proposal; accept instead"
                    )
                self._append(
                    "correct", record_id=record_id, reviewer=reviewer,
                    label=_label_to_event(label),
                )
            elif decision == "skip":
                self._append("skip", record_id=record_id, reviewer=reviewer)
            else:
                raise AnnotationError(f"unknown decision {decision!r}")
            return self._records[record_id]

    def needs_second_opinion(self, record_id: str) -> bool:
        """Deterministic sampling: the same record always routes the same way."""
        return _stable_fraction(record_id) < self.second_opinion_fraction

    def submit_second_opinion(
        self, record_id: str, reviewer: str, label: VaccineLabel
    ) -> AnnotationRecord:
        with self._lock:
            rec = self._records.get(record_id)
            if rec is None:
                raise UnknownRecord(f"no record {record_id!r}")
            if rec.status == PENDING:
                raise AnnotationError("second opinion requires a decided record")
            if rec.reviewer == reviewer:
                raise AnnotationError("second opinion must come from a different reviewer")
            self._append(
                "second_opinion", record_id=record_id, reviewer=reviewer,
                label=_label_to_event(label),
            )
            return self._records[record_id]

    # -- reads -----------------------------------------------------------------

    def get(self, record_id: str) -> AnnotationRecord:
        rec = self._records.get(record_id)
        if rec is None:
            raise UnknownRecord(f"no record {record_id!r}")
        return rec

    def records(self) -> list[AnnotationRecord]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: r.queue_pos)

    def stats(self) -> dict:
        with self._lock:
            now = self._clock()
            records = list(self._records.values())
            leased = sum(
                1 for rid, (_, exp) in self._leases.items()
                if exp > now and self._records[rid].status == PENDING
            )
            return {
                "total": len(records),
                "pending": sum(1 for r in records if r.status == PENDING),
                "accepted": sum(1 for r in records if r.status == ACCEPTED),
                "corrected": sum(1 for r in records if r.status == CORRECTED),
                "leased": leased,
                "dual_reviewed": sum(1 for r in records if r.second_opinion is not None),
                "skips": sum(r.skip_count for r in records),
            }

    def state_fingerprint(self) -> str:
        """Canonical serialization of live state, for replay-equality checks."""
        with self._lock:
            state = {
                "records": [self._record_state(r) for r in self.records()],
                "leases": {
                    rid: {"reviewer": rev, "expires": exp}
                    for rid, (rev, exp) in sorted(self._leases.items())
                },
            }
            return json.dumps(state, sort_keys=True, ensure_ascii=False)


# -- workflow helpers -----------------------------------------------------------


def prelabel(
    store: AnnotationStore,
    dataset: Dataset,
    engine: Callable[[TriageNote], ExtractionResult],
    engine_name: str,
) -> int:
    """Queue one pending record per note with the engine's proposal.

    Idempotent per note id: re-running over the same dataset enqueues nothing
    new. An engine failure on a note still enqueues it, with no proposal.
    """
    enqueued = 0
    for note in dataset.notes:
        try:
            result = engine(note)
            proposal: Optional[VaccineLabel] = result.label
            engine_label: Optional[str] = result.engine
            span = result.matched_span
        except VaxtriageError:
            proposal = None
            engine_label = engine_name
            span = None
        if store.enqueue(note, proposal, engine_label, span=span):
            enqueued += 1
    return enqueued


def agreement(
    store: AnnotationStore,
    reviewer_a: str,
    reviewer_b: str,
    lexicon: Lexicon,
) -> tuple[int, float]:
    """Raw agreement between two reviewers over dual-reviewed records.

    A record counts when one of the pair decided it and the other filed the
    second opinion; labels compare through lexicon equivalence.
    """
    dual = []
    for rec in store.records():
        if rec.final is None or rec.second_opinion is None:
            continue
        first, second = rec.reviewer, rec.second_opinion[0]
        if {first, second} == {reviewer_a, reviewer_b}:
            dual.append(rec)
    if not dual:
        raise AnnotationError("no dual-reviewed records for this reviewer pair")
    agree = sum(
        1 for rec in dual
        if _labels_equivalent(rec.final, rec.second_opinion[1], lexicon)
    )
    return len(dual), agree / len(dual)


def agreement_overall(store: AnnotationStore, lexicon: Lexicon) -> Optional[tuple[int, float]]:
    """Agreement over all dual-reviewed records regardless of reviewer pair."""
    dual = [r for r in store.records() if r.final is not None and r.second_opinion is not None]
    if not dual:
        return None
    agree = sum(
        1 for rec in dual
        if _labels_equivalent(rec.final, rec.second_opinion[1], lexicon)
    )
    return len(dual), agree / len(dual)


def _labels_equivalent(a: VaccineLabel, b: VaccineLabel, lexicon: Lexicon) -> bool:
    if a.variant != b.variant:
        return False
    if a.variant.value != "Named":
        return True
    return lexicon.equivalent(a.canonical_id or "", b.canonical_id or "")


def export_dataset(
    store: AnnotationStore,
    lexicon: Lexicon,
    system_text: str,
) -> tuple[str, dict]:
    """Confirmed labels as a fine-tuning chat dataset.

    One JSONL object per decided record: system instruction, the
    age-prefixed note as the user turn, and the label as the assistant's
    structured answer. Pending records never appear. Deterministic: exporting
    twice with no new decisions is byte-identical.
    """
    decided = [r for r in store.records() if r.status in (ACCEPTED, CORRECTED)]
    if not decided:
        raise NothingToExport("no accepted or corrected records to export")
    lines = []
    class_counts: dict[str, int] = {}
    for rec in decided:
        label_string = rec.final.to_string()  # type: ignore[union-attr]
        class_counts[label_string] = class_counts.get(label_string, 0) + 1
        lines.append(json.dumps(
            {
                "messages": [
                    {"role": "system", "content": system_text},
                    {"role": "user", "content": f"{rec.note.age_prefix()} {rec.note.text}"},
                    {"role": "assistant",
                     "content": json.dumps({"Vaccination": label_string}, ensure_ascii=False)},
                ]
            },
            ensure_ascii=False,
        ))
    manifest = {
        "format": "chat-jsonl",
        "record_count": len(decided),
        "class_counts": dict(sorted(class_counts.items())),
        "lexicon_version": lexicon.version,
    }
    return "\n".join(lines) + "\n", manifest
