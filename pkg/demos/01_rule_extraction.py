"""Walk the rule engine through the bundled reference notes.

Shows the full cascade: named-surface matching, generic triggers with fuzzy
matching, the non-vaccine-injection gate, future-cue filtering, and
schedule-point inference from age context.
"""

from importlib import resources

from vaxtriage.corpus import load_notes
from vaxtriage.lexicon import load_default_lexicon
from vaxtriage.rules import extract

lexicon = load_default_lexicon()
text = resources.files("vaxtriage").joinpath("data/fixtures/golden_notes.jsonl").read_text("utf-8")
dataset = load_notes(text, name="golden")

print(f"lexicon {lexicon.version}: {len(lexicon.entries)} entries\n")
for note in dataset.notes:
    result = extract(note, lexicon)
    evidence = ""
    if result.matched_span:
        start, end = result.matched_span
        evidence = f'  (matched "{note.text[start:end]}")'
    print(f"[{note.id}] age {note.age_years}y {note.age_months}m")
    print(f"  note: {note.text}")
    print(f"  gold: {note.gold.to_string():<12} extracted: {result.label.to_string()}{evidence}")
    print()
