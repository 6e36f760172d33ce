"""Generate a seeded synthetic corpus and score the rule engine on it.

The two-level report mirrors the production scoring protocol: presence-level
confusion metrics plus name-level accuracy judged through lexicon
equivalence, with per-note drill-down for error analysis.
"""

from vaxtriage.corpus import generate_synthetic, load_templates
from vaxtriage.evaluation import (
    golds_from_dataset,
    predictions_from_results,
    render_name_table,
    render_presence_table,
    report,
)
from vaxtriage.lexicon import load_default_lexicon
from vaxtriage.rules import extract

lexicon = load_default_lexicon()
dataset = generate_synthetic(seed=2026, n=120, vaccine_fraction=0.65,
                             templates=load_templates(), name="demo")
present, absent = dataset.class_counts()
print(f"generated {len(dataset)} notes: {present} vaccine-present, {absent} absent\n")

results = [extract(note, lexicon) for note in dataset.notes]
rep = report(predictions_from_results(dataset.notes, results),
             golds_from_dataset(dataset), lexicon)

print(render_presence_table(rep, "rules"))
print()
print(render_name_table(rep))

errors = [row for row in rep.per_note if row["presence"] in ("FP", "FN")]
print(f"\npresence-level errors ({len(errors)}):")
for row in errors:
    note = dataset.note(row["id"])
    print(f"  {row['presence']} {row['id']}: gold={row['gold']!r} got={row['predicted']!r}")
    print(f"      {note.text}")
