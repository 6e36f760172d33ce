"""The label-bootstrapping loop, end to end, in a temp directory.

Engine proposals are queued for review; a simulated reviewer accepts the
good ones and corrects one; the confirmed labels export as a chat-format
fine-tuning dataset with a manifest. Everything persists through an
append-only decision log, shown at the end.
"""

import json
import tempfile
from importlib import resources
from pathlib import Path

from vaxtriage.annotation import AnnotationStore, export_dataset, prelabel
from vaxtriage.corpus import load_notes
from vaxtriage.engines import make_rules_engine
from vaxtriage.labels import VaccineLabel
from vaxtriage.lexicon import load_default_lexicon
from vaxtriage.llm import load_system_prompt

lexicon = load_default_lexicon()
text = resources.files("vaxtriage").joinpath("data/fixtures/golden_notes.jsonl").read_text("utf-8")
dataset = load_notes(text, name="golden")

with tempfile.TemporaryDirectory() as tmp:
    store = AnnotationStore(Path(tmp) / "store")
    queued = prelabel(store, dataset, make_rules_engine(lexicon), "rules")
    print(f"queued {queued} proposals for review\n")

    while (record := store.next_pending("alice")) is not None:
        proposal = record.proposed.to_string()
        if record.note.id == "g2":
            # the reviewer disagrees once, to show a correction
            store.submit_decision(record.note.id, "alice", "correct",
                                  VaccineLabel.named("Influenza"))
            print(f"{record.note.id}: proposal {proposal!r} corrected to 'Influenza'")
        else:
            store.submit_decision(record.note.id, "alice", "accept")
            print(f"{record.note.id}: proposal {proposal!r} accepted")

    print(f"\nstats: {store.stats()}\n")

    payload, manifest = export_dataset(store, lexicon, load_system_prompt())
    print("manifest:", json.dumps(manifest, indent=2))
    first = json.loads(payload.splitlines()[0])
    print("\nfirst exported example (roles):", [m["role"] for m in first["messages"]])
    print("assistant turn:", first["messages"][2]["content"])

    print("\ndecision log:")
    for line in store.log_path.read_text().strip().splitlines():
        event = json.loads(line)
        print(f"  #{event['seq']:>2} {event['action']:<8} {event.get('record_id', '')}")
