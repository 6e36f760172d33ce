"""Run the chat-model pipeline against the bundled replayable mock endpoint.

No model required: the mock serves scripted responses over real HTTP, so the
prompt builder, client (with retry), the JSON repair cascade, and response
normalization are all exercised exactly as in production.
"""

from vaxtriage.evaluation import (
    golds_from_dataset,
    predictions_from_results,
    render_name_table,
    render_presence_table,
    render_summary,
    report,
)
from vaxtriage.lexicon import load_default_lexicon
from vaxtriage.llm import ModelEndpoint, extract_batch
from vaxtriage.mock_server import load_shipped_llm_fixture, run_mock_server

lexicon = load_default_lexicon()
dataset, responses = load_shipped_llm_fixture()

with run_mock_server(dataset, responses) as base_url:
    print(f"mock endpoint at {base_url}\n")
    endpoint = ModelEndpoint(base_url=base_url, model_name="mock-model",
                             max_parallel_requests=4)
    results = extract_batch(dataset, endpoint, lexicon)

for note, result in zip(dataset.notes, results):
    flags = []
    if result.parse_failed:
        flags.append("parse-failed")
    if result.unknown_surface:
        flags.append("unknown-name")
    suffix = f"  [{', '.join(flags)}]" if flags else ""
    print(f"{note.id}: {result.label.to_string():<16} raw={result.raw_response!r}{suffix}")

rep = report(predictions_from_results(dataset.notes, results),
             golds_from_dataset(dataset), lexicon)
print()
print(render_presence_table(rep, "mock-llm"))
print()
print(render_name_table(rep))
print()
print(render_summary(rep))
