"""Replayable chat-completion mock, so the full pipeline runs with no model.

Responses are scripted per note id in a fixture file; incoming requests are
matched to notes by locating the note text inside the user message (the user
message always embeds it verbatim). Serves the same wire format as a real
endpoint, over a real socket, so the HTTP client code is exercised end to end.
"""

from __future__ import annotations

import json
import threading
import time
from contextlib import contextmanager
from importlib import resources
from typing import IO, Iterator, Union

import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .corpus import Dataset, load_notes
from .errors import VaxtriageError


class MockServerError(VaxtriageError):
    pass


def load_response_fixture(source: Union[IO[bytes], IO[str], bytes, str]) -> dict[str, str]:
    """Fixture file: JSON object mapping note id -> scripted assistant text."""
    if hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    doc = json.loads(data)
    if not isinstance(doc, dict) or not all(isinstance(v, str) for v in doc.values()):
        raise MockServerError("response fixture must map note ids to strings")
    return doc


def load_shipped_llm_fixture() -> tuple[Dataset, dict[str, str]]:
    """The 20-note fixture bundled with the package."""
    pkg = resources.files("vaxtriage")
    notes = load_notes(pkg.joinpath("data/fixtures/llm_notes.jsonl").read_text("utf-8"),
                       name="llm-fixture")
    responses = load_response_fixture(pkg.joinpath("data/fixtures/llm_responses.json").read_text("utf-8"))
    return notes, responses


def create_mock_app(dataset: Dataset, responses: dict[str, str]) -> FastAPI:
    app = FastAPI(title="vaxtriage-mock-model")
    # longest note text first so substring matching cannot pick a prefix note
    ordered = sorted(dataset.notes, key=lambda n: -len(n.text))

    @app.post("/v1/chat/completions")
    async def chat_completions(request: Request):
        body = await request.json()
        messages = body.get("messages", [])
        user_text = next(
            (m.get("content", "") for m in messages if m.get("role") == "user"), ""
        )
        note = next((n for n in ordered if n.text and n.text in user_text), None)
        if note is None or note.id not in responses:
            return JSONResponse(
                status_code=404,
                content={"error": {"message": "no scripted response for this note"}},
            )
        return {
            "id": f"mock-{note.id}",
            "object": "chat.completion",
            "created": int(time.time()),
            "model": body.get("model", "mock"),
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": responses[note.id]},
                    "finish_reason": "stop",
                }
            ],
            "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
        }

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    return app


@contextmanager
def run_app(app: FastAPI, host: str = "127.0.0.1", port: int = 0) -> Iterator[str]:
    """Serve an ASGI app on a background thread; yields the base URL."""
    config = uvicorn.Config(app, host=host, port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise MockServerError("server failed to start within 10s")
        time.sleep(0.01)
    bound_port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://{host}:{bound_port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)


@contextmanager
def run_mock_server(
    dataset: Dataset,
    responses: dict[str, str],
    host: str = "127.0.0.1",
    port: int = 0,
) -> Iterator[str]:
    with run_app(create_mock_app(dataset, responses), host=host, port=port) as base_url:
        yield base_url
