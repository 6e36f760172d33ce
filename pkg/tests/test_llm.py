from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from importlib import resources

import pytest
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from vaxtriage.corpus import TriageNote
from vaxtriage.labels import LabelVariant
from vaxtriage.llm import (
    HttpStatusError,
    ModelEndpoint,
    ModelTimeout,
    ResponseParseError,
    RetryExhausted,
    TransportError,
    build_prompt,
    call_model,
    extract_batch,
    normalize_response,
    parse_response,
)
from vaxtriage.mock_server import load_shipped_llm_fixture, run_app, run_mock_server

FIRST_LINE = "You are an expert medical analyst reviewing emergency department triage notes."

# sha256 of the versioned instruction block; fails loudly on any edit
PROMPT_SHA256 = "f5c38f79ec1abd96e1225a1780db0cf4c24f328d058215bed4227f4310dbe4d4"


def note(text: str, years: int = 0, months: int = 4, nid: str = "n1") -> TriageNote:
    return TriageNote(id=nid, age_years=years, age_months=months, text=text)


class TestBuildPrompt:
    def test_user_text_reconstruction(self):
        bundle = build_prompt(note("Febrile, vomit post rota-virus vaccine"))
        assert bundle.user_text == "Age: 0Y 4M. Febrile, vomit post rota-virus vaccine"

    def test_system_text_identical_across_notes(self):
        a = build_prompt(note("fever"))
        b = build_prompt(note("rash", years=9, months=2, nid="n2"))
        assert a.system_text == b.system_text

    def test_first_line_verbatim(self):
        assert build_prompt(note("x")).system_text.splitlines()[0] == FIRST_LINE

    def test_system_text_pinned_to_resource(self):
        resource = resources.files("vaxtriage").joinpath("data/prompt_system.txt").read_text("utf-8")
        bundle = build_prompt(note("x"))
        assert hashlib.sha256(bundle.system_text.encode()).hexdigest() == hashlib.sha256(
            resource.encode()
        ).hexdigest()
        assert hashlib.sha256(bundle.system_text.encode()).hexdigest() == PROMPT_SHA256

    def test_quote_preserved_unescaped(self):
        text = 'mum reports "screaming fits" post imms'
        assert text in build_prompt(note(text)).user_text

    def test_decoding_defaults(self):
        d = build_prompt(note("x")).decoding
        assert (d.temperature, d.max_tokens) == (0.0, 64)


class TestParseResponse:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ('{"Vaccination": "Rotavirus"}', "Rotavirus"),
            ('{"vaccination": "No"}', "No"),
            ('{"VACCINATION": "Unspecified"}', "Unspecified"),
            ('```json\n{"vaccination":"No"}\n```', "No"),
            ('```\n{"Vaccination": "flu vax"}\n```', "flu vax"),
            ('Here you go: {"Vaccination": "Hep B"} regards', "Hep B"),
            ('{"analysis": {"Vaccination": "DTP"}}', "DTP"),
        ],
    )
    def test_cascade_stages(self, raw, expected):
        assert parse_response(raw) == expected

    @pytest.mark.parametrize(
        "raw", ["the patient seems fine", "", "[1, 2]", '{"note": "no vaccine key"}']
    )
    def test_failures_carry_raw(self, raw):
        with pytest.raises(ResponseParseError) as err:
            parse_response(raw)
        assert err.value.raw == raw

    @pytest.mark.parametrize("label", ["No", "Unspecified", "Rotavirus"])
    def test_roundtrip_identity(self, label):
        serialized = json.dumps({"Vaccination": label})
        assert parse_response(serialized) == label


class TestNormalizeResponse:
    @pytest.mark.parametrize("raw", ["no", "NO", "No.", " No "])
    def test_no_variants(self, lexicon, raw):
        assert normalize_response(raw, lexicon).label.variant is LabelVariant.NO

    def test_unspecified(self, lexicon):
        assert normalize_response("Unspecified", lexicon).label.variant is LabelVariant.UNSPECIFIED

    def test_known_surface_resolves(self, lexicon):
        result = normalize_response("flu shot", lexicon)
        assert result.label.canonical_id == "Influenza"
        assert not result.unknown_surface

    def test_equivalent_brand_with_gold(self, lexicon):
        result = normalize_response("Triple Antigen", lexicon, gold_surface="DTP")
        assert result.label.canonical_id == "DTP"
        assert result.exact_match is False
        assert lexicon.equivalent("Triple Antigen", "DTP")

    def test_unknown_name_kept_and_flagged(self, lexicon):
        result = normalize_response("Quinvaxem", lexicon)
        assert result.label.variant is LabelVariant.NAMED
        assert result.unknown_surface
        assert result.label.canonical_id == "quinvaxem"
        assert result.label.surface == "Quinvaxem"

    def test_exact_match_tracks_gold(self, lexicon):
        assert normalize_response("Rotavirus", lexicon, "Rotavirus").exact_match is True
        assert normalize_response("rotavirus", lexicon, "Rotavirus").exact_match is False


def _flaky_app(fail_times: int, status: int = 500) -> FastAPI:
    app = FastAPI()
    state = {"calls": 0}

    @app.post("/v1/chat/completions")
    async def completions(request: Request):
        state["calls"] += 1
        if state["calls"] <= fail_times:
            return JSONResponse(status_code=status, content={"error": "boom"})
        return {
            "choices": [{"index": 0, "message": {"role": "assistant", "content": '{"Vaccination": "No"}'}}]
        }

    app.state.counters = state
    return app


class TestCallModel:
    def test_passthrough(self, lexicon):
        ds, responses = load_shipped_llm_fixture()
        with run_mock_server(ds, responses) as base_url:
            endpoint = ModelEndpoint(base_url=base_url, model_name="mock")
            raw = call_model(endpoint, build_prompt(ds.note("m01")))
        assert raw == '{"Vaccination": "Rotavirus"}'

    def test_retry_recovers_from_one_500(self):
        app = _flaky_app(fail_times=1)
        with run_app(app) as base_url:
            endpoint = ModelEndpoint(base_url=base_url, model_name="m", retry_budget=1)
            raw = call_model(endpoint, build_prompt(note("x")))
        assert raw == '{"Vaccination": "No"}'
        assert app.state.counters["calls"] == 2

    def test_500_twice_exhausts_retry(self):
        app = _flaky_app(fail_times=2)
        with run_app(app) as base_url:
            endpoint = ModelEndpoint(base_url=base_url, model_name="m", retry_budget=1)
            with pytest.raises(RetryExhausted):
                call_model(endpoint, build_prompt(note("x")))

    def test_4xx_not_retried(self):
        app = _flaky_app(fail_times=5, status=403)
        with run_app(app) as base_url:
            endpoint = ModelEndpoint(base_url=base_url, model_name="m", retry_budget=1)
            with pytest.raises(HttpStatusError) as err:
                call_model(endpoint, build_prompt(note("x")))
        assert err.value.status == 403
        assert app.state.counters["calls"] == 1

    def test_unreachable_host(self):
        endpoint = ModelEndpoint(
            base_url="http://127.0.0.1:9", model_name="m", timeout=0.5, retry_budget=1
        )
        with pytest.raises(TransportError):
            call_model(endpoint, build_prompt(note("x")))

    def test_timeout(self):
        app = FastAPI()

        @app.post("/v1/chat/completions")
        async def slow(request: Request):
            import asyncio

            await asyncio.sleep(2.0)
            return {}

        with run_app(app) as base_url:
            endpoint = ModelEndpoint(base_url=base_url, model_name="m", timeout=0.2, retry_budget=0)
            with pytest.raises(ModelTimeout):
                call_model(endpoint, build_prompt(note("x")))

    def test_endpoint_validation(self):
        with pytest.raises(Exception):
            ModelEndpoint(base_url="http://x", model_name="m", max_parallel_requests=0)
        with pytest.raises(Exception):
            ModelEndpoint(base_url="http://x", model_name="m", timeout=0)


class TestExtractBatch:
    def test_empty(self, lexicon):
        endpoint = ModelEndpoint(base_url="http://unused", model_name="m")
        assert extract_batch([], endpoint, lexicon) == []

    def test_shipped_fixture_order_and_flags(self, lexicon):
        ds, responses = load_shipped_llm_fixture()
        with run_mock_server(ds, responses) as base_url:
            endpoint = ModelEndpoint(base_url=base_url, model_name="mock", max_parallel_requests=5)
            results = extract_batch(ds, endpoint, lexicon)
        assert len(results) == 20
        failed = [i for i, r in enumerate(results) if r.parse_failed]
        assert failed == [11]  # m12, in input position
        assert results[11].label.variant is LabelVariant.NO
        assert results[11].raw_response == "the patient seems fine"

    def test_order_preserved_under_permuted_completion(self, lexicon, monkeypatch):
        # completion order is scrambled with per-note delays; output order must not be
        import vaxtriage.llm as llm_mod

        rng = random.Random(99)
        delays = {f"d{i}": rng.uniform(0, 0.05) for i in range(12)}
        notes = [note(f"note body {i}", nid=f"d{i}") for i in range(12)]
        completion_order = []
        lock = threading.Lock()

        def fake_call(endpoint, bundle):
            nid = bundle.user_text.split("note body ")[1]
            time.sleep(delays[f"d{nid}"])
            with lock:
                completion_order.append(f"d{nid}")
            return json.dumps({"Vaccination": f"name-{nid}"})

        monkeypatch.setattr(llm_mod, "call_model", fake_call)
        endpoint = ModelEndpoint(base_url="http://unused", model_name="m", max_parallel_requests=6)
        results = extract_batch(notes, endpoint, lexicon)
        got = [r.label.surface for r in results]
        assert got == [f"name-{i}" for i in range(12)]
        assert completion_order != [f"d{i}" for i in range(12)]

    def test_transport_error_becomes_error_record(self, lexicon):
        endpoint = ModelEndpoint(
            base_url="http://127.0.0.1:9", model_name="m", timeout=0.3, retry_budget=0
        )
        results = extract_batch([note("x")], endpoint, lexicon)
        assert len(results) == 1
        assert results[0].label.variant is LabelVariant.NO
        assert "TransportError" in results[0].error
