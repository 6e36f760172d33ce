from __future__ import annotations

from importlib import resources

import pytest

from vaxtriage.corpus import load_notes, load_templates
from vaxtriage.lexicon import load_default_lexicon


@pytest.fixture(scope="session")
def lexicon():
    return load_default_lexicon()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


def _fixture_text(name: str) -> str:
    return resources.files("vaxtriage").joinpath(f"data/fixtures/{name}").read_text("utf-8")


@pytest.fixture(scope="session")
def golden_dataset():
    return load_notes(_fixture_text("golden_notes.jsonl"), name="golden")


@pytest.fixture(scope="session")
def synth60_dataset():
    return load_notes(_fixture_text("synth60.jsonl"), name="synth60")
