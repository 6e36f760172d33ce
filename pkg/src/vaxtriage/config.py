"""Toolkit configuration: one JSON file drives the service and the CLI."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import VaxtriageError
from .llm import Decoding, ModelEndpoint
from .rules import RuleConfig

ENV_CONFIG = "VAXTRIAGE_CONFIG"


class ConfigError(VaxtriageError, ValueError):
    pass


@dataclass
class ToolkitConfig:
    lexicon_path: Optional[Path] = None  # None -> packaged default lexicon
    store_path: Path = Path("annotation-store")
    listen_host: str = "127.0.0.1"
    listen_port: int = 8400
    ui_asset_path: Optional[Path] = None
    endpoint: Optional[ModelEndpoint] = None
    decoding: Decoding = field(default_factory=Decoding)
    rules: RuleConfig = field(default_factory=RuleConfig)
    lease_ttl: float = 300.0
    second_opinion_fraction: float = 0.0

    def validate(self) -> None:
        if self.lexicon_path is not None and not self.lexicon_path.is_file():
            raise ConfigError(f"lexicon file not found: {self.lexicon_path}")
        if self.ui_asset_path is not None and not self.ui_asset_path.is_dir():
            raise ConfigError(f"UI asset directory not found: {self.ui_asset_path}")
        parent = self.store_path if self.store_path.exists() else self.store_path.parent
        if not parent.exists():
            raise ConfigError(f"store path parent does not exist: {self.store_path}")


def load_config(path: Path | str) -> ToolkitConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    endpoint = None
    if doc.get("endpoint"):
        e = doc["endpoint"]
        try:
            endpoint = ModelEndpoint(
                base_url=e["base_url"],
                model_name=e["model_name"],
                auth_token=e.get("auth_token"),
                timeout=e.get("timeout", 30.0),
                max_parallel_requests=e.get("max_parallel_requests", 4),
                retry_budget=e.get("retry_budget", 1),
            )
        except KeyError as exc:
            raise ConfigError(f"endpoint config missing key: {exc}") from exc

    decoding = Decoding(
        temperature=doc.get("decoding", {}).get("temperature", 0.0),
        max_tokens=doc.get("decoding", {}).get("max_tokens", 64),
        model_name=doc.get("decoding", {}).get("model_name"),
    )
    r = doc.get("rules", {})
    rules = RuleConfig(
        future_cue_window=r.get("future_cue_window", 4),
        context_window=r.get("context_window", 3),
        schedule_tolerance_weeks=r.get("schedule_tolerance_weeks", 2.0),
        fuzzy_generic=r.get("fuzzy_generic", True),
    )
    config = ToolkitConfig(
        lexicon_path=Path(doc["lexicon_path"]) if doc.get("lexicon_path") else None,
        store_path=Path(doc.get("store_path", "annotation-store")),
        listen_host=doc.get("listen_host", "127.0.0.1"),
        listen_port=doc.get("listen_port", 8400),
        ui_asset_path=Path(doc["ui_asset_path"]) if doc.get("ui_asset_path") else None,
        endpoint=endpoint,
        decoding=decoding,
        rules=rules,
        lease_ttl=doc.get("lease_ttl", 300.0),
        second_opinion_fraction=doc.get("second_opinion_fraction", 0.0),
    )
    config.validate()
    return config


def resolve_config(explicit: Optional[str]) -> ToolkitConfig:
    """Explicit flag wins, then the environment variable, then defaults."""
    if explicit:
        return load_config(explicit)
    env = os.environ.get(ENV_CONFIG)
    if env:
        return load_config(env)
    return ToolkitConfig()
