"""Deployment settings: provider wiring, caps, and data paths.

Settings load from an optional YAML file, then environment variables
prefixed ``AGENTFORUM_`` override individual keys (for example
``AGENTFORUM_PORT=9000`` or ``AGENTFORUM_PROVIDER=http``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

import yaml

from .providers import HttpProvider, LanguageModelProvider, MockProvider
from .retrieval import (
    HttpSearchClient,
    SearchClient,
    SourceProvider,
    default_search_clients,
)

ENV_PREFIX = "AGENTFORUM_"


@dataclass(frozen=True)
class Settings:
    provider: str = "mock"  # "mock" | "http"
    provider_base_url: str = ""
    provider_api_key: str = ""
    scholar_api_a_url: str = ""  # empty means the bundled fixture corpus
    scholar_api_a_key: str = ""
    scholar_api_b_url: str = ""
    scholar_api_b_key: str = ""
    responder_cap: int = 8
    tool_round_cap: int = 2
    distill_window: int = 10
    memory_k: int = 5
    search_limit: int = 8
    graph_query_k: int = 5
    follow_on_rounds: bool = False
    data_dir: str = ""  # empty means in-memory only (no event files)
    host: str = "127.0.0.1"
    port: int = 8440
    persona_dir: str = ""  # empty means the bundled catalog

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _coerce(name: str, raw: str, current) -> object:
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    return raw


def load_settings(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> Settings:
    """YAML file first (if given), then AGENTFORUM_* environment overrides."""
    settings = Settings()
    if path is not None:
        with open(path, encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
        if not isinstance(data, dict):
            raise ValueError(f"settings file {path} must hold a mapping")
        known = {f.name for f in fields(Settings)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown settings keys: {unknown}")
        settings = replace(settings, **data)
    env = os.environ if env is None else env
    overrides = {}
    for f in fields(Settings):
        raw = env.get(ENV_PREFIX + f.name.upper())
        if raw is not None:
            overrides[f.name] = _coerce(f.name, raw, getattr(settings, f.name))
    if overrides:
        settings = replace(settings, **overrides)
    return settings


def build_provider(settings: Settings) -> LanguageModelProvider:
    if settings.provider == "mock":
        return MockProvider()
    if settings.provider == "http":
        if not settings.provider_base_url:
            raise ValueError("provider_base_url is required for the http provider")
        return HttpProvider(
            base_url=settings.provider_base_url, api_key=settings.provider_api_key
        )
    raise ValueError(f"unknown provider {settings.provider!r}")


def build_search_clients(settings: Settings) -> tuple[SearchClient, ...]:
    fixtures = default_search_clients()
    clients: list[SearchClient] = []
    if settings.scholar_api_a_url:
        clients.append(
            HttpSearchClient(
                SourceProvider.SCHOLAR_API_A,
                settings.scholar_api_a_url,
                settings.scholar_api_a_key,
            )
        )
    else:
        clients.append(fixtures[0])
    if settings.scholar_api_b_url:
        clients.append(
            HttpSearchClient(
                SourceProvider.SCHOLAR_API_B,
                settings.scholar_api_b_url,
                settings.scholar_api_b_key,
            )
        )
    else:
        clients.append(fixtures[1])
    return tuple(clients)
