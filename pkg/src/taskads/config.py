"""Service configuration: JSON file with environment overrides.

Precedence: built-in defaults < config file < TASKADS_* environment
variables. The store path selects the file-backed event log; leaving it
unset runs fully in memory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional


@dataclass(frozen=True)
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8787
    store_path: Optional[str] = None  # None -> in-memory store
    reservation_ttl: float = 120.0
    overcommit: bool = False
    default_alpha: float = 0.05
    practitioner_token: str = "practitioner-token"
    client_token: str = "client-token"


_ENV_KEYS = {
    "TASKADS_LISTEN_HOST": ("listen_host", str),
    "TASKADS_LISTEN_PORT": ("listen_port", int),
    "TASKADS_STORE_PATH": ("store_path", str),
    "TASKADS_RESERVATION_TTL": ("reservation_ttl", float),
    "TASKADS_OVERCOMMIT": ("overcommit", lambda v: v.lower() in ("1", "true", "yes")),
    "TASKADS_DEFAULT_ALPHA": ("default_alpha", float),
    "TASKADS_PRACTITIONER_TOKEN": ("practitioner_token", str),
    "TASKADS_CLIENT_TOKEN": ("client_token", str),
}


def load_config(path: Optional[str | Path] = None, env: Optional[Mapping[str, str]] = None) -> ServiceConfig:
    values: dict = {}
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(doc) - {f for f, _ in _ENV_KEYS.values()}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    env = os.environ if env is None else env
    for key, (field_name, cast) in _ENV_KEYS.items():
        if key in env:
            values[field_name] = cast(env[key])
    return ServiceConfig(**values)
