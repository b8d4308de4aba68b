# -*- coding: utf-8 -*-
"""
reebpa/run_config.py

Run configurations: loading, schema validation and hashing.

The schema lives in assets/schema/run_config.schema.json. jsonschema is
imported on first validation only.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from typing import Optional

from reebpa.errors import ConfigError
from reebpa.fixtures import SCHEMA_PATH, _load_json

logger = logging.getLogger(__name__)

# Keys that never change a result and stay out of the hash.
HASH_EXCLUDED = ("workers", "out", "csv", "log_level")

_SCHEMA: Optional[dict] = None


def schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        _SCHEMA = _load_json(SCHEMA_PATH)
        if not _SCHEMA:
            raise ConfigError(f"schema file missing or unreadable: {SCHEMA_PATH}")
    return _SCHEMA


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _error_pointer(err) -> str:
    base = _pointer(err.absolute_path)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extras = sorted(k for k in err.instance if k not in allowed)
        if extras:
            return f"{base}/{extras[0]}"
    return base or "/"


def validate_config(cfg: dict) -> dict:
    """Validate against the shipped schema; returns a deep copy.

    Raises:
        ConfigError: the first violation, with a JSON pointer to the offending key.
    """
    try:
        import jsonschema
    except ImportError as exc:  # pragma: no cover - declared dependency
        raise ConfigError(f"jsonschema is required for config validation ({exc})") from exc

    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a JSON object")
    validator_cls = jsonschema.validators.validator_for(schema())
    validator = validator_cls(schema())
    errors = sorted(
        validator.iter_errors(cfg),
        key=lambda e: (len(e.absolute_path), e.validator != "additionalProperties",
                       [str(p) for p in e.absolute_path]),
    )
    if errors:
        err = errors[0]
        pointer = _error_pointer(err)
        if err.validator == "additionalProperties":
            message = f"unknown key '{pointer.rsplit('/', 1)[-1]}'"
        else:
            message = err.message
        raise ConfigError(message, pointer)
    return copy.deepcopy(cfg)


def load_config(path: str) -> dict:
    """Read a JSON config file (not yet validated).

    Raises:
        ConfigError: the file is not valid JSON.
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical JSON of cfg without the run-only keys."""
    payload = {k: v for k, v in cfg.items() if k not in HASH_EXCLUDED}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
