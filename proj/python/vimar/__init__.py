"""Python access to the vimar decoding engine.

Configs are plain dicts using the same keys as the JSON config files; any
key left out takes its default.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from . import _core
from ._core import (
    FEATURE_SPEC_VERSION,
    ConfigError,
    Corpus,
    DataError,
    DomainError,
    ValueParams,
    VimarError,
    margin_reward,
)

__all__ = [
    "FEATURE_SPEC_VERSION",
    "ConfigError",
    "Corpus",
    "DataError",
    "DomainError",
    "ValueParams",
    "VimarError",
    "config",
    "config_hash",
    "decode",
    "generate",
    "margin_reward",
    "run_cli",
    "train",
]


def _text(cfg: Optional[dict]) -> str:
    return json.dumps(cfg or {})


def config(cfg: Optional[dict] = None) -> dict:
    """Validated config with every default filled in."""
    return json.loads(_core.normalize_config(_text(cfg)))


def config_hash(cfg: Optional[dict] = None) -> str:
    return _core.config_hash(_text(cfg))


def generate(cfg: Optional[dict] = None) -> Corpus:
    return _core.generate(_text(cfg))


def train(corpus: Corpus, cfg: Optional[dict] = None) -> ValueParams:
    return _core.train(_text(cfg), corpus)


def decode(corpus: Corpus, strategy: str, params: Optional[ValueParams] = None,
           cfg: Optional[dict] = None) -> dict[str, Any]:
    """Decode every scene; returns {"results": [...], "summary": {...}}."""
    return json.loads(_core.decode(_text(cfg), corpus, params, strategy))


def run_cli(*args: str) -> tuple[int, str, str]:
    """Run the command line in-process; returns (exit code, stdout, stderr)."""
    return _core.run_cli(list(args))
