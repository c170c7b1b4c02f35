"""Canonical text encoding of numbers and JSON documents.

Every numeric surface of the package (model files, feature CSVs, report
JSON, HTTP responses) goes through :func:`format_float`, so the CLI and the
service can never disagree on the last digit and all round trips are
lossless.
"""

from __future__ import annotations

import json
import math
from typing import Any

__all__ = ["format_float", "dumps_json"]


def format_float(x: float) -> str:
    """Render a finite binary64 with up to 17 significant decimal digits.

    ``float(format_float(x)) == x`` for every finite input, and the encoding
    is idempotent (re-encoding the parsed value reproduces the same text).
    Negative zero is normalized to ``0`` so JavaScript and Python renderings
    agree.
    """
    if not math.isfinite(x):
        raise ValueError(f"non-finite value is not serializable: {x!r}")
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def _emit(value: Any, parts: list[str], indent: int | None, level: int) -> None:
    if value is None:
        parts.append("null")
    elif value is True:
        parts.append("true")
    elif value is False:
        parts.append("false")
    elif isinstance(value, int):
        parts.append(str(value))
    elif isinstance(value, float):
        parts.append(format_float(value))
    elif isinstance(value, str):
        parts.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        _emit_container(value.items(), "{", "}", parts, indent, level, keyed=True)
    elif isinstance(value, (list, tuple)):
        _emit_container(value, "[", "]", parts, indent, level, keyed=False)
    else:
        raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def _emit_container(items, open_ch, close_ch, parts, indent, level, keyed) -> None:
    items = list(items)
    if not items:
        parts.append(open_ch + close_ch)
        return
    parts.append(open_ch)
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    for i, item in enumerate(items):
        if i:
            parts.append("," if indent is None else ",")
        parts.append(pad)
        if keyed:
            key, val = item
            if not isinstance(key, str):
                raise TypeError("JSON object keys must be strings")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":" if indent is None else ": ")
            _emit(val, parts, indent, level + 1)
        else:
            _emit(item, parts, indent, level + 1)
    if indent is not None:
        parts.append("\n" + " " * (indent * level))
    parts.append(close_ch)


def dumps_json(value: Any, indent: int | None = None) -> str:
    """Serialize to JSON deterministically, floats via :func:`format_float`.

    Keys keep insertion order; the output for a given value is byte-stable
    across runs and platforms.
    """
    parts: list[str] = []
    _emit(value, parts, indent, 0)
    return "".join(parts)
