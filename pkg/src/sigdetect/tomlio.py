"""Minimal TOML reading/writing for scenario and policy files.

Reading goes through the standard parser (``tomllib`` on 3.11+, ``tomli``
otherwise).  Writing is hand-rolled because we only ever emit a small,
known shape -- top-level scalars and arrays, plus arrays of tables -- and
we need float round-tripping to be bit-exact, which ``repr`` guarantees
(shortest round-trippable decimal form).
"""

from __future__ import annotations

import json
import math

try:  # pragma: no cover - exercised implicitly by whichever runtime we're on
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover
    import tomli as _toml


class DocumentFormatError(ValueError):
    """Raised when a config document cannot be parsed."""


def load_document(text: str) -> dict:
    """Parse a TOML document into a plain dict.

    Raises DocumentFormatError with the parser's diagnostic (which names
    the offending line) on malformed input.
    """
    try:
        return _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise DocumentFormatError(str(exc)) from exc


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialize non-finite float {value!r}")
        return repr(value)
    if isinstance(value, str):
        # json string escaping is a valid TOML basic string for our keys
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise TypeError(f"unsupported TOML value type: {type(value).__name__}")


def dumps_document(doc: dict) -> str:
    """Serialize a dict to TOML text.

    Supports scalar values, (nested) arrays, and lists of dicts (emitted
    as ``[[key]]`` arrays of tables whose values are scalars/arrays).
    Key order follows dict insertion order so output is deterministic.
    """
    lines = []
    tables = []
    for key, value in doc.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_format_value(value)}")
    for key, entries in tables:
        for entry in entries:
            lines.append("")
            lines.append(f"[[{key}]]")
            for k, v in entry.items():
                lines.append(f"{k} = {_format_value(v)}")
    return "\n".join(lines) + "\n"
