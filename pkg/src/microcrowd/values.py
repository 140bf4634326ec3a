"""Tagged value union and canonical JSON serialization.

Every value that crosses a boundary in this system (wire bodies, event-log
lines, table keys, bundle bytes, content hashes) is one of: string, number,
boolean, list, object, null. Canonical form is UTF-8 JSON with
lexicographically sorted object keys and no insignificant whitespace; two
values are equal exactly when their canonical bytes are equal.

Numbers keep their kind: int 1 serializes as "1", float 1.0 as "1.0", so the
two are distinct values. NaN and infinities are rejected outright.
"""

from __future__ import annotations

import json
import math
from typing import Union

__all__ = [
    "Value",
    "SCALAR_TYPES",
    "MalformedValue",
    "ensure_value",
    "canonical_text",
    "canonicalize",
    "parse_value",
    "values_equal",
]

Value = Union[None, bool, int, float, str, list, dict]

# Scalar type tags admissible in endpoint schemas and function signatures.
SCALAR_TYPES = ("string", "number", "boolean", "list", "object")


class MalformedValue(ValueError):
    """A value outside the supported union (or non-finite, or bad keys)."""


def ensure_value(value: Value, path: str = "value") -> Value:
    """Validate recursively; returns the value unchanged or raises."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise MalformedValue(f"{path}: numbers must be finite")
        return value
    if isinstance(value, list):
        for i, item in enumerate(value):
            ensure_value(item, f"{path}[{i}]")
        return value
    if isinstance(value, dict):
        for key in value:
            if not isinstance(key, str):
                raise MalformedValue(f"{path}: object keys must be strings")
            ensure_value(value[key], f"{path}.{key}")
        return value
    raise MalformedValue(f"{path}: unsupported type {type(value).__name__}")


def canonical_text(value: Value) -> str:
    ensure_value(value)
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonicalize(value: Value) -> bytes:
    """Canonical UTF-8 bytes of a well-formed value. Total on well-formed input."""
    return canonical_text(value).encode("utf-8")


def parse_value(text: str | bytes) -> Value:
    """Parse JSON text and validate it into the value union."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedValue(f"not UTF-8: {exc}") from None
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedValue(f"not JSON: {exc}") from None
    return ensure_value(parsed)


def values_equal(a: Value, b: Value) -> bool:
    return canonicalize(a) == canonicalize(b)
