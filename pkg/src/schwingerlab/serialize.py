"""Canonical JSON helpers: digests, strict schemas, deterministic files."""

from __future__ import annotations

import hashlib
import json
from typing import Iterable

from .errors import SchemaError


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def canonical_digest(obj) -> str:
    """sha256 of the canonical JSON encoding; stable across reruns."""
    return hashlib.sha256(canonical_json(obj).encode("ascii")).hexdigest()


def require_keys(doc, required: Iterable[str], optional: Iterable[str] = (),
                 ctx: str = "document") -> None:
    """Strict schema gate: every required key present, no unknown keys."""
    if not isinstance(doc, dict):
        raise SchemaError(f"{ctx} must be an object, got {type(doc).__name__}")
    required = tuple(required)
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise SchemaError(f"{ctx} has unknown key(s): {sorted(unknown)}")
    for key in required:
        if key not in doc:
            raise SchemaError(f"{ctx} is missing required key {key!r}")


def write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None


def complex_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]
