"""Flat key-value text records: `key = value` lines, order-preserving.

Used for key files, run manifests, attack reports and the CLI config.
"""

from __future__ import annotations


def dumps(items: dict) -> str:
    lines = []
    for key, value in items.items():
        key = str(key)
        text = str(value)
        if "=" in key or "\n" in key or "\n" in text:
            raise ValueError(f"unserializable entry {key!r}")
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> dict:
    items = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        items[key.strip()] = value.strip()
    return items


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")
