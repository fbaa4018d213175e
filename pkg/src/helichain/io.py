"""Deterministic serialization: 17-significant-digit floats, sorted keys,
and a config hash that names every emitted file."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

SCHEMA = "helichain/v1"
FILE_TAG = "helichain-v1"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no non-finite numbers
        return fmt(v) if math.isfinite(v) else json.dumps(str(v))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(obj[k], indent, level + 1) for k in sorted(obj, key=str)]
        return "{" + pad + (sep + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + (sep + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and sorted keys."""
    return _encode(obj, indent, 0) + "\n"


def config_hash(config: dict) -> str:
    return hashlib.sha256(dumps(config, indent=0).encode()).hexdigest()


def output_name(subcommand: str, digest: str, suffix: str) -> str:
    return f"{FILE_TAG}_{subcommand}_{digest[:12]}{suffix}"


def write_text(directory: Path, name: str, text: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
