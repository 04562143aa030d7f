"""Canonical text encodings: 17-significant-digit reals and sorted-key JSON."""
from __future__ import annotations

import enum
import hashlib
import json
import math

import numpy as np


def format_real(value: float) -> str:
    """Render a float with 17 significant digits (exact round trip)."""
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"cannot format non-finite real {value!r}")
    text = "%.17g" % value
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _encode(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, enum.Enum):
        _encode(obj.value, out)
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        # JSON has no NaN/inf
        out.append(format_real(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key), ensure_ascii=True))
            out.append(": ")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, 17-digit reals."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def config_digest(config: dict) -> str:
    """SHA-256 hex digest of the canonical encoding of ``config``."""
    return hashlib.sha256(canonical_json(config).encode("ascii")).hexdigest()
