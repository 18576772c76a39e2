"""Canonical JSON: sorted keys, no insignificant whitespace, shortest floats.

Every persistent or wire-visible JSON document in this toolkit (artifact
headers, chunk manifests, catalog files, CLI --json output, HTTP bodies) goes
through this single serializer so that identical values always produce
identical bytes.
"""

from __future__ import annotations

import json
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize ``obj`` to the canonical JSON text form."""
    return json.dumps(
        obj,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_json_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("utf-8")
