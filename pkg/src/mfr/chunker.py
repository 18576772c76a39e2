"""Split a model artifact into similarly-sized chunk files and reassemble it.

Chunks are contiguous tensor ranges, each a fully valid MFRW artifact, so a
partially downloaded model is still inspectable. Balance is by serialized
payload bytes with a minimax objective; the manifest records a sha256 digest
per chunk file and reassembly refuses to load on any mismatch.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import weight_store
from .canonical import canonical_json_bytes
from .weight_store import AnyTensor


class ChunkError(Exception):
    """Raised for invalid chunk plans, manifests, or integrity failures."""


MANIFEST_NAME = "manifest.json"


def split_plan(tensor_sizes: list[int], n_chunks: int) -> list[tuple[int, int]]:
    """Partition sizes into ``n_chunks`` contiguous ranges minimizing the
    largest chunk byte total.

    Returns half-open index ranges. Among minimax-optimal partitions the
    lexicographically smallest cut sequence wins. n_chunks=2 is a prefix-sum
    scan; the general case is a dynamic program over split points.
    """
    n = len(tensor_sizes)
    if not 1 <= n_chunks <= n:
        raise ChunkError(f"n_chunks must be in [1, {n}], got {n_chunks}")
    if any(s <= 0 for s in tensor_sizes):
        raise ChunkError("all tensor sizes must be positive")
    prefix = [0]
    for s in tensor_sizes:
        prefix.append(prefix[-1] + s)

    if n_chunks == 1:
        return [(0, n)]
    if n_chunks == 2:
        best_cut, best_max = 1, max(prefix[1], prefix[n] - prefix[1])
        for c in range(2, n):
            m = max(prefix[c], prefix[n] - prefix[c])
            if m < best_max:
                best_cut, best_max = c, m
        return [(0, best_cut), (best_cut, n)]

    # dp[j][i]: minimal max chunk size splitting the first i tensors into j chunks
    inf = float("inf")
    dp = [[inf] * (n + 1) for _ in range(n_chunks + 1)]
    for i in range(1, n + 1):
        dp[1][i] = prefix[i]
    for j in range(2, n_chunks + 1):
        for i in range(j, n + 1):
            best = inf
            for s in range(j - 1, i):
                cand = max(dp[j - 1][s], prefix[i] - prefix[s])
                if cand < best:
                    best = cand
            dp[j][i] = best
    minimax = dp[n_chunks][n]

    # Lexicographically smallest cuts: extend each chunk minimally while the
    # remaining suffix still fits in the remaining chunk budget at <= minimax.
    ranges = []
    start = 0
    for remaining in range(n_chunks, 1, -1):
        end = start + 1
        while (
            prefix[end] - prefix[start] > minimax
            or not _suffix_fits(prefix, end, remaining - 1, minimax)
        ):
            end += 1
        ranges.append((start, end))
        start = end
    ranges.append((start, n))
    return ranges


def _suffix_fits(prefix: list[int], start: int, chunks: int, limit: int) -> bool:
    """True iff tensors[start:] can form exactly ``chunks`` non-empty chunks, each <= limit."""
    n = len(prefix) - 1
    if n - start < chunks:
        return False
    # Greedy maximal packing gives the minimum number of chunks needed; any
    # count between that and the tensor count is achievable by splitting.
    needed, i = 0, start
    while i < n:
        j = i + 1
        while j < n and prefix[j + 1] - prefix[i] <= limit:
            j += 1
        if prefix[j] - prefix[i] > limit:
            return False
        needed += 1
        i = j
    return needed <= chunks


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _payload_bytes(t: AnyTensor) -> int:
    return t.payload_bytes


def write_chunks(in_path, out_dir, n_chunks: int) -> dict:
    """Split the artifact at ``in_path`` into chunk artifacts under ``out_dir``.

    Returns the manifest object; the same content is written to
    ``out_dir/manifest.json`` as canonical JSON.
    """
    tensors, metadata = weight_store.read_artifact(in_path)
    if not tensors:
        raise ChunkError("cannot chunk an artifact with no tensors")
    ranges = split_plan([_payload_bytes(t) for t in tensors], n_chunks)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (a, b) in enumerate(ranges):
        fname = f"chunk_{i:03d}.mfrw"
        fpath = out_dir / fname
        weight_store.write_artifact(tensors[a:b], metadata, fpath)
        entries.append(
            {
                "file": fname,
                "bytes": fpath.stat().st_size,
                "sha256": _sha256_file(fpath),
                "first_tensor": tensors[a].name,
                "last_tensor": tensors[b - 1].name,
            }
        )
    manifest = {
        "model_id": metadata.get("model_id", ""),
        "n_chunks": n_chunks,
        "chunks": entries,
    }
    (out_dir / MANIFEST_NAME).write_bytes(canonical_json_bytes(manifest))
    return manifest


def _read_manifest(manifest_path: Path) -> dict:
    try:
        manifest = json.loads(manifest_path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ChunkError(f"unreadable manifest {manifest_path}: {exc}") from exc
    if not isinstance(manifest, dict) or not isinstance(manifest.get("chunks"), list):
        raise ChunkError(f"malformed manifest {manifest_path}")
    return manifest


def verify_manifest(manifest_path) -> list[str]:
    """Check chunk presence and digests; returns violations (empty = ok)."""
    manifest_path = Path(manifest_path)
    try:
        manifest = _read_manifest(manifest_path)
    except ChunkError as exc:
        return [str(exc)]
    violations = []
    for entry in manifest["chunks"]:
        fpath = manifest_path.parent / entry["file"]
        if not fpath.is_file():
            violations.append(f"missing chunk {entry['file']}")
            continue
        digest = _sha256_file(fpath)
        if digest != entry["sha256"]:
            violations.append(f"digest mismatch for chunk {entry['file']}")
            continue
        violations.extend(weight_store.verify_artifact(fpath))
    return violations


def load_chunked(manifest_path) -> tuple[list[AnyTensor], dict]:
    """Reassemble a chunked artifact; refuses to load on any digest mismatch."""
    manifest_path = Path(manifest_path)
    manifest = _read_manifest(manifest_path)
    tensors: list[AnyTensor] = []
    metadata: dict = {}
    for entry in manifest["chunks"]:
        fpath = manifest_path.parent / entry["file"]
        if not fpath.is_file():
            raise ChunkError(f"missing chunk {entry['file']}")
        digest = _sha256_file(fpath)
        if digest != entry["sha256"]:
            raise ChunkError(f"digest mismatch for chunk {entry['file']}")
        part, metadata = weight_store.read_artifact(fpath)
        if not part or part[0].name != entry["first_tensor"] or part[-1].name != entry["last_tensor"]:
            raise ChunkError(f"chunk {entry['file']} does not match its manifest tensor range")
        tensors.extend(part)
    return tensors, metadata
