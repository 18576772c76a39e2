"""Garment catalog: identifier tokens, prompts, and download planning.

One garment binds a rare identifier token and a garment class to a model
artifact (plain file or chunk manifest) on the local filesystem. The catalog
itself is one canonical-JSON file under the data root, written atomically.
"Downloading" at desk scale means verifying the digests of already-present
files and flipping a flag; there is no network client.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

from . import chunker, weight_store
from .canonical import canonical_json_bytes

CATALOG_NAME = "catalog.json"
DEFAULT_DATA_DIR = "./mfr_data"
DATA_DIR_ENV = "MFR_HOME"

KIB = 1024

# Identifier tokens must be rare strings, not ordinary words; this stop-list
# rejects the usual offenders (articles, pronouns, template words, common
# clothing vocabulary).
STOP_WORDS = frozenset(
    """
    a an the and or not of in on at to for with by from as is are was were be
    been being it its this that these those i you he she we they them his her
    my your our me us do does did done has have had will would can could may
    might shall should must no yes any all some one two three new old big only
    photo photos image images picture pictures person people man woman men
    women wear wearing wears worn try tryon fit fitting style styled fashion
    cloth clothes clothing garment garments outfit outfits look looks
    shirt shirts dress dresses skirt skirts pant pants jean jeans coat coats
    jacket jackets hat hats shoe shoes sock socks top tops tee tees hoodie
    hoodies sweater sweaters suit suits blouse blouses scarf scarves glove
    gloves belt belts bag bags
    red green blue black white gray grey yellow orange purple pink brown
    small medium large tiny huge long short wide narrow light dark soft hard
    """.split()
)

_TOKEN_RE = re.compile(r"^[a-z][a-z0-9]*$")

# Letters whose spoken names start with a vowel sound; governs a/an when a
# vowel-less token is read out letter by letter ("rtr" -> "an ar-tee-ar").
_VOWEL_NAMED_LETTERS = frozenset("aefhilmnorsx")


class CatalogError(Exception):
    """Raised for invalid records, duplicates, or failed artifact verification."""


def data_root(explicit: str | os.PathLike | None = None) -> Path:
    """Resolve the data directory: explicit arg, $MFR_HOME, or ./mfr_data."""
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR))


def validate_token(token: str) -> str:
    if not token or not _TOKEN_RE.match(token):
        raise CatalogError(f"identifier token {token!r} must be lowercase alphanumeric")
    if token in STOP_WORDS:
        raise CatalogError(f"identifier token {token!r} is an ordinary word; pick a rare token")
    return token


def prompt_text(identifier_token: str, garment_class: str) -> str:
    """The conditioning prompt for one garment:
    ``a photo of a/an {token} {class}``.

    "an" is used when the token starts with a vowel, or when a vowel-less
    token would be spelled out and its first letter's name starts with a
    vowel sound ("rtr" reads as "ar-tee-ar").
    """
    first = identifier_token[0]
    if first in "aeiou":
        article = "an"
    elif not any(c in "aeiou" for c in identifier_token):
        article = "an" if first in _VOWEL_NAMED_LETTERS else "a"
    else:
        article = "a"
    return f"a photo of {article} {identifier_token} {garment_class}"


@dataclass(frozen=True)
class GarmentRecord:
    garment_id: str
    display_name: str
    garment_class: str
    identifier_token: str
    artifact: str  # path relative to the catalog root; *.json means chunk manifest
    size_bytes: int
    interest_score: float = 0.0
    downloaded: bool = False

    def __post_init__(self):
        if not self.garment_id:
            raise CatalogError("garment_id must be non-empty")
        if not self.garment_class:
            raise CatalogError("garment_class must be non-empty")
        validate_token(self.identifier_token)
        if self.size_bytes < 1:
            raise CatalogError("size_bytes must be positive")
        if not (self.interest_score >= 0.0 and math.isfinite(self.interest_score)):
            raise CatalogError("interest_score must be finite and non-negative")

    @property
    def is_chunked(self) -> bool:
        return self.artifact.endswith(".json")

    def to_obj(self) -> dict:
        return {
            "garment_id": self.garment_id,
            "display_name": self.display_name,
            "garment_class": self.garment_class,
            "identifier_token": self.identifier_token,
            "artifact": self.artifact,
            "size_bytes": self.size_bytes,
            "interest_score": self.interest_score,
            "downloaded": self.downloaded,
        }


class Catalog:
    """The on-disk garment registry rooted at one data directory."""

    def __init__(self, root: str | os.PathLike | None = None):
        self.root = data_root(root)
        self._records: dict[str, GarmentRecord] = {}
        self._load()

    @property
    def path(self) -> Path:
        return self.root / CATALOG_NAME

    def _load(self) -> None:
        if not self.path.is_file():
            return
        doc = json.loads(self.path.read_text("utf-8"))
        for obj in doc.get("garments", []):
            record = GarmentRecord(**obj)
            self._records[record.garment_id] = record

    def _save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        doc = {"garments": [r.to_obj() for r in self._sorted_records()]}
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=CATALOG_NAME, suffix=".tmp")
        with os.fdopen(fd, "wb") as f:
            f.write(canonical_json_bytes(doc))
        os.replace(tmp, self.path)

    def _sorted_records(self) -> list[GarmentRecord]:
        return sorted(self._records.values(), key=lambda r: (r.display_name, r.garment_id))

    def artifact_path(self, record: GarmentRecord) -> Path:
        return self.root / record.artifact

    def verify_garment_artifact(self, record: GarmentRecord) -> list[str]:
        path = self.artifact_path(record)
        if record.is_chunked:
            return chunker.verify_manifest(path)
        return weight_store.verify_artifact(path)

    def register_garment(self, record: GarmentRecord) -> GarmentRecord:
        """Persist a new garment after checking invariants and its artifact."""
        if record.garment_id in self._records:
            raise CatalogError(f"duplicate garment_id {record.garment_id!r}")
        key = (record.identifier_token, record.garment_class)
        for other in self._records.values():
            if (other.identifier_token, other.garment_class) == key:
                raise CatalogError(
                    f"duplicate (token, class) pair {key!r} already used by {other.garment_id!r}"
                )
        violations = self.verify_garment_artifact(record)
        if violations:
            raise CatalogError(
                f"artifact verification failed for {record.garment_id!r}: {violations[0]}"
            )
        self._records[record.garment_id] = record
        self._save()
        return record

    def get(self, garment_id: str) -> GarmentRecord:
        try:
            return self._records[garment_id]
        except KeyError:
            raise CatalogError(f"unknown garment {garment_id!r}") from None

    def prompt_for(self, garment_id: str) -> str:
        record = self.get(garment_id)
        return prompt_text(record.identifier_token, record.garment_class)

    def list_garments(self, class_filter: str | None = None) -> list[GarmentRecord]:
        records = self._sorted_records()
        if class_filter is None:
            return records
        return [r for r in records if r.garment_class == class_filter]

    def set_downloaded(self, garment_id: str) -> GarmentRecord:
        """Verify the garment's on-disk artifact digests, then mark it downloaded."""
        record = self.get(garment_id)
        violations = self.verify_garment_artifact(record)
        if violations:
            raise CatalogError(f"artifact verification failed: {violations[0]}")
        record = replace(record, downloaded=True)
        self._records[garment_id] = record
        self._save()
        return record

    def set_interest(self, garment_id: str, score: float) -> GarmentRecord:
        record = replace(self.get(garment_id), interest_score=score)
        self._records[garment_id] = record  # __post_init__ re-validates
        self._save()
        return record

    def plan_downloads(self, budget_bytes: int) -> list[str]:
        """Pick the not-yet-downloaded garments to prefetch under the budget.

        Exact 0/1 knapsack over sizes quantized to whole KiB (rounded up),
        maximizing total interest score. Ties prefer the smaller total byte
        size, then the lexicographically smallest id set. Returns sorted ids.
        """
        if budget_bytes < 0:
            raise CatalogError("budget must be >= 0")
        items = sorted(
            (r for r in self._records.values() if not r.downloaded),
            key=lambda r: r.garment_id,
        )
        weights = [-(-r.size_bytes // KIB) for r in items]
        capacity = min(budget_bytes // KIB, sum(weights))
        n = len(items)

        # best[i][c] = (max score, min true byte total) over items[i:] within c
        best = [[(0.0, 0)] * (capacity + 1) for _ in range(n + 1)]
        for i in range(n - 1, -1, -1):
            w, score, size = weights[i], items[i].interest_score, items[i].size_bytes
            row, nxt = best[i], best[i + 1]
            for c in range(capacity + 1):
                skip = nxt[c]
                if w <= c:
                    s2, z2 = nxt[c - w]
                    take = (score + s2, size + z2)
                    row[c] = take if (take[0], -take[1]) > (skip[0], -skip[1]) else skip
                else:
                    row[c] = skip

        chosen = []
        c = capacity
        for i in range(n):
            w, score, size = weights[i], items[i].interest_score, items[i].size_bytes
            if w <= c:
                s2, z2 = best[i + 1][c - w]
                if (score + s2, size + z2) == best[i][c]:
                    chosen.append(items[i].garment_id)
                    c -= w
                    continue
        return chosen
