"""Canonical-ingredient resolution and the remote compound-synonym client.

The in-memory index maps every English name and synonym onto its owning
entry, so "acetylsalicylic acid" and "aspirin" resolve identically. The
remote client is ingestion-time only; nothing on the request path talks to
the network.
"""

from __future__ import annotations

import re
import time
import urllib.parse
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import httpx

_STRIP_CHARS = re.compile(r"[,.;:()\[\]]")
_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Casefold, drop ,.;:()[] punctuation, collapse whitespace, trim. Idempotent."""
    cleaned = _STRIP_CHARS.sub(" ", name.casefold())
    return _WS.sub(" ", cleaned).strip()


class IngredientKind(Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"

    @classmethod
    def parse(cls, label: str) -> "IngredientKind":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"ingredient type must be 'active' or 'inactive', got {label!r}")


class SynonymError(ValueError):
    """Raised for invalid entries or cross-entry key collisions."""


@dataclass(frozen=True)
class IngredientEntry:
    """A canonical ingredient with its English name and synonym list."""

    ingredient: str
    english_name: str
    synonyms: tuple[str, ...]
    kind: IngredientKind

    def __post_init__(self) -> None:
        if not self.english_name.strip():
            raise SynonymError("english_name must be non-empty")
        # Dedupe synonyms after normalization, keeping first spellings.
        seen: dict[str, str] = {}
        for synonym in self.synonyms:
            key = normalize_name(synonym)
            if key and key not in seen:
                seen[key] = synonym
        object.__setattr__(self, "synonyms", tuple(seen.values()))

    def keys(self) -> set[str]:
        keys = {normalize_name(self.english_name)}
        keys.update(normalize_name(s) for s in self.synonyms)
        keys.discard("")
        return keys


class SynonymIndex:
    """Immutable resolution index; safe to share across threads."""

    def __init__(self, entries: Iterable[IngredientEntry]):
        self._entries = tuple(entries)
        lookup: dict[str, IngredientEntry] = {}
        for entry in self._entries:
            for key in entry.keys():
                owner = lookup.get(key)
                if owner is not None and owner is not entry:
                    raise SynonymError(
                        f"synonym key {key!r} claimed by both "
                        f"{owner.english_name!r} and {entry.english_name!r}"
                    )
                lookup[key] = entry
        self._lookup = lookup

    @property
    def entries(self) -> tuple[IngredientEntry, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def resolve(self, name: str) -> Optional[IngredientEntry]:
        """Owning entry for a name or synonym; None when unknown."""
        return self._lookup.get(normalize_name(name))

    def same_ingredient(self, a: str, b: str) -> bool:
        """True iff both names resolve to the same entry."""
        entry_a = self.resolve(a)
        return entry_a is not None and entry_a is self.resolve(b)


def load_index(entries: Iterable[IngredientEntry]) -> SynonymIndex:
    return SynonymIndex(entries)


class SynonymServiceError(RuntimeError):
    """Raised when the remote synonym service stays unreachable after retries."""


@dataclass
class PubChemClient:
    """Client for the public compound/substance synonym REST endpoints.

    Unknown names (404 from both endpoints) yield an empty list; transport
    failures are retried with exponential backoff before raising.
    """

    base_url: str = "https://pubchem.ncbi.nlm.nih.gov/rest/pug"
    client: Optional[httpx.Client] = None
    max_attempts: int = 3
    backoff_base: float = 0.5
    backoff_factor: float = 2.0
    timeout: float = 10.0
    sleep: Callable[[float], None] = field(default=time.sleep)

    def fetch_synonyms(self, english_name: str) -> list[str]:
        """Union of substance and compound synonyms, normalized and deduped."""
        if not english_name.strip():
            raise ValueError("ingredient name must be non-empty")
        encoded = urllib.parse.quote(english_name, safe="")
        merged: dict[str, None] = {}
        for domain in ("substance", "compound"):
            url = f"{self.base_url}/{domain}/name/{encoded}/synonyms/JSON"
            for synonym in self._fetch_one(url):
                key = normalize_name(synonym)
                if key:
                    merged.setdefault(key)
        return list(merged)

    def _fetch_one(self, url: str) -> Sequence[str]:
        client = self.client or httpx.Client(timeout=self.timeout)
        owns_client = self.client is None
        try:
            delay = self.backoff_base
            for attempt in range(1, self.max_attempts + 1):
                try:
                    response = client.get(url)
                except httpx.TransportError as exc:
                    if attempt == self.max_attempts:
                        raise SynonymServiceError(
                            f"synonym service unreachable after "
                            f"{self.max_attempts} attempts: {url}"
                        ) from exc
                    self.sleep(delay)
                    delay *= self.backoff_factor
                    continue
                if response.status_code == 404:
                    return []
                if response.status_code >= 500:
                    if attempt == self.max_attempts:
                        raise SynonymServiceError(
                            f"synonym service failed with {response.status_code}: {url}"
                        )
                    self.sleep(delay)
                    delay *= self.backoff_factor
                    continue
                response.raise_for_status()
                return self._parse_synonyms(response.json())
            raise SynonymServiceError(f"synonym service unreachable: {url}")
        finally:
            if owns_client:
                client.close()

    @staticmethod
    def _parse_synonyms(payload: dict) -> list[str]:
        synonyms: list[str] = []
        for info in payload.get("InformationList", {}).get("Information", []):
            synonyms.extend(info.get("Synonym", []))
        return synonyms
