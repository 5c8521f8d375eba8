"""Typed drug / cell-line name lists with provenance.

The vocabulary is the only mutable piece of pipeline state: unrestricted
synthesis feeds model-filled tokens back in (source ``synthesized``), which
changes what the next mining pass can match.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import InputError, ValidationError

logger = logging.getLogger(__name__)


class EntityType(str, Enum):
    DRUG = "drug"
    CELL_LINE = "cell_line"


class VocabSource(str, Enum):
    SEED_DATASET = "seed_dataset"
    LINCS = "lincs"
    GDSC = "gdsc"
    CCLE = "ccle"
    NCI60 = "nci60"
    SYNTHESIZED = "synthesized"


#: Sources that correspond to curated name lists. Synthesized entries are
#: model output and are never treated as valid names in restricted mode.
VALID_SOURCES = frozenset(VocabSource) - {VocabSource.SYNTHESIZED}


def canonical_key(surface: str) -> str:
    """Lowercased, whitespace-collapsed form used for identity everywhere."""
    return " ".join(surface.split()).lower()


@dataclass(frozen=True)
class VocabEntry:
    surface: str
    entity_type: EntityType
    source: VocabSource

    @property
    def key(self) -> str:
        return canonical_key(self.surface)


class EntityVocabulary:
    """Set of typed surface forms, unique per (canonical key, entity type).

    Re-adding an existing (key, type) pair is a no-op regardless of source,
    so expansion is idempotent and the first provenance wins.
    """

    def __init__(self, entries: Iterable[VocabEntry] = ()) -> None:
        self._entries: dict[tuple[str, EntityType], VocabEntry] = {}
        for entry in entries:
            self.add(entry)

    def add(self, entry: VocabEntry) -> bool:
        """Insert an entry; returns True if it was new."""
        if not entry.surface.strip():
            raise ValidationError("vocabulary surface form must be non-empty")
        ident = (entry.key, entry.entity_type)
        if ident in self._entries:
            return False
        self._entries[ident] = entry
        return True

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[VocabEntry]:
        # Deterministic order independent of insertion history.
        return iter(sorted(self._entries.values(), key=lambda e: (e.key, e.entity_type.value)))

    def __contains__(self, item: tuple[str, EntityType]) -> bool:
        surface, entity_type = item
        return (canonical_key(surface), entity_type) in self._entries

    def entries_of_type(self, entity_type: EntityType) -> list[VocabEntry]:
        return [e for e in self if e.entity_type is entity_type]

    def surfaces_of_type(self, entity_type: EntityType, valid_only: bool = False) -> list[str]:
        """Sorted canonical keys of one entity type.

        ``valid_only`` drops synthesized entries; restricted-mode decoding and
        the restriction audit both use that subset.
        """
        keys = {
            e.key
            for e in self._entries.values()
            if e.entity_type is entity_type and (not valid_only or e.source in VALID_SOURCES)
        }
        return sorted(keys)

    def counts_by_type(self) -> dict[EntityType, int]:
        counts = {t: 0 for t in EntityType}
        for e in self._entries.values():
            counts[e.entity_type] += 1
        return counts

    def copy(self) -> "EntityVocabulary":
        return EntityVocabulary(self._entries.values())


def load_vocabulary(path: str | Path) -> EntityVocabulary:
    """Read the TSV vocabulary file: ``surface<TAB>type<TAB>source``.

    Seed counts per entity type are logged on load.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"vocabulary file not found: {path}")
    vocab = EntityVocabulary()
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if [c.strip() for c in header.split("\t")] != ["surface", "type", "source"]:
            raise InputError(f"bad vocabulary header in {path!r}: {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 tab-separated fields")
            surface, type_str, source_str = parts
            try:
                entity_type = EntityType(type_str.strip())
                source = VocabSource(source_str.strip())
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            vocab.add(VocabEntry(surface=surface.strip(), entity_type=entity_type, source=source))
    counts = vocab.counts_by_type()
    logger.info(
        "loaded vocabulary %s: %d drugs, %d cell lines",
        path,
        counts[EntityType.DRUG],
        counts[EntityType.CELL_LINE],
    )
    return vocab


def save_vocabulary(vocab: EntityVocabulary, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("surface\ttype\tsource\n")
        for entry in vocab:
            fh.write(f"{entry.surface}\t{entry.entity_type.value}\t{entry.source.value}\n")
