"""Prompt templates: masking mined sentences, embedding, medoid extraction.

A template's text carries one typed marker per slot ([DRUG_MASK] or
[CELL_MASK]); gateways receive the untyped serialized form (every marker
becomes the gateway mask token) plus the slot types as a side channel.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import MinedSentence
from .errors import InputError, ValidationError
from .gateway import MASK_TOKEN, Gateway
from .kmedoids import Clustering
from .vocab import EntityType

DRUG_MASK = "[DRUG_MASK]"
CELL_MASK = "[CELL_MASK]"

_MARKER_RE = re.compile(r"\[DRUG_MASK\]|\[CELL_MASK\]")
_MARKER_TYPE = {DRUG_MASK: EntityType.DRUG, CELL_MASK: EntityType.CELL_LINE}
_TYPE_MARKER = {v: k for k, v in _MARKER_TYPE.items()}


@dataclass(frozen=True)
class Slot:
    index: int
    slot_type: EntityType


@dataclass(frozen=True)
class TemplateSource:
    kind: str  # "manual" | "sentence" | "medoid"
    doc_id: str | None = None
    sentence_index: int | None = None
    iteration: int | None = None
    cluster_id: int | None = None

    def to_json_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for name in ("doc_id", "sentence_index", "iteration", "cluster_id"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @staticmethod
    def from_json_dict(raw: dict) -> "TemplateSource":
        return TemplateSource(
            kind=raw["kind"],
            doc_id=raw.get("doc_id"),
            sentence_index=raw.get("sentence_index"),
            iteration=raw.get("iteration"),
            cluster_id=raw.get("cluster_id"),
        )


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    source: TemplateSource
    text_with_slots: str
    slots: tuple[Slot, ...]

    def __post_init__(self) -> None:
        markers = [_MARKER_TYPE[m.group()] for m in _MARKER_RE.finditer(self.text_with_slots)]
        if len(markers) != len(self.slots):
            raise ValidationError(
                f"{self.template_id}: {len(markers)} markers vs {len(self.slots)} slots"
            )
        for slot, marker_type in zip(self.slots, markers):
            if slot.slot_type is not marker_type:
                raise ValidationError(f"{self.template_id}: slot {slot.index} type mismatch")
        if [s.index for s in self.slots] != list(range(len(self.slots))):
            raise ValidationError(f"{self.template_id}: slot indices must be 0..n-1 in order")

    def slot_types(self) -> tuple[EntityType, ...]:
        return tuple(s.slot_type for s in self.slots)

    def num_slots_of(self, entity_type: EntityType) -> int:
        return sum(1 for s in self.slots if s.slot_type is entity_type)

    def gateway_text(self) -> str:
        """Serialized form sent to gateways: every typed marker -> [MASK]."""
        return _MARKER_RE.sub(MASK_TOKEN, self.text_with_slots)

    def to_json_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "source": self.source.to_json_dict(),
            "text": self.text_with_slots,
            "slots": [{"index": s.index, "type": s.slot_type.value} for s in self.slots],
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "PromptTemplate":
        return PromptTemplate(
            template_id=raw["template_id"],
            source=TemplateSource.from_json_dict(raw["source"]),
            text_with_slots=raw["text"],
            slots=tuple(
                Slot(index=s["index"], slot_type=EntityType(s["type"])) for s in raw["slots"]
            ),
        )


def mask_sentence(mined: MinedSentence) -> PromptTemplate:
    """Replace every entity mention with its typed slot marker.

    Slots follow text order; substituting the original surfaces back in
    reproduces the sentence exactly.
    """
    mined.validate()
    mentions = sorted(mined.mentions, key=lambda m: m.start)
    pieces: list[str] = []
    slots: list[Slot] = []
    pos = 0
    for slot_index, mention in enumerate(mentions):
        pieces.append(mined.text[pos : mention.start])
        pieces.append(_TYPE_MARKER[mention.entity_type])
        slots.append(Slot(index=slot_index, slot_type=mention.entity_type))
        pos = mention.end
    pieces.append(mined.text[pos:])
    return PromptTemplate(
        template_id=f"{mined.doc_id}:s{mined.sentence_index}",
        source=TemplateSource(
            kind="sentence", doc_id=mined.doc_id, sentence_index=mined.sentence_index
        ),
        text_with_slots="".join(pieces),
        slots=tuple(slots),
    )


def unmask(template: PromptTemplate, surfaces: Sequence[str]) -> str:
    """Inverse of masking: substitute one surface per slot, in order."""
    if len(surfaces) != len(template.slots):
        raise ValidationError(
            f"{template.template_id}: {len(surfaces)} surfaces for {len(template.slots)} slots"
        )
    it = iter(surfaces)
    return _MARKER_RE.sub(lambda _: next(it), template.text_with_slots)


def dedupe_templates(templates: Iterable[PromptTemplate]) -> list[PromptTemplate]:
    """Drop templates with identical masked text, keeping the first.

    Duplicate masked sentences would otherwise bias medoid selection.
    """
    seen: set[str] = set()
    out = []
    for t in templates:
        if t.text_with_slots in seen:
            continue
        seen.add(t.text_with_slots)
        out.append(t)
    return out


def embed_batch(gateway: Gateway, templates: Sequence[PromptTemplate]) -> np.ndarray:
    """One embedding vector per template, in order, constant dimension."""
    if not templates:
        dim = gateway.capabilities().dim
        return np.zeros((0, dim))
    return gateway.embed([t.gateway_text() for t in templates])


def extract_templates(
    clustering: Clustering,
    templates: Sequence[PromptTemplate],
    iteration: int,
) -> list[PromptTemplate]:
    """The k medoid templates, re-tagged with (iteration, cluster_id)."""
    if clustering.n_points != len(templates):
        raise ValidationError(
            f"clustering over {clustering.n_points} points but {len(templates)} templates"
        )
    out = []
    for cluster_id, medoid_idx in enumerate(clustering.medoid_indices):
        base = templates[medoid_idx]
        out.append(
            PromptTemplate(
                template_id=f"iter{iteration}-cluster{cluster_id}-{base.template_id}",
                source=TemplateSource(
                    kind="medoid",
                    doc_id=base.source.doc_id,
                    sentence_index=base.source.sentence_index,
                    iteration=iteration,
                    cluster_id=cluster_id,
                ),
                text_with_slots=base.text_with_slots,
                slots=base.slots,
            )
        )
    return out


def save_templates(templates: Sequence[PromptTemplate], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in templates:
            fh.write(json.dumps(t.to_json_dict(), sort_keys=True) + "\n")


def load_templates(path: str | Path) -> list[PromptTemplate]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"template file not found: {path}")
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(PromptTemplate.from_json_dict(json.loads(line)))
    return out
