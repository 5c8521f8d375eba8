"""Filling prompt templates into weighted synthetic triplets.

The flow per template: enumerate warm-start pre-fillings from a sampled
dataset triplet, query the gateway for the remaining slots (argmax token per
slot, optionally restricted to valid entity names), then combine the pooled
drug/cell surfaces into (drug, drug, cell) triplets weighted by the
geometric mean of the model's fill probabilities.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .datasets import TripletKey
from .errors import InputError, ValidationError
from .gateway import MASK_TOKEN, FillRequest, Gateway
from .templates import PromptTemplate, Slot, TemplateSource, _MARKER_RE, _TYPE_MARKER
from .vocab import EntityType, EntityVocabulary, VocabEntry, VocabSource, canonical_key

logger = logging.getLogger(__name__)

MANUAL_PROMPT_TEXTS = (
    "On cell line [CELL_MASK], [DRUG_MASK] has synergy with [DRUG_MASK].",
    "On cell line [CELL_MASK], [DRUG_MASK] are synergistic with [DRUG_MASK].",
    "[DRUG_MASK] has synergy with [DRUG_MASK] on cell line [CELL_MASK].",
    "[DRUG_MASK] and [DRUG_MASK] are synergistic on cell line [CELL_MASK].",
    "On cell line [CELL_MASK], there is a synergy between [DRUG_MASK] and [DRUG_MASK].",
    "There is a synergy between [DRUG_MASK] and [DRUG_MASK] on cell line [CELL_MASK].",
    "[DRUG_MASK] and [DRUG_MASK] are effective to treat to cell line [CELL_MASK].",
    "[DRUG_MASK] and [DRUG_MASK] are effective on cell line [CELL_MASK].",
    "On cell line [CELL_MASK], [DRUG_MASK] and [DRUG_MASK] are effective.",
    "On cell line [CELL_MASK], [DRUG_MASK] and [DRUG_MASK] are synergistic.",
    "On cell line [CELL_MASK], [DRUG_MASK] and [DRUG_MASK] have an synergy.",
)


def manual_templates() -> list[PromptTemplate]:
    """The fixed hand-written prompt set: 2 drug slots + 1 cell slot each."""
    out = []
    for i, text in enumerate(MANUAL_PROMPT_TEXTS, start=1):
        slots = tuple(
            Slot(index=j, slot_type=EntityType.DRUG if m.group() == "[DRUG_MASK]" else EntityType.CELL_LINE)
            for j, m in enumerate(_MARKER_RE.finditer(text))
        )
        out.append(
            PromptTemplate(
                template_id=f"manual-{i:02d}",
                source=TemplateSource(kind="manual"),
                text_with_slots=text,
                slots=slots,
            )
        )
    return out


@dataclass
class SynthesisStats:
    prompts_filled: int = 0
    prompts_discarded: int = 0
    restricted_tokens_dropped: int = 0
    variants_enumerated: int = 0


@dataclass(frozen=True)
class RestrictionMode:
    """Decoding restriction. Unrestricted accepts any gateway token."""

    restricted: bool
    allowed: dict[EntityType, tuple[str, ...]] | None = None

    def allowed_for(self, slot_type: EntityType) -> tuple[str, ...] | None:
        if not self.restricted:
            return None
        assert self.allowed is not None
        return self.allowed.get(slot_type, ())


UNRESTRICTED = RestrictionMode(restricted=False)


def restricted_mode(
    vocab: EntityVocabulary, gateway_vocab: frozenset[str], stats: SynthesisStats | None = None
) -> RestrictionMode:
    """Restrict fills to valid entity names the gateway can emit.

    Valid names are the non-synthesized vocabulary surfaces; multi-token
    names (anything outside the gateway vocabulary) cannot be produced by
    single-slot filling, so they are filtered out and the drop is reported.
    """
    allowed: dict[EntityType, tuple[str, ...]] = {}
    for entity_type in EntityType:
        valid = vocab.surfaces_of_type(entity_type, valid_only=True)
        kept = tuple(s for s in valid if s in gateway_vocab)
        dropped = len(valid) - len(kept)
        if dropped:
            logger.info(
                "restricted mode: %d/%d %s name(s) not single gateway tokens",
                dropped,
                len(valid),
                entity_type.value,
            )
            if stats is not None:
                stats.restricted_tokens_dropped += dropped
        allowed[entity_type] = kept
    return RestrictionMode(restricted=True, allowed=allowed)


@dataclass(frozen=True)
class FilledSlot:
    slot_index: int
    surface: str
    entity_type: EntityType


@dataclass(frozen=True)
class WarmStartPrompt:
    """A template with 0-2 slots pre-filled from an existing triplet.

    Warm-start enumeration always fills 1 or 2 slots; the 0-filled form
    exists only for the no-warm-start ablation (``WarmStartPrompt.bare``).
    """

    template_id: str
    filled_slots: tuple[FilledSlot, ...]
    remaining_slots: tuple[Slot, ...]
    rendered_text: str
    warm_start_source: TripletKey | None = None

    def __post_init__(self) -> None:
        if len(self.filled_slots) > 2:
            raise ValidationError("warm start fills at most 2 slots")
        if not self.remaining_slots:
            raise ValidationError("warm-start prompt must keep at least one open slot")

    @staticmethod
    def bare(template: PromptTemplate) -> "WarmStartPrompt":
        if not template.slots:
            raise ValidationError(f"{template.template_id}: template has no slots")
        return WarmStartPrompt(
            template_id=template.template_id,
            filled_slots=(),
            remaining_slots=template.slots,
            rendered_text=template.text_with_slots,
            warm_start_source=None,
        )


def _render(template: PromptTemplate, filled: dict[int, str]) -> str:
    counter = itertools.count()
    return _MARKER_RE.sub(
        lambda m: filled.get(next(counter), m.group()), template.text_with_slots
    )


def warm_start_variants(
    template: PromptTemplate,
    triplet: TripletKey,
    gateway_vocab: frozenset[str],
    rng: np.random.Generator | None = None,
    sample_one: bool = False,
) -> list[WarmStartPrompt]:
    """Every 1- or 2-element type-matching pre-filling of ``template``.

    Only triplet elements that are single gateway tokens are eligible.
    Variants are deduplicated by rendered text; with ``sample_one`` a single
    variant is drawn uniformly instead of returning all of them.
    """
    drug_a, drug_b, cell = triplet
    elements: list[tuple[str, EntityType]] = []
    for surface, entity_type in (
        (drug_a, EntityType.DRUG),
        (drug_b, EntityType.DRUG),
        (cell, EntityType.CELL_LINE),
    ):
        if surface in gateway_vocab and (surface, entity_type) not in elements:
            elements.append((surface, entity_type))
    if not elements:
        return []

    variants: list[WarmStartPrompt] = []
    seen_text: set[str] = set()
    for size in (1, 2):
        if len(template.slots) - size < 1:
            break
        for combo in itertools.combinations(elements, size):
            slot_choices = [
                [s.index for s in template.slots if s.slot_type is etype] for _, etype in combo
            ]
            for assignment in itertools.product(*slot_choices):
                if len(set(assignment)) != size:
                    continue
                filled = {
                    idx: surface for idx, (surface, _) in zip(assignment, combo)
                }
                rendered = _render(template, filled)
                if rendered in seen_text:
                    continue
                seen_text.add(rendered)
                filled_slots = tuple(
                    FilledSlot(slot_index=idx, surface=surface, entity_type=etype)
                    for idx, (surface, etype) in sorted(
                        zip(assignment, combo), key=lambda p: p[0]
                    )
                )
                remaining = tuple(s for s in template.slots if s.index not in set(assignment))
                variants.append(
                    WarmStartPrompt(
                        template_id=template.template_id,
                        filled_slots=filled_slots,
                        remaining_slots=remaining,
                        rendered_text=rendered,
                        warm_start_source=triplet,
                    )
                )
    if sample_one and variants:
        if rng is None:
            raise ValidationError("sample_one requires an rng")
        return [variants[int(rng.integers(len(variants)))]]
    return variants


@dataclass(frozen=True)
class MaskFill:
    slot_index: int
    token: str
    probability: float
    slot_type: EntityType

    def __post_init__(self) -> None:
        if not (0.0 < self.probability <= 1.0) or not math.isfinite(self.probability):
            raise ValidationError(f"fill probability {self.probability} outside (0, 1]")


def fill_prompt(
    gateway: Gateway,
    prompt: WarmStartPrompt,
    mode: RestrictionMode = UNRESTRICTED,
    stats: SynthesisStats | None = None,
) -> list[MaskFill] | None:
    """Argmax-fill every remaining slot in one gateway call.

    Returns None (and counts the discard) when a slot has an empty allowed
    set in restricted mode or the gateway returns no candidate for a slot.
    """
    slots = prompt.remaining_slots
    allowed = tuple(mode.allowed_for(s.slot_type) for s in slots)
    if any(a is not None and len(a) == 0 for a in allowed):
        if stats is not None:
            stats.prompts_discarded += 1
        return None
    request = FillRequest(
        text=_MARKER_RE.sub(MASK_TOKEN, prompt.rendered_text),
        allowed_tokens=allowed if mode.restricted else None,
        top_k=1,
        slot_types=tuple(s.slot_type for s in slots),
    )
    response = gateway.fill(request)
    fills: list[MaskFill] = []
    for slot, ranked in zip(slots, response):
        if not ranked:
            if stats is not None:
                stats.prompts_discarded += 1
            return None
        fills.append(
            MaskFill(
                slot_index=slot.index,
                token=ranked[0].token,
                probability=ranked[0].prob,
                slot_type=slot.slot_type,
            )
        )
    if stats is not None:
        stats.prompts_filled += 1
    return fills


@dataclass(frozen=True)
class Provenance:
    template_id: str
    iteration: int
    warm_start_source: TripletKey | None
    fill_probs: tuple[tuple[int, str, float], ...]  # (slot_index, token, probability)

    def to_json_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "iteration": self.iteration,
            "warm_start_source": list(self.warm_start_source) if self.warm_start_source else None,
            "fill_probs": [
                {"slot_index": i, "token": t, "probability": p} for i, t, p in self.fill_probs
            ],
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "Provenance":
        source = raw.get("warm_start_source")
        return Provenance(
            template_id=raw["template_id"],
            iteration=raw["iteration"],
            warm_start_source=tuple(source) if source else None,
            fill_probs=tuple(
                (f["slot_index"], f["token"], f["probability"]) for f in raw["fill_probs"]
            ),
        )


@dataclass(frozen=True)
class WeightedTriplet:
    drug_a: str
    drug_b: str
    cell: str
    weight: float
    provenance: Provenance
    label: int = 1

    def __post_init__(self) -> None:
        if self.drug_a >= self.drug_b:
            raise ValidationError(f"drugs must be distinct and sorted: {self.drug_a!r}, {self.drug_b!r}")
        if not (0.0 < self.weight <= 1.0):
            raise ValidationError(f"weight {self.weight} outside (0, 1]")
        if self.label != 1:
            raise ValidationError("synthetic triplets are always positive")

    @property
    def key(self) -> TripletKey:
        return (self.drug_a, self.drug_b, self.cell)

    def to_json_dict(self) -> dict:
        return {
            "drug_a": self.drug_a,
            "drug_b": self.drug_b,
            "cell": self.cell,
            "label": self.label,
            "weight": self.weight,
            "provenance": self.provenance.to_json_dict(),
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "WeightedTriplet":
        return WeightedTriplet(
            drug_a=raw["drug_a"],
            drug_b=raw["drug_b"],
            cell=raw["cell"],
            weight=raw["weight"],
            provenance=Provenance.from_json_dict(raw["provenance"]),
        )


def _pool_surfaces(
    warm_start: WarmStartPrompt, fills: Sequence[MaskFill], entity_type: EntityType
) -> dict[str, tuple[int, str, float] | None]:
    """Distinct canonical surfaces of one type with their fill term, if any.

    Warm-started surfaces carry no probability term (None). When the same
    canonical name arrives through several routes, the warm-start entry wins,
    then the highest-probability fill, then the lowest slot index.
    """
    pool: dict[str, tuple[int, str, float] | None] = {}
    ranked_fills = sorted(
        (f for f in fills if f.slot_type is entity_type),
        key=lambda f: (-f.probability, f.slot_index),
    )
    for f in ranked_fills:
        pool.setdefault(canonical_key(f.token), (f.slot_index, f.token, f.probability))
    for filled in warm_start.filled_slots:
        if filled.entity_type is entity_type:
            pool[canonical_key(filled.surface)] = None
    return pool


def assemble_triplets(
    template: PromptTemplate,
    warm_start: WarmStartPrompt,
    fills: Sequence[MaskFill],
) -> list[WeightedTriplet]:
    """All (drug pair, cell) combinations from the pooled slot surfaces.

    Weight is the geometric mean of the gateway probabilities of the fills
    participating in the triplet; warm-started elements contribute no term.
    """
    if {f.slot_index for f in fills} != {s.index for s in warm_start.remaining_slots}:
        raise ValidationError("fills must cover exactly the remaining slots")
    drugs = _pool_surfaces(warm_start, fills, EntityType.DRUG)
    cells = _pool_surfaces(warm_start, fills, EntityType.CELL_LINE)
    if len(drugs) < 2 or not cells:
        return []
    iteration = template.source.iteration if template.source.iteration is not None else 0
    out: list[WeightedTriplet] = []
    for (d1, d2), cell in itertools.product(
        itertools.combinations(sorted(drugs), 2), sorted(cells)
    ):
        terms = [t for t in (drugs[d1], drugs[d2], cells[cell]) if t is not None]
        # Warm-start invariants guarantee at least one gateway-filled member.
        weight = float(np.exp(np.mean([np.log(p) for _, _, p in terms])))
        out.append(
            WeightedTriplet(
                drug_a=d1,
                drug_b=d2,
                cell=cell,
                weight=min(weight, 1.0),
                provenance=Provenance(
                    template_id=template.template_id,
                    iteration=iteration,
                    warm_start_source=warm_start.warm_start_source,
                    fill_probs=tuple(sorted(terms)),
                ),
            )
        )
    return out


def expand_vocabulary(vocab: EntityVocabulary, fills: Iterable[MaskFill]) -> EntityVocabulary:
    """Admit model-filled tokens as new (possibly invalid) entity names.

    Unrestricted mode only; each token joins with its slot's entity type and
    source ``synthesized``. Idempotent: existing entries are untouched.
    """
    added = 0
    for f in fills:
        if vocab.add(VocabEntry(surface=f.token, entity_type=f.slot_type, source=VocabSource.SYNTHESIZED)):
            added += 1
    if added:
        logger.info("vocabulary expanded with %d synthesized name(s)", added)
    return vocab


def save_triplets(triplets: Sequence[WeightedTriplet], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(json.dumps(t.to_json_dict(), sort_keys=True) + "\n")


def load_triplets(path: str | Path) -> list[WeightedTriplet]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"synthetic dataset file not found: {path}")
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(WeightedTriplet.from_json_dict(json.loads(line)))
    return out
