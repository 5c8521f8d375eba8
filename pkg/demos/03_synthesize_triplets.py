"""Warm-start filling and triplet assembly, following the worked example.

Given the triplet (cisplatin, camptothecin, bt-483) and a drug-drug-cell
template, only in-gateway-vocabulary elements may pre-fill slots. Each
warm-start variant keeps at least one open slot for the model; the filled
slots' probabilities combine into the triplet weight by geometric mean.
"""

from litaug import MockGateway
from litaug.synthesize import (
    UNRESTRICTED,
    WarmStartPrompt,
    assemble_triplets,
    fill_prompt,
    manual_templates,
    restricted_mode,
    warm_start_variants,
)
from litaug.templates import PromptTemplate, Slot, TemplateSource
from litaug.vocab import EntityType, EntityVocabulary, VocabEntry, VocabSource

gateway = MockGateway(seed=7, embedding_dim=24)

# -- 1. the manual prompt inventory ---------------------------------------------

templates = manual_templates()
print(f"{len(templates)} manual prompts, e.g.:")
for t in templates[:3]:
    print(f"  {t.template_id}: {t.text_with_slots}")

# -- 2. warm-start enumeration ----------------------------------------------------

template = PromptTemplate(
    template_id="worked-example",
    source=TemplateSource(kind="manual"),
    text_with_slots=(
        "[DRUG_MASK] and [DRUG_MASK] combination treatments had synergistic "
        "growth inhibitory effects on [CELL_MASK] cells."
    ),
    slots=(Slot(0, EntityType.DRUG), Slot(1, EntityType.DRUG), Slot(2, EntityType.CELL_LINE)),
)
triplet = ("cisplatin", "camptothecin", "bt-483")

# Suppose only "cisplatin" is a single token in the model vocabulary:
variants = warm_start_variants(template, triplet, gateway_vocab=frozenset({"cisplatin"}))
print(f"\nonly cisplatin in-vocabulary -> {len(variants)} variants:")
for v in variants:
    print(f"  {v.rendered_text}")

# With all three elements in vocabulary the enumeration covers every 1- and
# 2-element type-matching placement (11 before text dedup on this template).
variants = warm_start_variants(template, triplet, gateway_vocab=frozenset(triplet))
print(f"\nall elements in-vocabulary -> {len(variants)} variants")

# -- 3. fill and assemble -----------------------------------------------------------

prompt = variants[0]
fills = fill_prompt(gateway, prompt, UNRESTRICTED)
print(f"\nprompt: {prompt.rendered_text}")
for f in fills:
    print(f"  slot {f.slot_index} ({f.slot_type.value}): {f.token!r} p={f.probability:.3f}")

triplets = assemble_triplets(template, prompt, fills)
print("assembled triplets (weight = geometric mean of participating fill probabilities):")
for t in triplets:
    print(f"  ({t.drug_a}, {t.drug_b}, {t.cell}) w={t.weight:.4f}")

# -- 4. restricted decoding ----------------------------------------------------------

vocab = EntityVocabulary(
    [VocabEntry(n, EntityType.DRUG, VocabSource.SEED_DATASET) for n in ("cisplatin", "gefitinib", "paclitaxel")]
    + [VocabEntry(n, EntityType.CELL_LINE, VocabSource.GDSC) for n in ("mcf-7", "hela")]
)
mode = restricted_mode(vocab, gateway.vocab())
fills = fill_prompt(gateway, WarmStartPrompt.bare(template), mode)
print("\nrestricted fills stay inside the valid entity lists:")
for f in fills:
    print(f"  slot {f.slot_index} ({f.slot_type.value}): {f.token!r} p={f.probability:.3f}")
