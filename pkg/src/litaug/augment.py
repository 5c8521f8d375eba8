"""The iterative augmentation loop: mine, cluster, synthesize, expand.

Each iteration mines candidate sentences with the current (possibly
expanded) vocabulary, turns medoid sentences into new templates, fills every
pooled template from warm-start prompts sampled out of the current dataset,
and folds the surviving triplets back in. All randomness is derived from
(rng_seed, iteration, template position), so a run is reproducible from any
checkpoint and independent of worker count.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import DEFAULT_KEYWORDS, Corpus, mine_candidates
from .datasets import LabeledTriplet, TrainingSet, TripletKey, merge_datasets
from .errors import InputError, ValidationError
from .gateway import Gateway
from .kmedoids import k_medoids
from .matching import Matcher
from .synthesize import (
    MaskFill,
    RestrictionMode,
    SynthesisStats,
    UNRESTRICTED,
    WarmStartPrompt,
    WeightedTriplet,
    assemble_triplets,
    fill_prompt,
    manual_templates,
    restricted_mode,
    save_triplets,
    warm_start_variants,
)
from .templates import PromptTemplate, dedupe_templates, embed_batch, extract_templates, mask_sentence
from .vocab import EntityVocabulary, VocabEntry, EntityType, VocabSource

logger = logging.getLogger(__name__)

MODES = ("manual", "iterative", "restricted")


@dataclass(frozen=True)
class AugmentConfig:
    iterations: int = 3
    cluster_k: int = 10
    cluster_max_swaps: int = 200
    cluster_metric: str = "euclidean"
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    samples_per_template: int = 64
    warm_start: bool = True
    sample_one_variant: bool = False
    manual_warm_start: bool = False
    require_full_slots: bool = False
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.cluster_k < 1 or self.samples_per_template < 1:
            raise ValidationError("cluster_k and samples_per_template must be >= 1")


@dataclass(frozen=True)
class PipelineState:
    """Everything the loop carries between iterations."""

    iteration: int
    vocab: EntityVocabulary
    dataset: tuple[LabeledTriplet, ...]
    synthetic: tuple[WeightedTriplet, ...]  # kept sorted by triplet key
    template_pool: tuple[PromptTemplate, ...]
    rng_seed: int
    mode: str

    def known_keys(self) -> set[TripletKey]:
        return {t.key for t in self.dataset} | {t.key for t in self.synthetic}


def initial_state(
    vocab: EntityVocabulary,
    dataset: Sequence[LabeledTriplet],
    rng_seed: int,
    mode: str,
) -> PipelineState:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    return PipelineState(
        iteration=0,
        vocab=vocab.copy(),
        dataset=tuple(dataset),
        synthetic=(),
        template_pool=(),
        rng_seed=rng_seed,
        mode=mode,
    )


def _template_rng(rng_seed: int, iteration: int, template_pos: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=rng_seed, spawn_key=(iteration, template_pos))
    return np.random.Generator(np.random.PCG64(seq))


def _restriction(state: PipelineState, gateway: Gateway, stats: SynthesisStats) -> RestrictionMode:
    if state.mode == "restricted":
        return restricted_mode(state.vocab, gateway.vocab(), stats)
    return UNRESTRICTED


def _sampling_universe(state: PipelineState) -> list[TripletKey]:
    return [t.key for t in state.dataset] + [t.key for t in state.synthetic]


def _synthesize_over_pool(
    state: PipelineState,
    gateway: Gateway,
    config: AugmentConfig,
    pool: Sequence[PromptTemplate],
    iteration: int,
    stats: SynthesisStats,
) -> tuple[list[WeightedTriplet], list[MaskFill]]:
    """Fill every pooled template; returns candidate triplets and all fills."""
    mode = _restriction(state, gateway, stats)
    universe = _sampling_universe(state)
    candidates: list[WeightedTriplet] = []
    all_fills: list[MaskFill] = []
    use_warm_start = config.warm_start if state.mode != "manual" else config.manual_warm_start
    gateway_vocab = gateway.vocab() if use_warm_start else frozenset()
    for pos, template in enumerate(sorted(pool, key=lambda t: t.template_id)):
        prompts: list[WarmStartPrompt] = []
        seen_text: set[str] = set()
        if use_warm_start and universe:
            rng = _template_rng(state.rng_seed, iteration, pos)
            draws = rng.integers(len(universe), size=config.samples_per_template)
            for draw in draws:
                for variant in warm_start_variants(
                    template,
                    universe[int(draw)],
                    gateway_vocab,
                    rng=rng,
                    sample_one=config.sample_one_variant,
                ):
                    stats.variants_enumerated += 1
                    if variant.rendered_text not in seen_text:
                        seen_text.add(variant.rendered_text)
                        prompts.append(variant)
        else:
            prompts.append(WarmStartPrompt.bare(template))
        for prompt in prompts:
            fills = fill_prompt(gateway, prompt, mode, stats)
            if fills is None:
                continue
            all_fills.extend(fills)
            candidates.extend(assemble_triplets(template, prompt, fills))
    return candidates, all_fills


def _dedupe_candidates(
    candidates: Iterable[WeightedTriplet], known: set[TripletKey]
) -> list[WeightedTriplet]:
    """Canonical selection: one triplet per key, highest weight wins."""
    ordered = sorted(
        candidates,
        key=lambda t: (t.key, -t.weight, t.provenance.template_id, str(t.provenance.warm_start_source)),
    )
    kept: list[WeightedTriplet] = []
    seen = set(known)
    for cand in ordered:
        if cand.key in seen:
            continue
        seen.add(cand.key)
        kept.append(cand)
    return kept


def _slot_floor_ok(template: PromptTemplate, config: AugmentConfig) -> bool:
    if not config.require_full_slots:
        return len(template.slots) >= 1
    return (
        template.num_slots_of(EntityType.DRUG) >= 2
        and template.num_slots_of(EntityType.CELL_LINE) >= 1
    )


def run_iteration(
    state: PipelineState,
    corpus: Corpus,
    gateway: Gateway,
    config: AugmentConfig,
) -> PipelineState:
    """One mine -> cluster -> synthesize -> expand pass."""
    if state.mode == "manual":
        raise ValidationError("manual mode has no mining iterations; use run_manual")
    iteration = state.iteration + 1
    matcher = Matcher(state.vocab)
    mined = mine_candidates(corpus, matcher, keywords=config.keywords, jobs=config.jobs)
    masked = dedupe_templates(mask_sentence(m) for m in mined)
    masked = [t for t in masked if _slot_floor_ok(t, config)]
    slot_counts = sorted(len(t.slots) for t in masked)
    logger.info(
        "iteration %d: %d mined sentence(s), %d unique masked template(s), slot counts %s",
        iteration, len(mined), len(masked), slot_counts,
    )

    new_templates: list[PromptTemplate] = []
    if masked:
        k = min(config.cluster_k, len(masked))
        embeddings = embed_batch(gateway, masked)
        clustering = k_medoids(
            embeddings, k=k, seed=state.rng_seed, max_swaps=config.cluster_max_swaps,
            metric=config.cluster_metric,
        )
        new_templates = extract_templates(clustering, masked, iteration=iteration)
    else:
        logger.warning("iteration %d: no sentences mined; no new templates", iteration)

    pool = list(state.template_pool)
    pool_texts = {t.text_with_slots for t in pool}
    for t in new_templates:
        if t.text_with_slots not in pool_texts:
            pool_texts.add(t.text_with_slots)
            pool.append(t)

    stats = SynthesisStats()
    candidates, fills = _synthesize_over_pool(state, gateway, config, pool, iteration, stats)
    fresh = _dedupe_candidates(candidates, state.known_keys())
    synthetic = tuple(sorted(state.synthetic + tuple(fresh), key=lambda t: t.key))

    vocab = state.vocab
    if state.mode == "iterative":  # unrestricted: admit new names, valid or not
        vocab = vocab.copy()
        for f in fills:
            vocab.add(VocabEntry(surface=f.token, entity_type=f.slot_type, source=VocabSource.SYNTHESIZED))
    logger.info(
        "iteration %d: +%d synthetic triplet(s) (total %d), pool %d, prompts filled %d, discarded %d",
        iteration, len(fresh), len(synthetic), len(pool), stats.prompts_filled, stats.prompts_discarded,
    )
    return replace(
        state,
        iteration=iteration,
        vocab=vocab,
        synthetic=synthetic,
        template_pool=tuple(pool),
    )


def synthesize_once(
    state: PipelineState,
    gateway: Gateway,
    config: AugmentConfig,
    templates: Sequence[PromptTemplate],
    iteration: int = 1,
) -> list[WeightedTriplet]:
    """Single synthesis pass over explicit templates (CLI stage command)."""
    stats = SynthesisStats()
    candidates, _ = _synthesize_over_pool(state, gateway, config, templates, iteration, stats)
    return _dedupe_candidates(candidates, state.known_keys())


def run_manual(
    state: PipelineState,
    gateway: Gateway,
    config: AugmentConfig,
) -> PipelineState:
    """Fill the fixed manual prompt set once (no mining, no iteration)."""
    if state.mode != "manual":
        raise ValidationError("run_manual requires mode='manual'")
    pool = manual_templates()
    stats = SynthesisStats()
    candidates, _ = _synthesize_over_pool(state, gateway, config, pool, iteration=0, stats=stats)
    fresh = _dedupe_candidates(candidates, state.known_keys())
    synthetic = tuple(sorted(fresh, key=lambda t: t.key))
    logger.info("manual prompting: %d synthetic triplet(s)", len(synthetic))
    return replace(state, iteration=1, synthetic=synthetic, template_pool=tuple(pool))


# -- checkpointing ----------------------------------------------------------

def save_state(state: PipelineState, path: str | Path) -> None:
    payload = {
        "header": {
            "iteration": state.iteration,
            "rng_seed": state.rng_seed,
            "mode": state.mode,
        },
        "vocab": [
            {"surface": e.surface, "type": e.entity_type.value, "source": e.source.value}
            for e in state.vocab
        ],
        "dataset": [[t.drug_a, t.drug_b, t.cell, t.label] for t in state.dataset],
        "synthetic": [t.to_json_dict() for t in state.synthetic],
        "template_pool": [t.to_json_dict() for t in state.template_pool],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_state(path: str | Path) -> PipelineState:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"checkpoint not found: {path}")
    raw = json.loads(path.read_text(encoding="utf-8"))
    vocab = EntityVocabulary(
        VocabEntry(surface=e["surface"], entity_type=EntityType(e["type"]), source=VocabSource(e["source"]))
        for e in raw["vocab"]
    )
    return PipelineState(
        iteration=raw["header"]["iteration"],
        vocab=vocab,
        dataset=tuple(LabeledTriplet(a, b, c, y) for a, b, c, y in raw["dataset"]),
        synthetic=tuple(WeightedTriplet.from_json_dict(t) for t in raw["synthetic"]),
        template_pool=tuple(PromptTemplate.from_json_dict(t) for t in raw["template_pool"]),
        rng_seed=raw["header"]["rng_seed"],
        mode=raw["header"]["mode"],
    )


# -- full runs ----------------------------------------------------------------

def run_mode(
    mode: str,
    vocab: EntityVocabulary,
    dataset: Sequence[LabeledTriplet],
    corpus: Corpus | None,
    gateway: Gateway,
    config: AugmentConfig,
    seed: int,
    out_dir: str | Path | None = None,
    resume: bool = True,
    file_tag: str | None = None,
) -> PipelineState:
    """Run one augmentation mode end to end, checkpointing per iteration."""
    tag = file_tag or mode
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    state = initial_state(vocab, dataset, rng_seed=seed, mode=mode)
    start_iteration = 0
    if out is not None and resume:
        done = sorted(
            out.glob(f"state_{tag}_iter*.json"),
            key=lambda p: int(p.stem.rsplit("iter", 1)[1]),
        )
        if done:
            state = load_state(done[-1])
            start_iteration = state.iteration
            logger.info("resuming %s from iteration %d", mode, start_iteration)

    if mode == "manual":
        if start_iteration == 0:
            state = run_manual(state, gateway, config)
            _checkpoint(state, out, tag)
    else:
        if corpus is None:
            raise ValidationError(f"mode {mode!r} needs a corpus")
        while state.iteration < config.iterations:
            state = run_iteration(state, corpus, gateway, config)
            _checkpoint(state, out, tag)
    if out is not None:
        save_triplets(state.synthetic, out / f"synthetic_{tag}.jsonl")
        save_augmented(state, out / f"augmented_{tag}.jsonl")
    return state


def run_pipeline(
    vocab: EntityVocabulary,
    dataset: Sequence[LabeledTriplet],
    corpus: Corpus,
    gateway: Gateway,
    config: AugmentConfig,
    seed: int,
    out_dir: str | Path | None = None,
    resume: bool = True,
) -> dict[str, PipelineState]:
    """All three augmented datasets: manual, iterative, restricted."""
    return {
        mode: run_mode(
            mode=mode,
            vocab=vocab,
            dataset=dataset,
            corpus=corpus,
            gateway=gateway,
            config=config,
            seed=seed,
            out_dir=out_dir,
            resume=resume,
        )
        for mode in MODES
    }


def _checkpoint(state: PipelineState, out: Path | None, tag: str) -> None:
    if out is not None:
        save_state(state, out / f"state_{tag}_iter{state.iteration}.json")


def save_augmented(state: PipelineState, path: str | Path) -> None:
    """Persist the union D plus synthetic, originals first."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for t in state.dataset:
            fh.write(
                json.dumps(
                    {
                        "drug_a": t.drug_a, "drug_b": t.drug_b, "cell": t.cell,
                        "label": t.label, "weight": 1.0, "synthetic": False,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        for t in state.synthetic:
            row = t.to_json_dict()
            row["synthetic"] = True
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def training_set_from_state(state: PipelineState) -> TrainingSet:
    return merge_datasets(list(state.dataset), list(state.synthetic))
