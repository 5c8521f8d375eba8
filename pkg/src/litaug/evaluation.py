"""Metrics for imbalanced binary classification plus split generators.

AUPRC and max-F1 work on the ranked examples directly (ties grouped into a
single threshold step, so any strictly monotone rescaling of the scores
leaves them unchanged); balanced accuracy and Cohen's kappa use the fixed
strict ``score > threshold`` rule shared with the classifier.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from itertools import groupby
from pathlib import Path
from typing import Sequence, TypeVar

import numpy as np
from scipy import stats as scipy_stats

from .errors import ValidationError

T = TypeVar("T")


@dataclass(frozen=True)
class ScoredExample:
    triplet: tuple
    true_label: int
    score: float

    def __post_init__(self) -> None:
        if self.true_label not in (0, 1):
            raise ValidationError(f"label must be 0/1, got {self.true_label}")
        if not math.isfinite(self.score):
            raise ValidationError(f"score must be finite, got {self.score}")


def _ranked_groups(examples: Sequence[ScoredExample]) -> list[tuple[int, int]]:
    """(positives, negatives) per distinct score, descending score order."""
    ordered = sorted(examples, key=lambda e: -e.score)
    groups = []
    for _, members in groupby(ordered, key=lambda e: e.score):
        ms = list(members)
        pos = sum(e.true_label for e in ms)
        groups.append((pos, len(ms) - pos))
    return groups


def auprc(examples: Sequence[ScoredExample]) -> float:
    """Step-wise average precision over descending-score threshold steps."""
    total_pos = sum(e.true_label for e in examples)
    total_neg = len(examples) - total_pos
    if total_pos == 0 or total_neg == 0:
        raise ValidationError("AUPRC is undefined without both classes")
    ap = 0.0
    tp = fp = 0
    prev_recall = 0.0
    for pos, neg in _ranked_groups(examples):
        tp += pos
        fp += neg
        recall = tp / total_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def max_f1(examples: Sequence[ScoredExample]) -> float:
    """Best F1 over every threshold induced by the distinct scores.

    The empty prediction set (threshold above the max score) scores 0, so a
    positive example always yields a positive maximum.
    """
    total_pos = sum(e.true_label for e in examples)
    if total_pos == 0:
        raise ValidationError("max F1 is undefined without a positive example")
    best = 0.0
    tp = fp = 0
    for pos, neg in _ranked_groups(examples):
        tp += pos
        fp += neg
        denom = 2 * tp + fp + (total_pos - tp)
        if denom > 0:
            best = max(best, 2 * tp / denom)
    return best


def _confusion(examples: Sequence[ScoredExample], threshold: float) -> tuple[int, int, int, int]:
    tp = fp = tn = fn = 0
    for e in examples:
        pred = 1 if e.score > threshold else 0
        if e.true_label == 1:
            tp += pred
            fn += 1 - pred
        else:
            fp += pred
            tn += 1 - pred
    return tp, fp, tn, fn


def bacc(examples: Sequence[ScoredExample], threshold: float = 0.5) -> float:
    """Mean of TPR and TNR at the fixed strict-> threshold."""
    tp, fp, tn, fn = _confusion(examples, threshold)
    if tp + fn == 0 or tn + fp == 0:
        raise ValidationError("balanced accuracy is undefined without both classes")
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp))


def cohens_kappa(examples: Sequence[ScoredExample], threshold: float = 0.5) -> float:
    """Chance-corrected agreement between thresholded predictions and labels."""
    tp, fp, tn, fn = _confusion(examples, threshold)
    n = tp + fp + tn + fn
    if tp + fn == 0 or tn + fp == 0:
        raise ValidationError("kappa is undefined without both classes")
    p_o = (tp + tn) / n
    pos_true = (tp + fn) / n
    pos_pred = (tp + fp) / n
    p_e = pos_true * pos_pred + (1 - pos_true) * (1 - pos_pred)
    if p_e >= 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


METRICS = {"auprc": auprc, "max_f1": max_f1, "bacc": bacc, "kappa": cohens_kappa}


# -- splits -----------------------------------------------------------------

def stratified_kfold(
    dataset: Sequence[T],
    labels: Sequence[int] | None = None,
    k: int = 5,
    seed: int = 0,
) -> list[tuple[list[T], list[T]]]:
    """k disjoint folds with per-fold positive counts differing by <= 1."""
    if labels is None:
        labels = [getattr(item, "label") for item in dataset]
    if len(labels) != len(dataset):
        raise ValidationError("labels must parallel the dataset")
    if k < 2:
        raise ValidationError("k must be >= 2")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    fold_of = np.empty(len(dataset), dtype=int)
    for cls in (0, 1):
        members = np.flatnonzero(np.asarray(labels) == cls)
        if 0 < len(members) < k:
            raise ValidationError(f"class {cls} has {len(members)} members, fewer than k={k}")
        members = members[rng.permutation(len(members))]
        fold_of[members] = np.arange(len(members)) % k
    pairs = []
    for fold in range(k):
        test = [dataset[i] for i in range(len(dataset)) if fold_of[i] == fold]
        train = [dataset[i] for i in range(len(dataset)) if fold_of[i] != fold]
        pairs.append((train, test))
    return pairs


class SplitMode(str, Enum):
    STANDARD = "standard"
    DRUG = "drug"
    CELL = "cell"
    DRUG_AND_CELL = "drug_and_cell"


@dataclass(frozen=True)
class UnseenSplit:
    train: tuple
    test: tuple
    held_drugs: frozenset[str]
    held_cells: frozenset[str]


def unseen_splits(
    dataset: Sequence,
    mode: SplitMode,
    holdout_fraction: float = 0.2,
    seed: int = 0,
) -> UnseenSplit:
    """Hold out entities so test triplets contain only never-trained names.

    Test triplets are fully confined to the held-out entity set for the
    mode's entity types; train drops every triplet touching a held-out
    entity of those types. Triplets mixing held and kept drugs match
    neither side and are discarded (drug modes only).
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValidationError("holdout_fraction must be in (0, 1)")
    if mode is SplitMode.STANDARD:
        raise ValidationError("standard splitting is stratified_kfold, not unseen_splits")
    drugs = sorted({d for t in dataset for d in (t.drug_a, t.drug_b)})
    cells = sorted({t.cell for t in dataset})
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    held_drugs: frozenset[str] = frozenset()
    held_cells: frozenset[str] = frozenset()
    if mode in (SplitMode.DRUG, SplitMode.DRUG_AND_CELL):
        n_held = max(1, round(holdout_fraction * len(drugs)))
        if n_held >= len(drugs):
            raise ValidationError(f"cannot hold out {n_held} of {len(drugs)} drugs")
        held_drugs = frozenset(rng.choice(drugs, size=n_held, replace=False).tolist())
    if mode in (SplitMode.CELL, SplitMode.DRUG_AND_CELL):
        n_held = max(1, round(holdout_fraction * len(cells)))
        if n_held >= len(cells):
            raise ValidationError(
                f"cannot hold out {n_held} of {len(cells)} cell lines; dataset needs more cell lines"
            )
        held_cells = frozenset(rng.choice(cells, size=n_held, replace=False).tolist())

    def drug_side(t) -> str:
        held = (t.drug_a in held_drugs) + (t.drug_b in held_drugs)
        return "test" if held == 2 else ("train" if held == 0 else "drop")

    train, test = [], []
    for t in dataset:
        if mode is SplitMode.DRUG:
            side = drug_side(t)
        elif mode is SplitMode.CELL:
            side = "test" if t.cell in held_cells else "train"
        else:
            d_side = drug_side(t)
            c_side = "test" if t.cell in held_cells else "train"
            side = d_side if d_side == c_side else "drop"
        if side == "train":
            train.append(t)
        elif side == "test":
            test.append(t)
    if not train or not test:
        raise ValidationError(
            f"{mode.value} split produced train={len(train)}, test={len(test)}; "
            "use a larger dataset or a different holdout_fraction/seed"
        )
    return UnseenSplit(
        train=tuple(train), test=tuple(test), held_drugs=held_drugs, held_cells=held_cells
    )


# -- settings table -----------------------------------------------------------

SETTING_ORDER = ("no-aug", "manual", "iterative", "restricted", "no-warm-start")


@dataclass
class MetricTable:
    """Per-setting metric values over (seed, fold) runs, plus summaries.

    ``values[setting][metric]`` is ordered by (seed, fold), so paired
    comparisons against the baseline line up run for run.
    """

    values: dict[str, dict[str, list[float]]]
    seeds: tuple[int, ...]
    folds: int
    baseline: str = "no-aug"

    def summary_rows(self) -> list[dict]:
        rows = []
        base = self.values.get(self.baseline, {})
        for setting in sorted(self.values, key=lambda s: (SETTING_ORDER.index(s) if s in SETTING_ORDER else 99, s)):
            row: dict = {"setting": setting}
            for metric, vals in self.values[setting].items():
                arr = np.asarray(vals)
                row[f"{metric}_mean"] = float(arr.mean())
                row[f"{metric}_stderr_runs"] = (
                    float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else float("nan")
                )
                per_seed = arr.reshape(len(self.seeds), self.folds).mean(axis=1)
                row[f"{metric}_stderr_seeds"] = (
                    float(per_seed.std(ddof=1) / np.sqrt(len(per_seed)))
                    if len(per_seed) > 1
                    else float("nan")
                )
                if setting != self.baseline and metric in base:
                    row[f"{metric}_p_vs_{self.baseline}"] = paired_one_sided_t(
                        vals, base[metric]
                    )
            rows.append(row)
        return rows

    def to_json(self, path: str | Path) -> None:
        payload = {
            "seeds": list(self.seeds),
            "folds": self.folds,
            "baseline": self.baseline,
            "values": self.values,
            "summary": self.summary_rows(),
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

    def to_csv(self, path: str | Path) -> None:
        rows = self.summary_rows()
        fieldnames = sorted({k for r in rows for k in r}, key=lambda k: (k != "setting", k))
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            writer.writerows(rows)


def paired_one_sided_t(treatment: Sequence[float], baseline: Sequence[float]) -> float:
    """p-value that the treatment mean exceeds the paired baseline mean."""
    if len(treatment) != len(baseline):
        raise ValidationError("paired t-test needs equal-length samples")
    diffs = np.asarray(treatment, dtype=float) - np.asarray(baseline, dtype=float)
    if np.allclose(diffs.std(ddof=1) if len(diffs) > 1 else 0.0, 0.0):
        return 1.0 if diffs.mean() <= 0 else 0.0
    result = scipy_stats.ttest_rel(treatment, baseline, alternative="greater")
    return float(result.pvalue)


def score_triplets(model, drug_index: dict[str, int], cell_index: dict[str, int], triplets) -> list[ScoredExample]:
    """Score labeled triplets with a trained model."""
    examples = []
    for t in triplets:
        try:
            a, b, c = drug_index[t.drug_a], drug_index[t.drug_b], cell_index[t.cell]
        except KeyError as exc:
            raise ValidationError(
                f"triplet {t.key} references an entity the model was not built with: {exc}"
            ) from exc
        examples.append(
            ScoredExample(triplet=t.key, true_label=t.label, score=model.predict_proba(a, b, c))
        )
    return examples


def compute_metrics(examples: Sequence[ScoredExample]) -> dict[str, float]:
    return {name: fn(examples) for name, fn in METRICS.items()}


def evaluate_settings(
    original,
    synthetic_by_setting: dict[str, list],
    train_config,
    folds: int = 5,
    seeds: Sequence[int] = (0,),
    split_mode: SplitMode = SplitMode.STANDARD,
    holdout_fraction: float = 0.2,
) -> MetricTable:
    """Train and score every augmentation setting under a shared protocol.

    Standard mode runs stratified CV over the original dataset; the unseen
    modes rebuild one entity-holdout split per seed. Synthetic rows only
    ever join the training side. Entity index maps cover original plus
    synthetic entities, so never-trained entities keep their random rows.
    """
    from dataclasses import replace as dc_replace

    from .classifier import SynergyModel, train
    from .datasets import TrainingRow, TrainingSet, merge_datasets

    settings = {"no-aug": [], **synthetic_by_setting}
    values: dict[str, dict[str, list[float]]] = {
        s: {m: [] for m in METRICS} for s in settings
    }
    for seed in seeds:
        if split_mode is SplitMode.STANDARD:
            split_pairs = stratified_kfold(list(original), k=folds, seed=seed)
        else:
            split = unseen_splits(original, split_mode, holdout_fraction, seed)
            split_pairs = [(list(split.train), list(split.test))]
        for setting, synthetic in settings.items():
            full = merge_datasets(original, synthetic)
            for train_items, val_items in split_pairs:
                fold_set = merge_datasets(train_items, synthetic)
                fold_set = TrainingSet(
                    fold_set.rows, drug_index=full.drug_index, cell_index=full.cell_index
                )
                config = dc_replace(train_config, seed=seed)
                model = SynergyModel(
                    n_drugs=len(full.drug_index), n_cells=len(full.cell_index), config=config
                )
                train(model, fold_set, config)
                examples = score_triplets(model, full.drug_index, full.cell_index, val_items)
                for name, value in compute_metrics(examples).items():
                    values[setting][name].append(value)
    return MetricTable(
        values=values,
        seeds=tuple(seeds),
        folds=folds if split_mode is SplitMode.STANDARD else 1,
    )
