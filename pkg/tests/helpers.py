"""Shared oracles and numeric helpers for unit tests and the acceptance suite."""

import numpy as np

from litaug.classifier import SynergyModel, TrainConfig, backward, loss
from litaug.matching import fold_case
from litaug.vocab import EntityType


# -- independent O(n^2) metric oracles ---------------------------------------

def brute_auprc(labels, scores):
    thresholds = sorted(set(scores), reverse=True)
    total_pos = sum(labels)
    ap, prev_recall = 0.0, 0.0
    for t in thresholds:
        tp = sum(1 for l, s in zip(labels, scores) if s >= t and l == 1)
        fp = sum(1 for l, s in zip(labels, scores) if s >= t and l == 0)
        recall = tp / total_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def brute_max_f1(labels, scores):
    best = 0.0
    for t in sorted(set(scores)) + [max(scores) + 1.0]:
        tp = sum(1 for l, s in zip(labels, scores) if s >= t and l == 1)
        fp = sum(1 for l, s in zip(labels, scores) if s >= t and l == 0)
        fn = sum(labels) - tp
        if 2 * tp + fp + fn > 0:
            best = max(best, 2 * tp / (2 * tp + fp + fn))
    return best


def brute_bacc(labels, scores, threshold=0.5):
    preds = [1 if s > threshold else 0 for s in scores]
    tpr = sum(1 for l, p in zip(labels, preds) if l == 1 and p == 1) / sum(labels)
    tnr = sum(1 for l, p in zip(labels, preds) if l == 0 and p == 0) / (
        len(labels) - sum(labels)
    )
    return (tpr + tnr) / 2


def brute_kappa(labels, scores, threshold=0.5):
    preds = [1 if s > threshold else 0 for s in scores]
    n = len(labels)
    p_o = sum(1 for l, p in zip(labels, preds) if l == p) / n
    p_yes_true = sum(labels) / n
    p_yes_pred = sum(preds) / n
    p_e = p_yes_true * p_yes_pred + (1 - p_yes_true) * (1 - p_yes_pred)
    return 0.0 if p_e >= 1.0 else (p_o - p_e) / (1 - p_e)


# -- independent dictionary-matching oracle -----------------------------------

def naive_mentions(vocab, text):
    """Per-pattern substring scan with the documented resolution rule."""
    folded = fold_case(text)
    candidates = []
    for entry in vocab:
        pattern = fold_case(entry.surface)
        start = folded.find(pattern)
        while start != -1:
            end = start + len(pattern)
            before_ok = start == 0 or not folded[start - 1].isalnum()
            after_ok = end >= len(folded) or not folded[end].isalnum()
            if before_ok and after_ok:
                candidates.append((start, end, entry.entity_type, pattern))
            start = folded.find(pattern, start + 1)
    rank = {EntityType.DRUG: 0, EntityType.CELL_LINE: 1}
    candidates.sort(key=lambda c: (c[0], -(c[1] - c[0]), rank[c[2]], c[3]))
    picked, cursor = [], 0
    for start, end, etype, _ in candidates:
        if start >= cursor:
            picked.append((start, end, etype))
            cursor = end
    return picked


def random_model_and_batch(seed: int):
    """A small random model plus a mixed original/synthetic batch."""
    rng = np.random.default_rng(seed)
    config = TrainConfig(
        d_emb=int(rng.integers(2, 5)),
        hidden_dim=int(rng.integers(3, 6)),
        n_hidden_layers=int(rng.integers(1, 3)),
        seed=seed,
    )
    n_drugs = int(rng.integers(2, 6))
    n_cells = int(rng.integers(1, 4))
    model = SynergyModel(n_drugs=n_drugs, n_cells=n_cells, config=config)
    batch_size = int(rng.integers(1, 9))
    a = rng.integers(0, n_drugs, size=batch_size)
    b = rng.integers(0, n_drugs, size=batch_size)
    c = rng.integers(0, n_cells, size=batch_size)
    y = rng.integers(0, 2, size=batch_size).astype(float)
    syn = rng.random(batch_size) < 0.5
    y = np.where(syn, 1.0, y)
    weight = np.where(syn, rng.uniform(0.1, 1.0, size=batch_size), 1.0)
    return model, (a, b, c, y, weight, syn)


def finite_difference_grads(model, batch, h: float = 1e-5):
    """Central differences of the batch loss for every parameter."""
    grads = {}
    for name, arr in model.params.items():
        grad = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss(model, *batch)
            flat[i] = orig - h
            down = loss(model, *batch)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        grads[name] = grad
    return grads


def max_relative_gradient_error(model, batch, h: float = 1e-5) -> float:
    _, analytic = backward(model, *batch)
    numerical = finite_difference_grads(model, batch, h=h)
    worst = 0.0
    for name in model.params:
        a = analytic[name].ravel()
        n = numerical[name].ravel()
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
