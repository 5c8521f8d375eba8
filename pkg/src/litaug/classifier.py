"""Drug-synergy classifier: embedding tables + feed-forward net, trained
with Adam on weighted binary cross-entropy.

Everything is plain numpy in double precision with seeded generators, so a
given (seed, data, config) always reproduces bit-identical parameters.
Synthetic rows enter the loss as weighted positive-class cross-entropy; the
sign flag below exists only to reproduce the uncorrected form for audits.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .datasets import TrainingSet
from .errors import TrainingError, ValidationError

logger = logging.getLogger(__name__)

P_CLAMP = 1e-7

LEARNING_RATE_GRID = (0.01, 0.005, 0.001)
HIDDEN_DIM_GRID = (128, 256, 512)
WARMUP_EPOCH_GRID = (0, 5, 10, 20, 30, 40)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.001
    hidden_dim: int = 128
    warmup_epochs: int = 0
    use_instance_weights: bool = True
    seed: int = 0
    d_emb: int = 64
    n_hidden_layers: int = 2
    leaky_slope: float = 0.01
    adam_eps: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    warmup_mode: str = "lr"  # "lr" | "augment-delay"
    literal_synthetic_sign: bool = False

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValidationError("bad training hyperparameters")
        if self.warmup_mode not in {"lr", "augment-delay"}:
            raise ValidationError(f"unknown warmup_mode: {self.warmup_mode!r}")


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z > 0, z, slope * z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class SynergyModel:
    """Two embedding tables feeding a Leaky-ReLU MLP with a logistic head."""

    def __init__(self, n_drugs: int, n_cells: int, config: TrainConfig) -> None:
        if n_drugs < 1 or n_cells < 1:
            raise ValidationError("model needs at least one drug and one cell line")
        self.n_drugs = n_drugs
        self.n_cells = n_cells
        self.config = config
        d = config.d_emb
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
        bound = 1.0 / np.sqrt(d)
        self.params: dict[str, np.ndarray] = {
            "drug_table": rng.uniform(-bound, bound, size=(n_drugs, d)),
            "cell_table": rng.uniform(-bound, bound, size=(n_cells, d)),
        }
        dims = [3 * d] + [config.hidden_dim] * config.n_hidden_layers + [1]
        self.layer_names: list[tuple[str, str]] = []
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            w_bound = 1.0 / np.sqrt(fan_in)
            self.params[f"W{i}"] = rng.uniform(-w_bound, w_bound, size=(fan_in, fan_out))
            self.params[f"b{i}"] = np.zeros(fan_out)
            self.layer_names.append((f"W{i}", f"b{i}"))
        logger.info("synergy model built: %d parameters", self.parameter_count())

    def parameter_count(self) -> int:
        d, h, L = self.config.d_emb, self.config.hidden_dim, self.config.n_hidden_layers
        table_params = (self.n_drugs + self.n_cells) * d
        layer_dims = [3 * d] + [h] * L + [1]
        layer_params = sum(a * b + b for a, b in zip(layer_dims[:-1], layer_dims[1:]))
        return table_params + layer_params

    def canonical_indices(
        self, a: np.ndarray, b: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        return np.minimum(a, b), np.maximum(a, b)

    def forward(
        self, a: np.ndarray, b: np.ndarray, c: np.ndarray, cache: dict | None = None
    ) -> np.ndarray:
        """Probability of synergy per row; drug order never matters."""
        a = np.asarray(a, dtype=int)
        b = np.asarray(b, dtype=int)
        c = np.asarray(c, dtype=int)
        if (
            a.min(initial=0) < 0
            or b.min(initial=0) < 0
            or c.min(initial=0) < 0
            or (a.size and a.max() >= self.n_drugs)
            or (b.size and b.max() >= self.n_drugs)
            or (c.size and c.max() >= self.n_cells)
        ):
            raise ValidationError("triplet index out of range")
        lo, hi = self.canonical_indices(a, b)
        x = np.concatenate(
            [self.params["drug_table"][lo], self.params["drug_table"][hi], self.params["cell_table"][c]],
            axis=1,
        )
        h = x
        pre_acts = []
        acts = [x]
        for i, (wn, bn) in enumerate(self.layer_names):
            z = h @ self.params[wn] + self.params[bn]
            pre_acts.append(z)
            if i < len(self.layer_names) - 1:
                h = leaky_relu(z, self.config.leaky_slope)
                acts.append(h)
        p = sigmoid(pre_acts[-1][:, 0])
        if cache is not None:
            cache.update(lo=lo, hi=hi, c=c, pre_acts=pre_acts, acts=acts, p=p)
        return p

    def predict_proba(self, a: int, b: int, c: int) -> float:
        return float(self.forward(np.array([a]), np.array([b]), np.array([c]))[0])

    def predict(self, a: int, b: int, c: int) -> int:
        return int(self.predict_proba(a, b, c) > 0.5)

    def zero_like_params(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}


def _row_terms(
    p: np.ndarray, y: np.ndarray, weight: np.ndarray, synthetic: np.ndarray, literal_sign: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row loss and d(loss)/d(logit), sharing the clamping logic.

    Original rows contribute weighted BCE against their label; synthetic
    rows weighted BCE against label 1. With ``literal_sign`` the synthetic
    term flips sign (the uncorrected published form, for audit only).
    """
    pc = np.clip(p, P_CLAMP, 1.0 - P_CLAMP)
    inside = (p > P_CLAMP) & (p < 1.0 - P_CLAMP)
    bce = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    grad_pc = -y / pc + (1.0 - y) / (1.0 - pc)
    dz = np.where(inside, grad_pc * p * (1.0 - p), 0.0)
    sign = np.where(synthetic & literal_sign, -1.0, 1.0)
    return sign * weight * bce, sign * weight * dz


def loss(
    model: SynergyModel,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    y: np.ndarray,
    weight: np.ndarray,
    synthetic: np.ndarray,
) -> float:
    """Summed weighted cross-entropy of a batch (no mean reduction)."""
    p = model.forward(a, b, c)
    terms, _ = _row_terms(
        p, np.asarray(y, float), np.asarray(weight, float), np.asarray(synthetic, bool),
        model.config.literal_synthetic_sign,
    )
    return float(terms.sum())


def backward(
    model: SynergyModel,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    y: np.ndarray,
    weight: np.ndarray,
    synthetic: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Batch loss plus exact analytic gradients for every parameter."""
    cache: dict = {}
    p = model.forward(a, b, c, cache=cache)
    terms, dz_out = _row_terms(
        p, np.asarray(y, float), np.asarray(weight, float), np.asarray(synthetic, bool),
        model.config.literal_synthetic_sign,
    )
    grads = model.zero_like_params()
    delta = dz_out[:, None]  # (B, 1) gradient at the output pre-activation
    slope = model.config.leaky_slope
    for i in reversed(range(len(model.layer_names))):
        wn, bn = model.layer_names[i]
        grads[wn] += cache["acts"][i].T @ delta
        grads[bn] += delta.sum(axis=0)
        if i > 0:
            dh = delta @ model.params[wn].T
            delta = dh * np.where(cache["pre_acts"][i - 1] > 0, 1.0, slope)
    d = model.config.d_emb
    dx = delta @ model.params["W0"].T  # gradient at the concatenated embeddings
    np.add.at(grads["drug_table"], cache["lo"], dx[:, :d])
    np.add.at(grads["drug_table"], cache["hi"], dx[:, d : 2 * d])
    np.add.at(grads["cell_table"], cache["c"], dx[:, 2 * d :])
    return float(terms.sum()), grads


class AdamState:
    """First/second moment estimates and the shared step counter."""

    def __init__(self, params: dict[str, np.ndarray]) -> None:
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0


def adam_step(
    state: AdamState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, g in grads.items():
        state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        params[name] -= lr * m_hat / (np.sqrt(v_hat) + eps)


def warmup_lr(base_lr: float, epoch: int, warmup_epochs: int) -> float:
    """Linear ramp from 0 to base_lr across the first ``warmup_epochs``."""
    if warmup_epochs <= 0:
        return base_lr
    return base_lr * min(1.0, (epoch + 1) / warmup_epochs)


def _training_arrays(training_set: TrainingSet) -> tuple[np.ndarray, ...]:
    idx = np.asarray(training_set.indices(), dtype=int)
    if idx.size == 0:
        raise ValidationError("training set is empty")
    y = np.asarray([r.label for r in training_set.rows], dtype=float)
    w = np.asarray([r.weight for r in training_set.rows], dtype=float)
    syn = np.asarray([r.is_synthetic for r in training_set.rows], dtype=bool)
    return idx[:, 0], idx[:, 1], idx[:, 2], y, w, syn


def train(
    model: SynergyModel,
    training_set: TrainingSet,
    config: TrainConfig | None = None,
) -> list[float]:
    """Seeded mini-batch training; returns the per-epoch mean loss trace."""
    config = config or model.config
    a, b, c, y, w, syn = _training_arrays(training_set)
    weights = np.where(syn, w if config.use_instance_weights else 1.0, 1.0)
    state = AdamState(model.params)
    shuffle_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=config.seed, spawn_key=(1,)))
    )
    trace: list[float] = []
    for epoch in range(config.epochs):
        if config.warmup_mode == "augment-delay" and epoch < config.warmup_epochs:
            active = np.flatnonzero(~syn)
            lr = config.learning_rate
        else:
            active = np.arange(len(y))
            lr = (
                warmup_lr(config.learning_rate, epoch, config.warmup_epochs)
                if config.warmup_mode == "lr"
                else config.learning_rate
            )
        if active.size == 0:
            trace.append(float("nan"))
            continue
        order = active[shuffle_rng.permutation(active.size)]
        epoch_loss = 0.0
        for start in range(0, order.size, config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_loss, grads = backward(
                model, a[batch], b[batch], c[batch], y[batch], weights[batch], syn[batch]
            )
            if not np.isfinite(batch_loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}: {batch_loss}")
            adam_step(
                state, model.params, grads, lr,
                beta1=config.adam_beta1, beta2=config.adam_beta2, eps=config.adam_eps,
            )
            epoch_loss += batch_loss
        trace.append(epoch_loss / order.size)
    return trace


# -- grid search ------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    learning_rates: tuple[float, ...] = LEARNING_RATE_GRID
    hidden_dims: tuple[int, ...] = HIDDEN_DIM_GRID
    warmup_epochs: tuple[int, ...] = WARMUP_EPOCH_GRID
    use_instance_weights: tuple[bool, ...] = (False, True)

    def enumerate(self, base: TrainConfig) -> list[TrainConfig]:
        return [
            replace(
                base,
                learning_rate=lr,
                hidden_dim=h,
                warmup_epochs=wu,
                use_instance_weights=uw,
            )
            for lr, h, wu, uw in itertools.product(
                self.learning_rates, self.hidden_dims, self.warmup_epochs, self.use_instance_weights
            )
        ]


def grid_search(
    training_set: TrainingSet,
    grids: GridSpec,
    folds: int = 5,
    seed: int = 0,
    base: TrainConfig | None = None,
    scorer: Callable[[TrainConfig], float] | None = None,
) -> tuple[TrainConfig, float]:
    """Pick the config with the best mean validation AUPRC.

    Folds stratify the original rows; synthetic rows join every training
    fold and never appear in validation. Ties prefer lower learning rate,
    then smaller hidden dim, smaller warmup, and no instance weights.
    """
    from .evaluation import ScoredExample, auprc, stratified_kfold

    if folds < 2:
        raise ValidationError("grid search needs at least 2 folds")
    base = base or TrainConfig(seed=seed)
    candidates = grids.enumerate(base)

    if scorer is None:
        original_rows = [r for r in training_set.rows if not r.is_synthetic]
        synthetic_rows = [r for r in training_set.rows if r.is_synthetic]
        labels = [r.label for r in original_rows]
        fold_pairs = stratified_kfold(list(range(len(original_rows))), labels, k=folds, seed=seed)

        def scorer(config: TrainConfig) -> float:
            scores = []
            for train_idx, val_idx in fold_pairs:
                # Shared entity space so validation rows always resolve.
                fold_set = TrainingSet(
                    [original_rows[i] for i in train_idx] + synthetic_rows,
                    drug_index=training_set.drug_index,
                    cell_index=training_set.cell_index,
                )
                model = SynergyModel(
                    n_drugs=len(training_set.drug_index),
                    n_cells=len(training_set.cell_index),
                    config=config,
                )
                train(model, fold_set, config)
                examples = []
                for i in val_idx:
                    row = original_rows[i]
                    p = model.predict_proba(
                        training_set.drug_index[row.triplet[0]],
                        training_set.drug_index[row.triplet[1]],
                        training_set.cell_index[row.triplet[2]],
                    )
                    examples.append(ScoredExample(triplet=row.triplet, true_label=row.label, score=p))
                scores.append(auprc(examples))
            return float(np.mean(scores))

    best_config = None
    best_key: tuple | None = None
    best_score = -np.inf
    for config in candidates:
        score = scorer(config)
        key = (
            -score,
            config.learning_rate,
            config.hidden_dim,
            config.warmup_epochs,
            config.use_instance_weights,
        )
        if best_key is None or key < best_key:
            best_key = key
            best_config = config
            best_score = score
    assert best_config is not None
    return best_config, float(best_score)


# -- persistence -------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_model(
    model: SynergyModel,
    drug_index: dict[str, int],
    cell_index: dict[str, int],
    path: str | Path,
) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": {
            k: getattr(model.config, k)
            for k in (
                "epochs", "batch_size", "learning_rate", "hidden_dim", "warmup_epochs",
                "use_instance_weights", "seed", "d_emb", "n_hidden_layers", "leaky_slope",
                "adam_eps", "adam_beta1", "adam_beta2", "warmup_mode", "literal_synthetic_sign",
            )
        },
        "drug_index": drug_index,
        "cell_index": cell_index,
        "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in model.params.items()},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> tuple[SynergyModel, dict[str, int], dict[str, int]]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"unsupported checkpoint version: {raw.get('version')}")
    config = TrainConfig(**raw["config"])
    drug_index = {k: int(v) for k, v in raw["drug_index"].items()}
    cell_index = {k: int(v) for k, v in raw["cell_index"].items()}
    model = SynergyModel(n_drugs=len(drug_index), n_cells=len(cell_index), config=config)
    for name, spec in raw["params"].items():
        model.params[name] = np.asarray(spec["data"], dtype=float).reshape(spec["shape"])
    return model, drug_index, cell_index
