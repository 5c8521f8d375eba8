"""Training the synergy classifier and comparing augmentation settings.

Merges original and synthetic triplets (originals keep their labels at unit
weight; synthetic rows are weighted positives), trains the embedding +
feed-forward classifier, and reports AUPRC / max-F1 / BACC / kappa across
settings with a paired one-sided t-test against the no-augmentation
baseline. Also shows the unseen-entity splits.
"""

from pathlib import Path

import numpy as np

from litaug import build_gateway, load_dataset, load_vocabulary, merge_datasets
from litaug.augment import initial_state, run_manual
from litaug.classifier import SynergyModel, TrainConfig, train
from litaug.config import load_config
from litaug.evaluation import SplitMode, evaluate_settings, unseen_splits

FIXTURES = Path(__file__).parent.parent / "fixtures"

config = load_config(FIXTURES / "config.toml")
vocab = load_vocabulary(config.vocab_path)
dataset = load_dataset(config.dataset_path)
gateway = build_gateway(config.gateway)

# -- 1. manual-prompt synthesis, merge, train ------------------------------------

manual_state = run_manual(
    initial_state(vocab, dataset, rng_seed=config.seed, mode="manual"), gateway, config.augment
)
print(f"manual prompting produced {len(manual_state.synthetic)} synthetic triplets")

training_set = merge_datasets(dataset, list(manual_state.synthetic))
print(f"training set: {len(training_set)} rows "
      f"({sum(1 for r in training_set.rows if r.is_synthetic)} synthetic)")

model = SynergyModel(
    n_drugs=len(training_set.drug_index), n_cells=len(training_set.cell_index), config=config.train
)
trace = train(model, training_set, config.train)
print(f"parameter count: {model.parameter_count()}")
print(f"epoch mean loss: {trace[0]:.4f} -> {trace[-1]:.4f} over {len(trace)} epochs")

# -- 2. settings table -------------------------------------------------------------

table = evaluate_settings(
    dataset,
    {"manual": list(manual_state.synthetic)},
    config.train,
    folds=2,
    seeds=(0, 1),
)
print("\nper-setting metrics (mean over seeds x folds, stderr, p vs no-aug):")
for row in table.summary_rows():
    parts = [f"{row['setting']:<8}"]
    for metric in ("auprc", "max_f1", "bacc", "kappa"):
        parts.append(f"{metric}={row[f'{metric}_mean']:.3f}±{row[f'{metric}_stderr_runs']:.3f}")
        p_key = f"{metric}_p_vs_no-aug"
        if p_key in row:
            parts.append(f"(p={row[p_key]:.2f})")
    print("  " + " ".join(parts))

# -- 3. unseen-entity splits ---------------------------------------------------------

print("\nunseen-entity splits (entities held out of training entirely):")
for mode in (SplitMode.DRUG, SplitMode.CELL):
    split = unseen_splits(dataset, mode, holdout_fraction=0.2, seed=3)
    print(
        f"  {mode.value:<5}: train={len(split.train):>3} test={len(split.test):>2} "
        f"held drugs={sorted(split.held_drugs)[:3]} held cells={sorted(split.held_cells)[:3]}"
    )
