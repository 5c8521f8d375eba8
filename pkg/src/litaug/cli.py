"""litaug command line: mine, cluster, synthesize, augment, train, evaluate,
audit-leakage, export-embeddings.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 gateway/protocol
error. Diagnostics go to stderr; data goes to files (and paths to stdout).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (
    AugmentConfig,
    MODES,
    initial_state,
    run_mode,
    synthesize_once,
    training_set_from_state,
)
from .classifier import SynergyModel, load_model, save_model, train
from .config import PipelineConfig, load_config
from .corpus import load_corpus, load_mined, mine_candidates, save_mined, audit_leakage
from .datasets import load_dataset, merge_datasets
from .errors import GatewayError, InputError, ValidationError
from .evaluation import (
    MetricTable,
    SplitMode,
    compute_metrics,
    evaluate_settings,
    score_triplets,
)
from .gateway import build_gateway
from .kmedoids import k_medoids
from .manifest import RunManifest
from .matching import Matcher
from .synthesize import load_triplets, save_triplets
from .templates import (
    dedupe_templates,
    embed_batch,
    extract_templates,
    load_templates,
    mask_sentence,
    save_templates,
)
from .vocab import load_vocabulary

logger = logging.getLogger("litaug")

SETTING_FILE_TAGS = {
    "manual": "manual",
    "iterative": "iterative",
    "restricted": "restricted",
    "no-warm-start": "no_warm_start",
}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, config: PipelineConfig | None = None) -> RunManifest:
    manifest = RunManifest(command=args.command, seed=getattr(args, "seed", None) or 0)
    if config is not None:
        manifest.seed = config.seed
        manifest.config_snapshot = {
            "corpus_path": config.corpus_path,
            "vocab_path": config.vocab_path,
            "dataset_path": config.dataset_path,
            "gateway": asdict(config.gateway),
            "augment": asdict(config.augment),
            "train": asdict(config.train),
            "seed": config.seed,
        }
    return manifest


def _load_inputs(config: PipelineConfig, manifest: RunManifest, corpus=True, vocab=True, dataset=True):
    parts = []
    if corpus:
        manifest.add_input(config.corpus_path)
        parts.append(load_corpus(config.corpus_path))
    if vocab:
        manifest.add_input(config.vocab_path)
        parts.append(load_vocabulary(config.vocab_path))
    if dataset:
        manifest.add_input(config.dataset_path)
        parts.append(load_dataset(config.dataset_path))
    return parts


def cmd_mine(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    manifest.start("mine")
    corpus, vocab = _load_inputs(config, manifest, dataset=False)
    mined = mine_candidates(corpus, Matcher(vocab), keywords=config.augment.keywords, jobs=config.augment.jobs)
    manifest.stop("mine")
    path = out / "mined.jsonl"
    save_mined(mined, path)
    manifest.add_output(path)
    manifest.write(out)
    print(path)
    return 0


def cmd_cluster(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    manifest.add_input(args.mined)
    mined = load_mined(args.mined)
    gateway = build_gateway(config.gateway)
    masked = dedupe_templates(mask_sentence(m) for m in mined)
    manifest.start("cluster")
    templates = []
    if masked:
        embeddings = embed_batch(gateway, masked)
        k = min(config.augment.cluster_k, len(masked))
        clustering = k_medoids(
            embeddings, k=k, seed=config.seed,
            max_swaps=config.augment.cluster_max_swaps, metric=config.augment.cluster_metric,
        )
        templates = extract_templates(clustering, masked, iteration=args.iteration)
    else:
        logger.warning("no mined sentences: emitting zero templates")
    manifest.stop("cluster")
    path = out / "templates.jsonl"
    save_templates(templates, path)
    manifest.add_output(path)
    manifest.write(out)
    print(path)
    return 0


def cmd_synthesize(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    vocab, dataset = _load_inputs(config, manifest, corpus=False)
    manifest.add_input(args.templates)
    templates = load_templates(args.templates)
    gateway = build_gateway(config.gateway)
    mode = "restricted" if args.restricted else "iterative"
    state = initial_state(vocab, dataset, rng_seed=config.seed, mode=mode)
    manifest.start("synthesize")
    triplets = synthesize_once(state, gateway, config.augment, templates)
    manifest.stop("synthesize")
    path = out / "synthetic.jsonl"
    save_triplets(triplets, path)
    manifest.add_output(path)
    manifest.write(out)
    print(path)
    return 0


def cmd_augment(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    corpus, vocab, dataset = _load_inputs(config, manifest)
    gateway = build_gateway(config.gateway)
    if args.mode == "all":
        requested = list(MODES)
    elif args.mode == "no-warm-start":
        requested = ["no-warm-start"]
    else:
        requested = [args.mode]
    if args.no_warm_start and "no-warm-start" not in requested:
        requested.append("no-warm-start")
    for mode in requested:
        aug_config = config.augment
        run_as = mode
        tag = SETTING_FILE_TAGS[mode]
        if mode == "no-warm-start":
            run_as = "iterative"
            aug_config = replace(aug_config, warm_start=False)
        manifest.start(f"augment:{mode}")
        state = run_mode(
            mode=run_as,
            vocab=vocab,
            dataset=dataset,
            corpus=corpus,
            gateway=gateway,
            config=aug_config,
            seed=config.seed,
            out_dir=out,
            resume=not args.no_resume,
            file_tag=tag,
        )
        manifest.stop(f"augment:{mode}")
        for name in (f"synthetic_{tag}.jsonl", f"augmented_{tag}.jsonl"):
            manifest.add_output(out / name)
        logger.info("%s: %d synthetic triplets", mode, len(state.synthetic))
    manifest.write(out)
    for mode in requested:
        print(out / f"synthetic_{SETTING_FILE_TAGS[mode]}.jsonl")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    manifest.add_input(config.dataset_path)
    dataset = load_dataset(config.dataset_path)
    synthetic = []
    if args.synthetic:
        manifest.add_input(args.synthetic)
        synthetic = load_triplets(args.synthetic)
    training_set = merge_datasets(dataset, synthetic)
    model = SynergyModel(
        n_drugs=len(training_set.drug_index),
        n_cells=len(training_set.cell_index),
        config=config.train,
    )
    manifest.start("train")
    trace = train(model, training_set, config.train)
    manifest.stop("train")
    model_path = out / "model.json"
    save_model(model, training_set.drug_index, training_set.cell_index, model_path)
    trace_path = out / "loss_trace.json"
    trace_path.write_text(json.dumps({"epoch_mean_loss": trace}), encoding="utf-8")
    manifest.add_output(model_path)
    manifest.add_output(trace_path)
    manifest.write(out)
    print(model_path)
    return 0


def cmd_predict(args) -> int:
    from .vocab import canonical_key

    model, drug_index, cell_index = load_model(args.model)
    parts = [canonical_key(p) for p in args.triplet.split(",")]
    if len(parts) != 3:
        raise ValidationError("--triplet expects 'drug_a,drug_b,cell_line'")
    drug_a, drug_b, cell = parts
    for name, index in ((drug_a, drug_index), (drug_b, drug_index), (cell, cell_index)):
        if name not in index:
            raise ValidationError(f"entity {name!r} is not in the model's index maps")
    p = model.predict_proba(drug_index[drug_a], drug_index[drug_b], cell_index[cell])
    print(json.dumps({"triplet": parts, "probability": p, "label": int(p > 0.5)}))
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    manifest.add_input(config.dataset_path)
    dataset = load_dataset(config.dataset_path)

    if args.model:
        manifest.add_input(args.model)
        model, drug_index, cell_index = load_model(args.model)
        manifest.start("evaluate")
        examples = score_triplets(model, drug_index, cell_index, dataset)
        metrics = compute_metrics(examples)
        manifest.stop("evaluate")
        path = out / "metrics.json"
        path.write_text(json.dumps(metrics, indent=2, sort_keys=True), encoding="utf-8")
        manifest.add_output(path)
        manifest.write(out)
        print(path)
        return 0

    if not args.augment_dir:
        raise ValidationError("evaluate needs either --model or --augment-dir")
    augment_dir = Path(args.augment_dir)
    synthetic_by_setting = {}
    for setting, tag in SETTING_FILE_TAGS.items():
        candidate = augment_dir / f"synthetic_{tag}.jsonl"
        if candidate.is_file():
            manifest.add_input(candidate)
            synthetic_by_setting[setting] = load_triplets(candidate)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [config.seed]
    manifest.start("evaluate")
    table = evaluate_settings(
        dataset,
        synthetic_by_setting,
        config.train,
        folds=args.folds,
        seeds=seeds,
        split_mode=SplitMode(args.split),
        holdout_fraction=args.holdout_fraction,
    )
    manifest.stop("evaluate")
    json_path = out / "metrics.json"
    csv_path = out / "metrics.csv"
    table.to_json(json_path)
    table.to_csv(csv_path)
    manifest.add_output(json_path)
    manifest.add_output(csv_path)
    manifest.write(out)
    print(csv_path)
    return 0


def cmd_audit_leakage(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    corpus, vocab, dataset = _load_inputs(config, manifest)
    k_buckets = tuple(int(k) for k in args.k_buckets.split(","))
    manifest.start("audit")
    report = audit_leakage(corpus, Matcher(vocab), dataset, k_buckets=k_buckets, jobs=config.augment.jobs)
    manifest.stop("audit")
    json_path = out / "leakage.json"
    json_path.write_text(json.dumps(report.to_json_dict(), indent=2, sort_keys=True), encoding="utf-8")
    csv_path = out / "leakage_counts.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("category,item,sentence_count,abstract_count\n")
        for category, item, s, a in report.to_csv_rows():
            fh.write(f"{category},{item},{s},{a}\n")
    manifest.add_output(json_path)
    manifest.add_output(csv_path)
    manifest.write(out)
    print(json_path)
    return 0


def cmd_export_embeddings(args) -> int:
    config = load_config(args.config, seed=args.seed, jobs=args.jobs)
    out = _out_dir(args)
    manifest = _manifest(args, config)
    corpus, vocab = _load_inputs(config, manifest, dataset=False)
    if args.checkpoint:
        from .augment import load_state

        manifest.add_input(args.checkpoint)
        vocab = load_state(args.checkpoint).vocab
    gateway = build_gateway(config.gateway)
    manifest.start("export")
    mined = mine_candidates(corpus, Matcher(vocab), keywords=config.augment.keywords, jobs=config.augment.jobs)
    masked = dedupe_templates(mask_sentence(m) for m in mined)
    vectors = embed_batch(gateway, masked)
    manifest.stop("export")
    npz_path = out / "embeddings.npz"
    np.savez(npz_path, vectors=vectors)
    meta_path = out / "embeddings_meta.jsonl"
    with meta_path.open("w", encoding="utf-8") as fh:
        for t in masked:
            fh.write(json.dumps(t.to_json_dict(), sort_keys=True) + "\n")
    manifest.add_output(npz_path)
    manifest.add_output(meta_path)
    manifest.write(out)
    print(npz_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litaug",
        description="Literature-mined prompt synthesis and augmentation for drug-synergy prediction.",
    )
    parser.add_argument("--version", action="version", version=f"litaug {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_out: bool = True) -> None:
        p.add_argument("--config", required=True, help="TOML pipeline config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=None, help="worker count for parallel stages")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("mine", help="mine candidate synergy sentences")
    common(p)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("cluster", help="cluster masked sentences into medoid templates")
    common(p)
    p.add_argument("--mined", required=True, help="mined.jsonl from the mine stage")
    p.add_argument("--iteration", type=int, default=1, help="iteration tag for extracted templates")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synthesize", help="fill templates into synthetic triplets")
    common(p)
    p.add_argument("--templates", required=True, help="templates.jsonl to fill")
    p.add_argument("--restricted", action="store_true", help="restrict fills to valid entity names")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("augment", help="run the full augmentation loop")
    common(p)
    p.add_argument(
        "--mode",
        choices=["manual", "iterative", "restricted", "no-warm-start", "all"],
        default="all",
    )
    p.add_argument("--no-warm-start", action="store_true", help="also produce the no-warm-start ablation")
    p.add_argument("--no-resume", action="store_true", help="ignore existing checkpoints")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="train the synergy classifier")
    common(p)
    p.add_argument("--synthetic", default=None, help="synthetic.jsonl to merge into training")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a single triplet with a trained model")
    p.add_argument("--model", required=True, help="model.json checkpoint")
    p.add_argument("--triplet", required=True, help="drug_a,drug_b,cell_line")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a model or the augmentation settings")
    common(p)
    p.add_argument("--model", default=None, help="model.json to score on the dataset")
    p.add_argument("--augment-dir", default=None, help="augment output dir with synthetic_*.jsonl")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seeds", default=None, help="comma-separated seeds (default: config seed)")
    p.add_argument(
        "--split",
        choices=[m.value for m in SplitMode],
        default=SplitMode.STANDARD.value,
        help="standard CV or an unseen-entity split",
    )
    p.add_argument("--holdout-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("audit-leakage", help="count dataset co-mentions in the corpus")
    common(p)
    p.add_argument("--k-buckets", default="1,2,5,10,100")
    p.set_defaults(func=cmd_audit_leakage)

    p = sub.add_parser("export-embeddings", help="export masked-sentence embeddings")
    common(p)
    p.add_argument("--checkpoint", default=None, help="pipeline state whose vocabulary to use")
    p.set_defaults(func=cmd_export_embeddings)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help and usage errors carry their own code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GatewayError as exc:
        print(f"gateway error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
