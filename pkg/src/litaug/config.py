"""TOML pipeline configuration.

Sections: [corpus], [vocab], [dataset], [gateway], [cluster], [synthesis],
[loop], [train]. Every field has a default, so a minimal config only names
the input files. The environment variable LITAUG_GATEWAY_URL overrides the
configured gateway URL.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .augment import AugmentConfig
from .classifier import TrainConfig
from .corpus import DEFAULT_KEYWORDS
from .errors import InputError, ValidationError
from .gateway import GatewayConfig

GATEWAY_URL_ENV = "LITAUG_GATEWAY_URL"


@dataclass(frozen=True)
class PipelineConfig:
    corpus_path: str
    vocab_path: str
    dataset_path: str
    gateway: GatewayConfig
    augment: AugmentConfig
    train: TrainConfig
    seed: int = 0

    def resolve_paths(self, base: Path) -> "PipelineConfig":
        def resolve(p: str) -> str:
            return str((base / p).resolve()) if p and not Path(p).is_absolute() else p

        return replace(
            self,
            corpus_path=resolve(self.corpus_path),
            vocab_path=resolve(self.vocab_path),
            dataset_path=resolve(self.dataset_path),
        )


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ValidationError(f"config section [{name}] must be a table")
    return dict(value)


def load_config(path: str | Path, seed: int | None = None, jobs: int | None = None) -> PipelineConfig:
    """Parse the TOML file; CLI --seed/--jobs take precedence when given."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    with path.open("rb") as fh:
        raw = tomllib.load(fh)

    corpus_sec = _section(raw, "corpus")
    vocab_sec = _section(raw, "vocab")
    dataset_sec = _section(raw, "dataset")
    gateway_sec = _section(raw, "gateway")
    cluster_sec = _section(raw, "cluster")
    synthesis_sec = _section(raw, "synthesis")
    loop_sec = _section(raw, "loop")
    train_sec = _section(raw, "train")

    global_seed = int(raw.get("seed", 0)) if seed is None else seed

    decoding = synthesis_sec.get("decoding", "argmax")
    if decoding != "argmax":
        raise ValidationError(
            f"decoding={decoding!r} is a stub: sampling-based decoding is not implemented"
        )

    gateway = GatewayConfig(
        backend=gateway_sec.get("backend", "mock"),
        seed=int(gateway_sec.get("seed", global_seed)),
        embedding_dim=int(gateway_sec.get("embedding_dim", 32)),
        base_url=os.environ.get(GATEWAY_URL_ENV)
        or gateway_sec.get("base_url", "http://localhost:8750"),
        timeout=float(gateway_sec.get("timeout", 30.0)),
        max_retries=int(gateway_sec.get("max_retries", 3)),
        batch_size=int(gateway_sec.get("batch_size", 32)),
        vocab_file=gateway_sec.get("vocab_file") or None,
    )
    augment = AugmentConfig(
        iterations=int(loop_sec.get("iterations", 3)),
        cluster_k=int(cluster_sec.get("k", 10)),
        cluster_max_swaps=int(cluster_sec.get("max_swaps", 200)),
        cluster_metric=cluster_sec.get("metric", "euclidean"),
        keywords=tuple(corpus_sec.get("keywords", DEFAULT_KEYWORDS)),
        samples_per_template=int(synthesis_sec.get("samples_per_template", 64)),
        warm_start=bool(synthesis_sec.get("warm_start", True)),
        sample_one_variant=bool(synthesis_sec.get("sample_one_variant", False)),
        manual_warm_start=bool(synthesis_sec.get("manual_warm_start", False)),
        require_full_slots=bool(synthesis_sec.get("require_full_slots", False)),
        jobs=jobs if jobs is not None else int(raw.get("jobs", 1)),
    )
    train = TrainConfig(
        epochs=int(train_sec.get("epochs", 50)),
        batch_size=int(train_sec.get("batch_size", 64)),
        learning_rate=float(train_sec.get("learning_rate", 0.001)),
        hidden_dim=int(train_sec.get("hidden_dim", 128)),
        warmup_epochs=int(train_sec.get("warmup_epochs", 0)),
        use_instance_weights=bool(train_sec.get("use_instance_weights", True)),
        seed=int(train_sec.get("seed", global_seed)),
        d_emb=int(train_sec.get("d_emb", 64)),
        n_hidden_layers=int(train_sec.get("n_hidden_layers", 2)),
        leaky_slope=float(train_sec.get("leaky_slope", 0.01)),
        warmup_mode=train_sec.get("warmup_mode", "lr"),
        literal_synthetic_sign=bool(train_sec.get("literal_synthetic_sign", False)),
    )
    config = PipelineConfig(
        corpus_path=corpus_sec.get("path", ""),
        vocab_path=vocab_sec.get("path", ""),
        dataset_path=dataset_sec.get("path", ""),
        gateway=gateway,
        augment=augment,
        train=train,
        seed=global_seed,
    )
    return config.resolve_paths(path.parent)
