"""CLI contracts: exit codes, stage outputs, manifest chaining."""

import json
import shutil
from pathlib import Path

import pytest

from litaug.cli import main
from litaug.manifest import file_digest, load_manifest

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture()
def workspace(tmp_path):
    """Fixture copies so relative config paths resolve inside tmp."""
    for name in ("config.toml", "corpus.jsonl", "vocab.tsv", "dataset.csv"):
        shutil.copy(FIXTURES / name, tmp_path / name)
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_help_exits_zero(self, capsys):
        assert run("evaluate", "--help") == 0
        assert "usage" in capsys.readouterr().out

    def test_missing_config_exits_two(self, tmp_path, capsys):
        code = run("mine", "--config", tmp_path / "missing.toml", "--out", tmp_path / "o")
        assert code == 2
        assert "missing.toml" in capsys.readouterr().err

    def test_validation_error_exits_one(self, workspace, capsys):
        bad = workspace / "bad.toml"
        bad.write_text(
            (workspace / "config.toml").read_text() .replace('decoding = "argmax"', 'decoding = "sample"')
        )
        code = run("mine", "--config", bad, "--out", workspace / "o")
        assert code == 1

    def test_gateway_error_exits_three(self, workspace, monkeypatch):
        cfg = workspace / "http.toml"
        cfg.write_text(
            (workspace / "config.toml").read_text().replace('backend = "mock"', 'backend = "http"')
        )
        monkeypatch.setenv("LITAUG_GATEWAY_URL", "http://127.0.0.1:1")
        code = run(
            "cluster", "--config", cfg, "--mined", workspace / "mined.jsonl",
            "--out", workspace / "o",
        )
        # the mined file is missing -> exit 2 before any gateway call; mine first
        assert code == 2
        assert run("mine", "--config", cfg, "--out", workspace) == 0
        code = run(
            "cluster", "--config", cfg, "--mined", workspace / "mined.jsonl",
            "--out", workspace / "o",
        )
        assert code == 3

    def test_unknown_subcommand_nonzero(self):
        assert run("frobnicate") != 0


class TestStages:
    def test_mine_then_cluster_then_synthesize(self, workspace):
        cfg = workspace / "config.toml"
        assert run("mine", "--config", cfg, "--out", workspace / "m") == 0
        mined = workspace / "m" / "mined.jsonl"
        assert mined.is_file() and mined.stat().st_size > 0

        assert run(
            "cluster", "--config", cfg, "--mined", mined, "--out", workspace / "c"
        ) == 0
        templates = workspace / "c" / "templates.jsonl"
        assert sum(1 for _ in templates.open()) == 6  # fixture cluster.k

        assert run(
            "synthesize", "--config", cfg, "--templates", templates, "--out", workspace / "s"
        ) == 0
        synthetic = workspace / "s" / "synthetic.jsonl"
        rows = [json.loads(l) for l in synthetic.open()]
        assert rows and all(r["label"] == 1 and 0 < r["weight"] <= 1 for r in rows)

    def test_audit_leakage_outputs(self, workspace):
        cfg = workspace / "config.toml"
        assert run("audit-leakage", "--config", cfg, "--out", workspace / "a",
                   "--k-buckets", "1,2,5") == 0
        report = json.loads((workspace / "a" / "leakage.json").read_text())
        assert report["k_buckets"] == [1, 2, 5]
        assert set(report["counts"]) == {"drug", "cell_line", "drug_pair", "triplet"}
        csv_text = (workspace / "a" / "leakage_counts.csv").read_text()
        assert csv_text.startswith("category,item,sentence_count,abstract_count")

    def test_export_embeddings(self, workspace):
        import numpy as np

        cfg = workspace / "config.toml"
        assert run("export-embeddings", "--config", cfg, "--out", workspace / "e") == 0
        with np.load(workspace / "e" / "embeddings.npz") as data:
            vectors = data["vectors"]
        meta_lines = sum(1 for _ in (workspace / "e" / "embeddings_meta.jsonl").open())
        assert vectors.shape == (meta_lines, 24)


class TestEndToEndChain:
    def test_augment_train_evaluate_manifests_chain(self, workspace):
        cfg = workspace / "config.toml"
        aug = workspace / "aug"
        assert run("augment", "--config", cfg, "--mode", "manual", "--out", aug) == 0
        synthetic = aug / "synthetic_manual.jsonl"
        assert synthetic.is_file()

        train_out = workspace / "train"
        assert run("train", "--config", cfg, "--synthetic", synthetic, "--out", train_out) == 0
        model = train_out / "model.json"

        eval_out = workspace / "eval"
        assert run("evaluate", "--config", cfg, "--model", model, "--out", eval_out) == 0
        metrics = json.loads((eval_out / "metrics.json").read_text())
        assert set(metrics) == {"auprc", "max_f1", "bacc", "kappa"}

        # digests chain across stages
        aug_manifest = load_manifest(aug)
        train_manifest = load_manifest(train_out)
        eval_manifest = load_manifest(eval_out)
        assert aug_manifest["outputs"][str(synthetic)] == train_manifest["inputs"][str(synthetic)]
        assert train_manifest["outputs"][str(model)] == eval_manifest["inputs"][str(model)]
        assert train_manifest["outputs"][str(model)] == file_digest(model)

    def test_predict_single_triplet(self, workspace, capsys):
        cfg = workspace / "config.toml"
        assert run("train", "--config", cfg, "--out", workspace / "t") == 0
        capsys.readouterr()
        assert run(
            "predict", "--model", workspace / "t" / "model.json",
            "--triplet", "cisplatin,camptothecin,bt-483",
        ) == 0
        out = json.loads(capsys.readouterr().out)
        assert 0.0 < out["probability"] < 1.0
        assert out["label"] == int(out["probability"] > 0.5)
        assert run(
            "predict", "--model", workspace / "t" / "model.json",
            "--triplet", "unknown-drug,camptothecin,bt-483",
        ) == 1

    def test_settings_evaluate_table(self, workspace):
        cfg = workspace / "config.toml"
        aug = workspace / "aug"
        assert run("augment", "--config", cfg, "--mode", "manual", "--out", aug) == 0
        eval_out = workspace / "eval"
        assert run(
            "evaluate", "--config", cfg, "--augment-dir", aug, "--out", eval_out, "--folds", "2"
        ) == 0
        table = json.loads((eval_out / "metrics.json").read_text())
        assert set(table["values"]) == {"no-aug", "manual"}
        csv_text = (eval_out / "metrics.csv").read_text()
        assert "auprc_mean" in csv_text

    def test_identical_invocations_identical_digests(self, workspace):
        cfg = workspace / "config.toml"
        a, b = workspace / "a", workspace / "b"
        for out in (a, b):
            assert run("augment", "--config", cfg, "--mode", "manual", "--out", out) == 0
        da = file_digest(a / "synthetic_manual.jsonl")
        db = file_digest(b / "synthetic_manual.jsonl")
        assert da == db


class TestSeedOverride:
    def test_cli_seed_changes_augment_output(self, workspace):
        cfg = workspace / "config.toml"
        a, b = workspace / "s7", workspace / "s8"
        assert run("augment", "--config", cfg, "--mode", "iterative", "--out", a, "--seed", "7") == 0
        assert run("augment", "--config", cfg, "--mode", "iterative", "--out", b, "--seed", "8") == 0
        da = file_digest(a / "synthetic_iterative.jsonl")
        db = file_digest(b / "synthetic_iterative.jsonl")
        assert da != db
