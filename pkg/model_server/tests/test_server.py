"""Wire-protocol conformance and golden responses for the pinned tiny model."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from model_server.server import create_app
from model_server.testing import build_tiny_backend

CONFORMANCE = Path(__file__).parent.parent.parent / "conformance" / "fill_conformance.json"

PROB_SUM_TOLERANCE = 1e-6


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(build_tiny_backend()), raise_server_exceptions=False)


def assert_fill_invariants(slots, num_slots, allowed_tokens=None):
    assert len(slots) == num_slots
    for idx, ranked in enumerate(slots):
        probs = [e["prob"] for e in ranked]
        assert all(0.0 < p <= 1.0 for p in probs)
        assert probs == sorted(probs, reverse=True)
        assert sum(probs) <= 1.0 + PROB_SUM_TOLERANCE
        if allowed_tokens is not None and allowed_tokens[idx] is not None:
            allowed = set(allowed_tokens[idx])
            assert all(e["token"] in allowed for e in ranked)


class TestHealthAndCapabilities:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200

    def test_capabilities_fields(self, client):
        caps = client.get("/capabilities").json()
        assert set(caps) == {"vocab_size", "dim", "server_side_restriction", "model_id"}
        assert caps["dim"] == 16
        assert caps["server_side_restriction"] is True
        assert caps["model_id"] == "tiny-bert-seed1234"


class TestFill:
    def test_one_mask_one_slot_descending(self, client):
        response = client.post("/fill", json={"text": "cisplatin [MASK] works.", "top_k": 5})
        assert response.status_code == 200
        slots = response.json()["slots"]
        assert_fill_invariants(slots, 1)
        assert len(slots[0]) == 5

    def test_singleton_allowed_renormalizes_to_one(self, client):
        response = client.post(
            "/fill", json={"text": "[MASK] works.", "allowed_tokens": [["alpha"]], "top_k": 1}
        )
        slots = response.json()["slots"]
        assert slots[0][0]["token"] == "alpha"
        assert slots[0][0]["prob"] == pytest.approx(1.0, abs=1e-9)

    def test_multi_token_allowed_names_dropped(self, client):
        response = client.post(
            "/fill",
            json={
                "text": "[MASK] works.",
                "allowed_tokens": [["alpha", "not a single token"]],
                "top_k": 10,
            },
        )
        tokens = [e["token"] for e in response.json()["slots"][0]]
        assert "not a single token" not in tokens
        assert "alpha" in tokens

    def test_malformed_json_is_400(self, client):
        response = client.post("/fill", json={"top_k": 1})
        assert response.status_code == 400
        response = client.post("/fill", json={"text": "no mask marker"})
        assert response.status_code == 400
        response = client.post("/fill", json={"text": "[MASK]", "top_k": 0})
        assert response.status_code == 400

    def test_allowed_tokens_arity_checked(self, client):
        response = client.post(
            "/fill", json={"text": "[MASK] works.", "allowed_tokens": [["alpha"], ["beta"]]}
        )
        assert response.status_code == 400


class TestEmbed:
    def test_identical_texts_identical_vectors(self, client):
        response = client.post(
            "/embed", json={"texts": ["same text", "same text"], "pooling": "mean"}
        )
        vectors = response.json()["vectors"]
        assert vectors[0] == vectors[1]

    def test_dim_matches_capabilities(self, client):
        caps = client.get("/capabilities").json()
        out = client.post("/embed", json={"texts": ["alpha"], "pooling": "mean"}).json()
        assert out["dim"] == caps["dim"]
        assert len(out["vectors"][0]) == caps["dim"]

    def test_batch_order_preserved(self, client):
        texts = [f"alpha {w}" for w in ("works", "cells", "synergy", "treatment", "beta")]
        batched = client.post("/embed", json={"texts": texts, "pooling": "mean"}).json()["vectors"]
        singles = [
            client.post("/embed", json={"texts": [t], "pooling": "mean"}).json()["vectors"][0]
            for t in texts
        ]
        for got, expected in zip(batched, singles):
            assert got == pytest.approx(expected, abs=1e-5)

    def test_unsupported_pooling_is_400(self, client):
        response = client.post("/embed", json={"texts": ["x"], "pooling": "max"})
        assert response.status_code == 400

    def test_empty_texts_is_400(self, client):
        response = client.post("/embed", json={"texts": [], "pooling": "mean"})
        assert response.status_code == 400


class TestConformanceVectors:
    def test_fill_vectors_satisfy_invariants(self, client):
        spec = json.loads(CONFORMANCE.read_text())
        for case in spec["fill_requests"]:
            response = client.post(
                "/fill",
                json={
                    "text": case["text"],
                    "allowed_tokens": case["allowed_tokens"],
                    "top_k": case["top_k"],
                },
            )
            assert response.status_code == 200, case["name"]
            slots = response.json()["slots"]
            assert_fill_invariants(slots, case["text"].count("[MASK]"), case["allowed_tokens"])
            if case["name"] == "singleton-allowed-set":
                assert slots[0][0]["prob"] == pytest.approx(1.0, abs=1e-9)
            if case["name"] == "large-top-k-clips-to-pool":
                assert len(slots[0]) <= 2

    def test_embed_vectors_contract(self, client):
        spec = json.loads(CONFORMANCE.read_text())
        for case in spec["embed_requests"]:
            response = client.post("/embed", json={"texts": case["texts"], "pooling": "mean"})
            out = response.json()
            assert len(out["vectors"]) == len(case["texts"])
            assert all(len(v) == out["dim"] for v in out["vectors"])
            if case["name"] == "duplicates-and-order":
                assert out["vectors"][0] == out["vectors"][1]
                assert out["vectors"][0] != out["vectors"][2]


class TestGoldenResponses:
    """Stability under the pinned model; tolerances absorb BLAS jitter."""

    def test_golden_fill(self, client):
        response = client.post(
            "/fill",
            json={
                "text": "cisplatin and [MASK] are synergistic in [MASK] cells.",
                "allowed_tokens": [["camptothecin", "vinorelbine", "gefitinib"], ["hela", "mcf7"]],
                "top_k": 2,
            },
        )
        slots = response.json()["slots"]
        golden = GOLDEN_FILL
        assert [[e["token"] for e in ranked] for ranked in slots] == [
            [e["token"] for e in ranked] for ranked in golden
        ]
        for ranked, expected in zip(slots, golden):
            for got, want in zip(ranked, expected):
                assert got["prob"] == pytest.approx(want["prob"], rel=1e-4)

    def test_golden_embed_prefix(self, client):
        response = client.post(
            "/embed", json={"texts": ["alpha works on hela cells."], "pooling": "mean"}
        )
        vector = response.json()["vectors"][0]
        assert vector[:4] == pytest.approx(GOLDEN_EMBED_PREFIX, rel=1e-4, abs=1e-6)


# Recorded once against tiny-bert-seed1234.
GOLDEN_FILL = [
    [
        {"token": "gefitinib", "prob": 0.3515357776697045},
        {"token": "vinorelbine", "prob": 0.3258200463393299},
    ],
    [
        {"token": "hela", "prob": 0.5118346482306565},
        {"token": "mcf7", "prob": 0.48816535176934345},
    ],
]
GOLDEN_EMBED_PREFIX = [
    -0.0020166104659438133,
    0.2595985531806946,
    -0.03528604656457901,
    -0.16551649570465088,
]
