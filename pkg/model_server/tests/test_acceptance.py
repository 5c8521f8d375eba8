"""The secondary acceptance criterion, printed as one PASS/FAIL line.

Protocol conformance: responses for every shared conformance vector satisfy
the fill-response invariants and the allowed-token renormalization
contract, and the golden responses are stable under the pinned model.
Run with `pytest -s` to see the line.
"""

import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from model_server.server import create_app
from model_server.testing import build_tiny_backend

from test_server import GOLDEN_EMBED_PREFIX, GOLDEN_FILL, assert_fill_invariants

CONFORMANCE = Path(__file__).parent.parent.parent / "conformance" / "fill_conformance.json"


def test_protocol_conformance():
    start = time.monotonic()
    client = TestClient(create_app(build_tiny_backend()))
    spec = json.loads(CONFORMANCE.read_text())
    ok = True
    for case in spec["fill_requests"]:
        response = client.post(
            "/fill",
            json={
                "text": case["text"],
                "allowed_tokens": case["allowed_tokens"],
                "top_k": case["top_k"],
            },
        )
        ok &= response.status_code == 200
        slots = response.json()["slots"]
        assert_fill_invariants(slots, case["text"].count("[MASK]"), case["allowed_tokens"])
        if case["name"] == "singleton-allowed-set":
            ok &= abs(slots[0][0]["prob"] - 1.0) < 1e-9

    golden = client.post(
        "/fill",
        json={
            "text": "cisplatin and [MASK] are synergistic in [MASK] cells.",
            "allowed_tokens": [["camptothecin", "vinorelbine", "gefitinib"], ["hela", "mcf7"]],
            "top_k": 2,
        },
    ).json()["slots"]
    for ranked, expected in zip(golden, GOLDEN_FILL):
        for got, want in zip(ranked, expected):
            ok &= got["token"] == want["token"]
            ok &= got["prob"] == pytest.approx(want["prob"], rel=1e-4)
    embedded = client.post(
        "/embed", json={"texts": ["alpha works on hela cells."], "pooling": "mean"}
    ).json()["vectors"][0]
    ok &= embedded[:4] == pytest.approx(GOLDEN_EMBED_PREFIX, rel=1e-4, abs=1e-6)

    elapsed = time.monotonic() - start
    status = "PASS" if ok else "FAIL"
    print(
        f"[{status}] protocol-conformance: {elapsed:.1f}s "
        f"({len(spec['fill_requests'])} fill vectors, goldens stable under tiny-bert-seed1234)"
    )
    assert ok
