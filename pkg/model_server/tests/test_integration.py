"""End-to-end: the litaug HTTP gateway talking to this server over TCP.

The pipeline is the consumer of record for the wire protocol; this test
drives its client against a live uvicorn instance serving the pinned tiny
model, including a small restricted synthesis pass.
"""

import socket
import threading
import time

import pytest

uvicorn = pytest.importorskip("uvicorn")
litaug_gateway = pytest.importorskip("litaug.gateway")

from model_server.server import create_app
from model_server.testing import build_tiny_backend


@pytest.fixture(scope="module")
def server_url():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    config = uvicorn.Config(
        create_app(build_tiny_backend()), host="127.0.0.1", port=port, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture()
def gateway(server_url):
    return litaug_gateway.HttpGateway(
        litaug_gateway.GatewayConfig(
            backend="http", base_url=server_url, embedding_dim=16, timeout=10.0
        )
    )


def test_capabilities_handshake(gateway):
    caps = gateway.capabilities()
    assert caps.dim == 16
    assert caps.server_side_restriction is True
    assert caps.model_id == "tiny-bert-seed1234"


def test_fill_round_trip_restricted(gateway):
    request = litaug_gateway.FillRequest(
        text="[MASK] and [MASK] are synergistic in [MASK] cells.",
        allowed_tokens=(("cisplatin", "paclitaxel"), ("camptothecin", "gefitinib"), ("hela", "mcf7")),
        top_k=2,
    )
    response = gateway.fill(request)
    assert len(response) == 3
    assert response[0][0].token in {"cisplatin", "paclitaxel"}
    assert response[2][0].token in {"hela", "mcf7"}


def test_embed_round_trip(gateway):
    vectors = gateway.embed(["alpha works.", "alpha works.", "beta works."])
    assert vectors.shape == (3, 16)
    assert (vectors[0] == vectors[1]).all()


def test_restricted_synthesis_through_live_server(gateway):
    from litaug.synthesize import fill_prompt, manual_templates, restricted_mode, WarmStartPrompt, assemble_triplets
    from litaug.vocab import EntityType, EntityVocabulary, VocabEntry, VocabSource

    vocab = EntityVocabulary(
        [
            VocabEntry("cisplatin", EntityType.DRUG, VocabSource.SEED_DATASET),
            VocabEntry("paclitaxel", EntityType.DRUG, VocabSource.LINCS),
            VocabEntry("gefitinib", EntityType.DRUG, VocabSource.GDSC),
            VocabEntry("hela", EntityType.CELL_LINE, VocabSource.CCLE),
            VocabEntry("mcf7", EntityType.CELL_LINE, VocabSource.NCI60),
        ]
    )
    # Token membership for warm-start filtering is file-based over HTTP;
    # restriction sets are built from the entity lists directly.
    mode = restricted_mode(vocab, frozenset(v.surface for v in vocab))
    template = manual_templates()[3]
    fills = fill_prompt(gateway, WarmStartPrompt.bare(template), mode)
    assert fills is not None
    triplets = assemble_triplets(template, WarmStartPrompt.bare(template), fills)
    drugs = set(vocab.surfaces_of_type(EntityType.DRUG, valid_only=True))
    cells = set(vocab.surfaces_of_type(EntityType.CELL_LINE, valid_only=True))
    for t in triplets:
        assert t.drug_a in drugs and t.drug_b in drugs and t.cell in cells
