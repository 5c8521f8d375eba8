"""Pointing the pipeline at a real model server instead of the mock.

The server package (model_server/, installed separately) exposes any
Hugging Face masked-LM checkpoint over the gateway wire protocol:

    pip install -e model_server/ --no-build-isolation
    litaug-model-server --model microsoft/BiomedNLP-PubMedBERT-base-uncased-abstract

and the pipeline consumes it by switching the gateway backend:

    [gateway]
    backend = "http"
    base_url = "http://127.0.0.1:8750"
    embedding_dim = 768
    vocab_file = "pubmedbert_vocab.txt"   # one token per line, for warm-start

or via the environment: LITAUG_GATEWAY_URL=http://127.0.0.1:8750.

This demo starts the server in-process with its pinned tiny conformance
model (no download needed) and runs the HTTP gateway against it. It is
skipped gracefully when the server package is not installed.
"""

import socket
import threading
import time

try:
    import uvicorn
    from model_server.server import create_app
    from model_server.testing import build_tiny_backend
except ImportError:
    raise SystemExit("model_server not installed; run: pip install -e model_server/ --no-build-isolation")

from litaug.gateway import FillRequest, GatewayConfig, HttpGateway

# -- 1. start a live server on an ephemeral port -----------------------------------

with socket.socket() as sock:
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
server = uvicorn.Server(
    uvicorn.Config(create_app(build_tiny_backend()), host="127.0.0.1", port=port, log_level="warning")
)
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.05)
print(f"model server listening on 127.0.0.1:{port}")

# -- 2. the pipeline's HTTP gateway ---------------------------------------------------

gateway = HttpGateway(
    GatewayConfig(backend="http", base_url=f"http://127.0.0.1:{port}", embedding_dim=16)
)
caps = gateway.capabilities()
print(f"capabilities: model={caps.model_id} dim={caps.dim} "
      f"server_side_restriction={caps.server_side_restriction} vocab={caps.vocab_size}")

response = gateway.fill(
    FillRequest(
        text="[MASK] and [MASK] are synergistic in [MASK] cells.",
        allowed_tokens=(("cisplatin", "paclitaxel"), ("camptothecin", "gefitinib"), ("hela", "mcf7")),
        top_k=2,
    )
)
print("restricted fill over the wire:")
for i, ranked in enumerate(response):
    print(f"  slot {i}: " + ", ".join(f"{t.token} ({t.prob:.3f})" for t in ranked))

vectors = gateway.embed(["cisplatin works on hela cells.", "treatment works on mcf7 cells."])
print(f"embeddings over the wire: {vectors.shape}")

server.should_exit = True
print("done; the same flow works against a full PubMedBERT checkpoint for real-corpus runs")
