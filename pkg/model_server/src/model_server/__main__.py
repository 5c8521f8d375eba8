"""Run the model server: `litaug-model-server --model <id> --port 8750`."""

from __future__ import annotations

import argparse
import logging
import sys


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="litaug-model-server")
    parser.add_argument("--model", default=None, help="masked-LM checkpoint id (default: PubMedBERT abstracts)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8750)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-batch", type=int, default=16)
    parser.add_argument(
        "--tiny", action="store_true",
        help="serve the pinned tiny conformance model instead of a pretrained checkpoint",
    )
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr)

    import uvicorn

    from .backend import DEFAULT_MODEL_ID, TransformersBackend
    from .server import create_app

    if args.tiny:
        from .testing import build_tiny_backend

        backend = build_tiny_backend()
    else:
        # Refuse to start if the model cannot load.
        backend = TransformersBackend.from_pretrained(
            args.model or DEFAULT_MODEL_ID, device=args.device, max_batch_size=args.max_batch
        )
    uvicorn.run(create_app(backend), host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
