"""Mask-filling / sentence-embedding gateway.

Two backends behind one small interface: an HTTP client speaking the JSON
wire protocol (POST /fill, POST /embed, GET /capabilities) and a fully
deterministic in-process mock. The mock is a pure function of
(seed, request), which keeps the whole test suite hermetic.

Wire protocol:
    POST /fill  {"text": str with "[MASK]" markers,
                 "allowed_tokens": [[str, ...] | null per slot] | null,
                 "top_k": int}
                -> {"slots": [[{"token": str, "prob": float}, ...], ...]}
    POST /embed {"texts": [str, ...], "pooling": "mean"}
                -> {"vectors": [[float, ...], ...], "dim": int}
    GET  /capabilities
                -> {"vocab_size": int, "dim": int,
                    "server_side_restriction": bool, "model_id": str}
"""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import GatewayProtocolError, GatewayTransportError, ValidationError
from .vocab import EntityType

logger = logging.getLogger(__name__)

MASK_TOKEN = "[MASK]"

#: When the server cannot restrict logits itself, the client asks for this
#: many candidates and filters locally. Allowed tokens ranked below this
#: cutoff are lost; the /capabilities handshake makes that degradation
#: explicit.
CLIENT_RESTRICTION_TOP_K = 200

PROB_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TokenProb:
    token: str
    prob: float


@dataclass(frozen=True)
class FillRequest:
    """A cloze query. ``text`` carries one ``[MASK]`` marker per slot.

    ``allowed_tokens`` optionally restricts each slot to a candidate list
    (None entries leave that slot unrestricted). ``slot_types`` is a hint
    consumed only by the mock backend (the wire protocol does not carry it;
    a real model sees plain untyped masks).
    """

    text: str
    allowed_tokens: tuple[tuple[str, ...] | None, ...] | None = None
    top_k: int = 1
    slot_types: tuple[EntityType, ...] | None = None

    def num_slots(self) -> int:
        return self.text.count(MASK_TOKEN)

    def validate(self) -> None:
        n = self.num_slots()
        if n < 1:
            raise ValidationError(f"fill request has no {MASK_TOKEN} marker: {self.text!r}")
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if self.allowed_tokens is not None and len(self.allowed_tokens) != n:
            raise ValidationError(
                f"allowed_tokens has {len(self.allowed_tokens)} entries for {n} slots"
            )
        if self.slot_types is not None and len(self.slot_types) != n:
            raise ValidationError(f"slot_types has {len(self.slot_types)} entries for {n} slots")


FillResponse = list[list[TokenProb]]


@dataclass(frozen=True)
class Capabilities:
    vocab_size: int
    dim: int
    server_side_restriction: bool
    model_id: str


@dataclass(frozen=True)
class GatewayConfig:
    backend: str = "mock"  # "mock" | "http"
    seed: int = 0
    embedding_dim: int = 32
    base_url: str = "http://localhost:8750"
    timeout: float = 30.0
    max_retries: int = 3
    batch_size: int = 32
    vocab_file: str | None = None

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValidationError("gateway timeout must be positive")
        if self.embedding_dim <= 0:
            raise ValidationError("embedding_dim must be positive")


class Gateway(Protocol):
    def fill(self, request: FillRequest) -> FillResponse: ...

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...

    def capabilities(self) -> Capabilities: ...

    def vocab(self) -> frozenset[str]: ...


def validate_fill_response(slots: FillResponse, num_slots: int) -> None:
    """Check the response invariants shared by every backend."""
    if len(slots) != num_slots:
        raise GatewayProtocolError(f"expected {num_slots} slot lists, got {len(slots)}")
    for idx, ranked in enumerate(slots):
        total = 0.0
        prev = float("inf")
        for tp in ranked:
            if not (0.0 < tp.prob <= 1.0):
                raise GatewayProtocolError(f"slot {idx}: probability {tp.prob} outside (0, 1]")
            if tp.prob > prev:
                raise GatewayProtocolError(f"slot {idx}: probabilities not descending")
            prev = tp.prob
            total += tp.prob
        if total > 1.0 + PROB_SUM_TOLERANCE:
            raise GatewayProtocolError(f"slot {idx}: probabilities sum to {total} > 1")


def _normalize_text(text: str) -> str:
    return " ".join(text.split()).lower()


# Token inventory of the mock model. Deliberately a mix: real-looking drug
# and cell-line names (so restricted mode has something to hit) plus generic
# biomedical words (so unrestricted mode can admit invalid entity names,
# which is exactly what vocabulary expansion must tolerate).
MOCK_DRUG_TOKENS = (
    "cisplatin", "camptothecin", "vinorelbine", "gefitinib", "erlotinib",
    "paclitaxel", "docetaxel", "doxorubicin", "lapatinib", "sorafenib",
    "sunitinib", "olaparib", "trametinib", "dasatinib", "bortezomib",
    "carboplatin", "etoposide", "gemcitabine", "imatinib", "vorinostat",
)
MOCK_CELL_TOKENS = (
    "mcf-7", "bt-483", "a549", "h1299", "skbr3", "hela", "ht-29",
    "k562", "u2os", "pc-3", "du145", "t47d", "sw620", "hepg2",
)
MOCK_FILLER_TOKENS = (
    "apoptosis", "treatment", "combination", "cells", "therapy", "study",
    "growth", "inhibition", "pathway", "tumor",
)


class MockGateway:
    """Deterministic stand-in for a masked-language-model server.

    Fill distributions are keyed hashes of (normalized text, slot index,
    token); embeddings are character-3-gram count vectors pushed through a
    fixed seeded random projection, so texts sharing more 3-grams land
    closer together. Both are pure functions of (seed, request).
    """

    def __init__(
        self,
        seed: int = 0,
        embedding_dim: int = 32,
        drug_tokens: Sequence[str] = MOCK_DRUG_TOKENS,
        cell_tokens: Sequence[str] = MOCK_CELL_TOKENS,
        filler_tokens: Sequence[str] = MOCK_FILLER_TOKENS,
        n_projection_buckets: int = 4096,
    ) -> None:
        self.seed = seed
        self.embedding_dim = embedding_dim
        self.drug_tokens = tuple(drug_tokens)
        self.cell_tokens = tuple(cell_tokens)
        self.filler_tokens = tuple(filler_tokens)
        self._key = seed.to_bytes(8, "little", signed=True)
        self._n_buckets = n_projection_buckets
        rng = np.random.Generator(np.random.PCG64(abs(seed) * 2 + 1))
        self._projection = rng.standard_normal((n_projection_buckets, embedding_dim))

    # -- fill ------------------------------------------------------------

    def _score(self, kind: str, *parts: str) -> float:
        digest = hashlib.blake2b(
            "|".join((kind, *parts)).encode("utf-8"), key=self._key, digest_size=8
        ).digest()
        # Strictly positive so normalized probabilities stay in (0, 1].
        return int.from_bytes(digest, "little") / 2**64 + 1e-9

    def _pool_for_slot(self, slot_type: EntityType | None) -> tuple[str, ...]:
        if slot_type is EntityType.DRUG:
            return self.drug_tokens + self.filler_tokens
        if slot_type is EntityType.CELL_LINE:
            return self.cell_tokens + self.filler_tokens
        return self.drug_tokens + self.cell_tokens + self.filler_tokens

    def fill(self, request: FillRequest) -> FillResponse:
        request.validate()
        text = _normalize_text(request.text)
        response: FillResponse = []
        for slot_idx in range(request.num_slots()):
            allowed = request.allowed_tokens[slot_idx] if request.allowed_tokens else None
            if allowed is not None:
                pool = tuple(dict.fromkeys(allowed))
            else:
                slot_type = request.slot_types[slot_idx] if request.slot_types else None
                pool = self._pool_for_slot(slot_type)
            if not pool:
                response.append([])
                continue
            scores = {tok: self._score("fill", text, str(slot_idx), tok) for tok in pool}
            total = sum(scores.values())
            ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
            response.append(
                [TokenProb(token=t, prob=s / total) for t, s in ranked[: request.top_k]]
            )
        validate_fill_response(response, request.num_slots())
        return response

    # -- embed -----------------------------------------------------------

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(
            ("embed|" + gram).encode("utf-8"), key=self._key, digest_size=8
        ).digest()
        return int.from_bytes(digest, "little") % self._n_buckets

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        if len(texts) == 0:
            return np.zeros((0, self.embedding_dim))
        out = np.zeros((len(texts), self.embedding_dim))
        for row, text in enumerate(texts):
            s = _normalize_text(text)
            grams = [s[i : i + 3] for i in range(len(s) - 2)] if len(s) >= 3 else [s]
            counts: dict[int, int] = {}
            for g in grams:
                b = self._bucket(g)
                counts[b] = counts.get(b, 0) + 1
            for b, c in counts.items():
                out[row] += c * self._projection[b]
        return out

    # -- metadata --------------------------------------------------------

    def capabilities(self) -> Capabilities:
        return Capabilities(
            vocab_size=len(self.vocab()),
            dim=self.embedding_dim,
            server_side_restriction=True,
            model_id=f"mock-seed{self.seed}",
        )

    def vocab(self) -> frozenset[str]:
        return frozenset(self.drug_tokens + self.cell_tokens + self.filler_tokens)


class HttpGateway:
    """Client for a model server speaking the wire protocol above.

    Requests are idempotent (the endpoints are pure), so transport failures
    are retried with backoff up to ``max_retries`` attempts.
    """

    def __init__(self, config: GatewayConfig) -> None:
        import requests

        self.config = config
        self.base_url = config.base_url.rstrip("/")
        self._session = requests.Session()
        self._requests = requests
        self._capabilities: Capabilities | None = None
        self._vocab: frozenset[str] | None = None

    def _call(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = self.base_url + path
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                if method == "GET":
                    resp = self._session.get(url, timeout=self.config.timeout)
                else:
                    resp = self._session.post(url, json=payload, timeout=self.config.timeout)
                if resp.status_code >= 500:
                    raise GatewayTransportError(f"{url} -> HTTP {resp.status_code}")
                if resp.status_code >= 400:
                    raise GatewayProtocolError(f"{url} -> HTTP {resp.status_code}: {resp.text}")
                return resp.json()
            except (self._requests.ConnectionError, self._requests.Timeout, GatewayTransportError) as exc:
                last_exc = exc
                if attempt < self.config.max_retries:
                    time.sleep(min(2.0, 0.1 * 2**attempt))
        raise GatewayTransportError(f"gateway unreachable after {self.config.max_retries + 1} attempts: {last_exc}")

    def capabilities(self) -> Capabilities:
        if self._capabilities is None:
            raw = self._call("GET", "/capabilities")
            try:
                self._capabilities = Capabilities(
                    vocab_size=int(raw["vocab_size"]),
                    dim=int(raw["dim"]),
                    server_side_restriction=bool(raw["server_side_restriction"]),
                    model_id=str(raw["model_id"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise GatewayProtocolError(f"bad /capabilities payload: {raw!r}") from exc
            if self._capabilities.dim != self.config.embedding_dim:
                raise GatewayProtocolError(
                    f"server dim {self._capabilities.dim} != configured {self.config.embedding_dim}"
                )
        return self._capabilities

    def vocab(self) -> frozenset[str]:
        if self._vocab is None:
            if not self.config.vocab_file:
                raise ValidationError(
                    "warm-start filling against an HTTP gateway needs gateway.vocab_file "
                    "(one token per line, exported from the model tokenizer)"
                )
            with open(self.config.vocab_file, "r", encoding="utf-8") as fh:
                self._vocab = frozenset(line.strip() for line in fh if line.strip())
        return self._vocab

    def _parse_slots(self, raw: dict, num_slots: int) -> FillResponse:
        try:
            slots = [
                [TokenProb(token=str(e["token"]), prob=float(e["prob"])) for e in ranked]
                for ranked in raw["slots"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise GatewayProtocolError(f"bad /fill payload: {raw!r}") from exc
        validate_fill_response(slots, num_slots)
        return slots

    def fill(self, request: FillRequest) -> FillResponse:
        request.validate()
        n = request.num_slots()
        restrict_locally = (
            request.allowed_tokens is not None and not self.capabilities().server_side_restriction
        )
        payload = {
            "text": request.text,
            "allowed_tokens": None
            if restrict_locally or request.allowed_tokens is None
            else [list(a) if a is not None else None for a in request.allowed_tokens],
            "top_k": CLIENT_RESTRICTION_TOP_K if restrict_locally else request.top_k,
        }
        slots = self._parse_slots(self._call("POST", "/fill", payload), n)
        if restrict_locally:
            slots = _filter_and_renormalize(slots, request.allowed_tokens, request.top_k)
        return slots

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        dim = self.config.embedding_dim
        if len(texts) == 0:
            return np.zeros((0, dim))
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.config.batch_size):
            batch = list(texts[start : start + self.config.batch_size])
            raw = self._call("POST", "/embed", {"texts": batch, "pooling": "mean"})
            try:
                got_dim = int(raw["dim"])
                batch_vectors = [list(map(float, v)) for v in raw["vectors"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise GatewayProtocolError(f"bad /embed payload: {raw!r}") from exc
            if got_dim != dim:
                raise GatewayProtocolError(f"embed dim {got_dim} != configured {dim}")
            if len(batch_vectors) != len(batch) or any(len(v) != dim for v in batch_vectors):
                raise GatewayProtocolError("embed vector count/shape mismatch")
            vectors.extend(batch_vectors)
        out = np.asarray(vectors, dtype=float)
        if not np.all(np.isfinite(out)):
            raise GatewayProtocolError("embed vectors contain non-finite values")
        return out


def _filter_and_renormalize(
    slots: FillResponse,
    allowed_tokens: tuple[tuple[str, ...] | None, ...],
    top_k: int,
) -> FillResponse:
    """Client-side fallback restriction over the server's top candidates."""
    out: FillResponse = []
    for ranked, allowed in zip(slots, allowed_tokens):
        if allowed is None:
            out.append(ranked[:top_k])
            continue
        allowed_set = set(allowed)
        kept = [tp for tp in ranked if tp.token in allowed_set]
        total = sum(tp.prob for tp in kept)
        if total <= 0.0:
            out.append([])
            continue
        out.append([TokenProb(token=tp.token, prob=tp.prob / total) for tp in kept[:top_k]])
    return out


def build_gateway(config: GatewayConfig) -> Gateway:
    if config.backend == "mock":
        return MockGateway(seed=config.seed, embedding_dim=config.embedding_dim)
    if config.backend == "http":
        return HttpGateway(config)
    raise ValidationError(f"unknown gateway backend: {config.backend!r}")
