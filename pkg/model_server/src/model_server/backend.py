"""Masked-LM inference backends.

``TransformersBackend`` wraps any Hugging Face masked-LM checkpoint. Fill
restriction happens server-side: allowed strings that map to a single
tokenizer id keep their renormalized softmax mass, everything else is
excluded. Multi-token allowed strings cannot be produced by one mask and
are silently dropped from the allowed set.
"""

from __future__ import annotations

import logging
import threading
from typing import Protocol, Sequence

import numpy as np
import torch

logger = logging.getLogger(__name__)

MASK_TOKEN = "[MASK]"

# The abstracts-only biomedical BERT used for real-corpus runs.
DEFAULT_MODEL_ID = "microsoft/BiomedNLP-PubMedBERT-base-uncased-abstract"

FillSlots = list[list[tuple[str, float]]]


class MaskedLMBackend(Protocol):
    model_id: str

    def fill(
        self,
        text: str,
        allowed_tokens: Sequence[Sequence[str] | None] | None,
        top_k: int,
    ) -> FillSlots: ...

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...

    def vocab_size(self) -> int: ...

    def dim(self) -> int: ...


class TransformersBackend:
    """Backend over a transformers tokenizer + masked-LM model pair.

    Inference is serialized behind a lock; each text/slot is processed
    independently, so responses do not depend on request batching.
    """

    def __init__(self, tokenizer, model, model_id: str, max_batch_size: int = 16, device: str = "cpu") -> None:
        self.tokenizer = tokenizer
        self.model = model.to(device).eval()
        self.model_id = model_id
        self.max_batch_size = max_batch_size
        self.device = device
        self._lock = threading.Lock()

    @classmethod
    def from_pretrained(
        cls, model_id: str = DEFAULT_MODEL_ID, device: str = "cpu", max_batch_size: int = 16
    ) -> "TransformersBackend":
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        logger.info("loading %s", model_id)
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForMaskedLM.from_pretrained(model_id)
        return cls(tokenizer, model, model_id=model_id, max_batch_size=max_batch_size, device=device)

    def vocab_size(self) -> int:
        return len(self.tokenizer)

    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    def _single_token_id(self, surface: str) -> int | None:
        ids = self.tokenizer.encode(surface, add_special_tokens=False)
        return ids[0] if len(ids) == 1 else None

    def fill(
        self,
        text: str,
        allowed_tokens: Sequence[Sequence[str] | None] | None,
        top_k: int,
    ) -> FillSlots:
        encoded = self.tokenizer(text, return_tensors="pt", truncation=True).to(self.device)
        mask_id = self.tokenizer.mask_token_id
        positions = (encoded["input_ids"][0] == mask_id).nonzero().flatten().tolist()
        if not positions:
            raise ValueError(f"no {MASK_TOKEN} marker after tokenization: {text!r}")
        if allowed_tokens is not None and len(allowed_tokens) != len(positions):
            raise ValueError(
                f"allowed_tokens has {len(allowed_tokens)} entries for {len(positions)} mask slots"
            )
        with self._lock, torch.no_grad():
            logits = self.model(**encoded).logits[0]
        slots: FillSlots = []
        for slot_idx, pos in enumerate(positions):
            probs = torch.softmax(logits[pos].float(), dim=-1)
            allowed = allowed_tokens[slot_idx] if allowed_tokens is not None else None
            if allowed is not None:
                pairs: dict[str, float] = {}
                for surface in allowed:
                    token_id = self._single_token_id(surface)
                    if token_id is not None:
                        pairs[surface] = max(pairs.get(surface, 0.0), float(probs[token_id]))
                total = sum(pairs.values())
                if total <= 0.0:
                    slots.append([])
                    continue
                ranked = sorted(
                    ((tok, p / total) for tok, p in pairs.items()), key=lambda kv: (-kv[1], kv[0])
                )
                slots.append(ranked[:top_k])
            else:
                k = min(top_k, probs.shape[-1])
                values, indices = torch.topk(probs, k)
                tokens = self.tokenizer.convert_ids_to_tokens(indices.tolist())
                slots.append(
                    [(tok, float(p)) for tok, p in zip(tokens, values) if float(p) > 0.0]
                )
        return slots

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.max_batch_size):
            batch = list(texts[start : start + self.max_batch_size])
            encoded = self.tokenizer(
                batch, return_tensors="pt", padding=True, truncation=True
            ).to(self.device)
            with self._lock, torch.no_grad():
                hidden = self.model(
                    **encoded, output_hidden_states=True
                ).hidden_states[-1]
            mask = encoded["attention_mask"].unsqueeze(-1).float()
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
            vectors.extend(pooled.float().cpu().numpy().astype(np.float64).tolist())
        return vectors
