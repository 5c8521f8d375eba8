"""The pinned conformance model: a tiny deterministic BERT built offline.

Weights come from a fixed-seed PCG64 stream over name-sorted parameters and
the wordpiece vocabulary is constructed in code, so golden responses stay
valid on any machine without downloading a checkpoint. The reported model
id pins both the seed and the architecture.
"""

from __future__ import annotations

import numpy as np
import torch

from .backend import TransformersBackend

TINY_SEED = 1234

TINY_VOCAB = (
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "cisplatin", "camptothecin", "vinorelbine", "gefitinib", "paclitaxel",
    "hela", "mcf7", "a549", "k562", "skbr3",
    "alpha", "beta", "apoptosis", "treatment", "synergy", "synergistic",
    "and", "are", "in", "on", "cells", "cell", "line", "with", "works",
    "the", "of", ",", ".", "##s", "##ic",
)


def build_tiny_tokenizer():
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import TemplateProcessing
    from transformers import PreTrainedTokenizerFast

    vocab = {w: i for i, w in enumerate(TINY_VOCAB)}
    tok = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    tok.normalizer = BertNormalizer(lowercase=True)
    tok.pre_tokenizer = BertPreTokenizer()
    tok.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )


def build_tiny_backend(seed: int = TINY_SEED) -> TransformersBackend:
    from transformers import BertConfig, BertForMaskedLM

    tokenizer = build_tiny_tokenizer()
    config = BertConfig(
        vocab_size=len(TINY_VOCAB),
        hidden_size=16,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    model = BertForMaskedLM(config)
    rng = np.random.Generator(np.random.PCG64(seed))
    with torch.no_grad():
        for name, param in sorted(model.named_parameters()):
            values = rng.standard_normal(tuple(param.shape)) * 0.05
            param.copy_(torch.from_numpy(values).to(param.dtype))
    return TransformersBackend(
        tokenizer, model, model_id=f"tiny-bert-seed{seed}", max_batch_size=4
    )
