"""Shared fixtures: a tiny deterministic BERT checkpoint on disk and a
20-text evaluation corpus whose words all sit in its vocabulary."""
from __future__ import annotations

import json
import os
from types import SimpleNamespace

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
WORDS = [
    "market", "stocks", "rally", "early", "traders", "cheer", "results",
    "rain", "storm", "floods", "coast", "city", "homes", "crews",
    "respond", "team", "won", "final", "match", "fans", "crowd",
    "study", "finds", "coffee", "helps", "workers", "focus",
]

DOCS = {
    "d0": "market stocks rally early traders cheer results",
    "d1": "rain storm floods coast city homes crews respond",
    "d2": "team won final match fans crowd cheer",
    "d3": "study finds coffee helps workers focus",
}
GOLDS = {
    ("d0", "u1"): "market stocks rally early",
    ("d0", "u2"): "traders cheer results market",
    ("d1", "u1"): "rain storm floods coast",
    ("d1", "u2"): "city homes crews respond",
    ("d2", "u1"): "team won final match",
    ("d2", "u2"): "fans crowd cheer team",
    ("d3", "u1"): "study finds coffee helps",
    ("d3", "u2"): "coffee helps workers focus",
}
GENS = {
    ("m0", "d0", "u1"): "stocks rally early market",
    ("m0", "d0", "u2"): "traders cheer results",
    ("m0", "d1", "u1"): "rain storm floods coast",
    ("m0", "d1", "u2"): "crews respond city homes",
    ("m0", "d2", "u1"): "won final match team",
    ("m0", "d2", "u2"): "fans crowd cheer",
    ("m0", "d3", "u1"): "study finds coffee",
    ("m0", "d3", "u2"): "workers focus coffee helps",
}


def write_corpus_jsonl(path, docs, golds, gens):
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(docs):
            fh.write(json.dumps({"kind": "doc", "doc_id": doc_id,
                                 "text": docs[doc_id]}) + "\n")
        for doc_id, user_id in sorted(golds):
            fh.write(json.dumps({
                "kind": "gold", "doc_id": doc_id, "user_id": user_id,
                "text": golds[(doc_id, user_id)]}) + "\n")
        for model_id, doc_id, user_id in sorted(gens):
            fh.write(json.dumps({
                "kind": "gen", "model_id": model_id, "doc_id": doc_id,
                "user_id": user_id,
                "text": gens[(model_id, doc_id, user_id)]}) + "\n")


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> str:
    """A randomly initialised but fixed-seed BERT saved to disk, with a
    vocabulary covering every fixture word."""
    import torch
    import transformers
    from transformers import BertConfig, BertForMaskedLM, BertTokenizer

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()
    directory = tmp_path_factory.mktemp("tiny-bert")
    vocab_path = directory / "vocab.txt"
    vocab_path.write_text("\n".join(SPECIAL_TOKENS + WORDS) + "\n",
                          encoding="utf-8")
    BertTokenizer(str(vocab_path)).save_pretrained(str(directory))
    config = BertConfig(
        vocab_size=len(SPECIAL_TOKENS) + len(WORDS),
        hidden_size=32, num_hidden_layers=2, num_attention_heads=4,
        intermediate_size=64, max_position_embeddings=64,
    )
    torch.manual_seed(20250815)
    BertForMaskedLM(config).save_pretrained(str(directory))
    return str(directory)


@pytest.fixture(scope="session")
def corpus_info(tmp_path_factory) -> SimpleNamespace:
    """The 20-text fixture corpus on disk, plus the bits tests assert
    about: all keys, the texts, and the identical gold/summary pair."""
    from perseval_embedder.corpus import doc_key, gen_key, gold_key

    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    write_corpus_jsonl(path, DOCS, GOLDS, GENS)
    texts = {doc_key(d): t for d, t in DOCS.items()}
    texts.update({gold_key(d, u): t for (d, u), t in GOLDS.items()})
    texts.update({gen_key(m, d, u): t for (m, d, u), t in GENS.items()})
    return SimpleNamespace(
        path=str(path),
        texts=texts,
        identical_pair=(gold_key("d1", "u1"), gen_key("m0", "d1", "u1")),
        distinct_pair=(gold_key("d0", "u1"), gold_key("d0", "u2")),
        unneeded_pair=(doc_key("d0"), doc_key("d3")),
    )
