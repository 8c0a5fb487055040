"""Shared fixtures and corpus builders."""
from __future__ import annotations

import json

import numpy as np
import pytest

from perseval.corpus import (
    Document,
    EvaluationCorpus,
    GeneratedSummary,
    GoldReference,
)


def make_corpus(doc_texts: dict, gold_texts: dict, gen_texts: dict
                ) -> EvaluationCorpus:
    """Build a corpus from plain dicts.

    doc_texts: {doc_id: text}; gold_texts: {(doc, user): text};
    gen_texts: {(model, doc, user): text}.
    """
    return EvaluationCorpus(
        [Document(d, t) for d, t in doc_texts.items()],
        [GoldReference(d, u, t) for (d, u), t in gold_texts.items()],
        [GeneratedSummary(m, d, u, t) for (m, d, u), t in gen_texts.items()],
    )


def corpus_to_jsonl(corpus: EvaluationCorpus, path):
    with open(path, "w", encoding="utf-8") as fh:
        for d in sorted(corpus.documents):
            doc = corpus.documents[d]
            fh.write(json.dumps({"kind": "doc", "doc_id": doc.doc_id,
                                 "text": doc.text}) + "\n")
        for key in sorted(corpus.golds):
            g = corpus.golds[key]
            fh.write(json.dumps({"kind": "gold", "doc_id": g.doc_id,
                                 "user_id": g.user_id,
                                 "text": g.text}) + "\n")
        for key in sorted(corpus.generated):
            s = corpus.generated[key]
            fh.write(json.dumps({"kind": "gen", "model_id": s.model_id,
                                 "doc_id": s.doc_id, "user_id": s.user_id,
                                 "text": s.text}) + "\n")


def perfect_copy_corpus(n_docs: int = 2, n_users: int = 3,
                        model_id: str = "copycat") -> EvaluationCorpus:
    """Every generated summary equals its gold reference exactly."""
    docs = {}
    golds = {}
    gens = {}
    for i in range(n_docs):
        doc_id = f"d{i}"
        words = " ".join(f"w{i}_{k}" for k in range(12))
        docs[doc_id] = f"article {i} about {words}"
        for j in range(n_users):
            text = f"w{i}_{j} w{i}_{j + 1} summary for reader {j}"
            golds[(doc_id, f"u{j}")] = text
            gens[(model_id, doc_id, f"u{j}")] = text
    return make_corpus(docs, golds, gens)


def paradox_corpus() -> EvaluationCorpus:
    """Two models whose insensitivity and discounted rankings disagree.

    Model "drifter" mirrors the gold divergence structure perfectly in
    a vocabulary disjoint from the golds: maximal responsiveness, worst
    possible accuracy. Model "stayer" outputs one gold verbatim and one
    lightly corrupted gold: slightly imperfect responsiveness, high
    accuracy. Insensitivity alone prefers the drifter; the discounted
    score prefers the stayer.
    """
    gold_1 = "w1 w2 w3 w4"
    gold_2 = "w1 w2 w5 w6"
    doc = "w1 w2 w3 w4 w5 w6 x1 x2 x3 x4 x5 x6"
    return make_corpus(
        {"d0": doc},
        {("d0", "u1"): gold_1, ("d0", "u2"): gold_2},
        {
            ("drifter", "d0", "u1"): "x1 x2 x3 x4",
            ("drifter", "d0", "u2"): "x1 x2 x5 x6",
            ("stayer", "d0", "u1"): gold_1,
            ("stayer", "d0", "u2"): "w1 w2 w5 z1",
        },
    )


def random_corpus(rng: np.random.Generator, n_models: int = 2,
                  vocab_size: int = 30) -> EvaluationCorpus:
    """Small random corpus for brute-force comparison.

    Up to 3 documents and 4 users per document; every text is 5-20
    tokens drawn from a shared vocabulary. At least one document gets
    two users so the corpus is scorable.
    """
    vocab = [f"t{i}" for i in range(vocab_size)]

    def text():
        n = int(rng.integers(5, 21))
        return " ".join(vocab[int(i)]
                        for i in rng.integers(0, vocab_size, size=n))

    n_docs = int(rng.integers(1, 4))
    docs = {}
    golds = {}
    gens = {}
    models = [f"m{i}" for i in range(n_models)]
    for i in range(n_docs):
        doc_id = f"d{i}"
        docs[doc_id] = text()
        n_users = int(rng.integers(1, 5)) if i > 0 else int(rng.integers(2, 5))
        for j in range(n_users):
            user_id = f"u{j}"
            golds[(doc_id, user_id)] = text()
            for model in models:
                gens[(model, doc_id, user_id)] = text()
    return make_corpus(docs, golds, gens)


def tensors_as_lists(tensors):
    """Raw divergence values as plain nested lists for the oracles."""
    return (
        tensors.uu.tolist(),
        tensors.ss.tolist(),
        tensors.ud.tolist(),
        tensors.sd.tolist(),
        tensors.su.tolist(),
    )


@pytest.fixture
def tiny_corpus() -> EvaluationCorpus:
    return make_corpus(
        {"d0": "the quick brown fox jumps over the lazy dog by the river"},
        {
            ("d0", "u1"): "quick fox jumps over dog",
            ("d0", "u2"): "lazy dog rests by the river",
        },
        {
            ("alpha", "d0", "u1"): "the fox jumps over the dog",
            ("alpha", "d0", "u2"): "the dog rests by the river bank",
            ("beta", "d0", "u1"): "a generic summary of the text",
            ("beta", "d0", "u2"): "a generic summary of the text",
        },
    )
