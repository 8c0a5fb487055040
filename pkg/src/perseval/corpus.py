"""Corpus model and I/O.

An evaluation corpus ties together documents, per-user gold references,
and per-model generated summaries. Corpora are read from and written to
a line-oriented JSON format; a rated summary pool (annotator ratings of
policy outputs) can be folded into a surrogate corpus for indirect
evaluation; and seed-deterministic document resamples support the
stability analysis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateKeyError,
    ParseError,
    ReferentialError,
)


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class GoldReference:
    doc_id: str
    user_id: str
    text: str


@dataclass(frozen=True)
class GeneratedSummary:
    model_id: str
    doc_id: str
    user_id: str
    text: str


def doc_key(doc_id: str) -> str:
    """Canonical pair-space id of a document body."""
    return f"doc::{doc_id}"


def gold_key(doc_id: str, user_id: str) -> str:
    """Canonical pair-space id of a user's gold reference."""
    return f"gold::{doc_id}::{user_id}"


def gen_key(model_id: str, doc_id: str, user_id: str) -> str:
    """Canonical pair-space id of a model's generated summary."""
    return f"gen::{model_id}::{doc_id}::{user_id}"


class EvaluationCorpus:
    """Documents, gold references, and generated summaries, cross-checked.

    Construction validates referential integrity: every gold points at a
    known document, every generated summary at a known gold, and every
    document carries at least one gold. Documents with fewer than two
    gold users cannot contribute to responsiveness scores; they are kept
    but flagged.
    """

    def __init__(self, documents, golds, generated):
        self.documents: dict[str, Document] = {}
        self.golds: dict[tuple[str, str], GoldReference] = {}
        self.generated: dict[tuple[str, str, str], GeneratedSummary] = {}
        for d in documents:
            if d.doc_id in self.documents:
                raise DuplicateKeyError(f"duplicate document {d.doc_id!r}")
            if not d.text.strip():
                raise ParseError(f"document {d.doc_id!r} has empty text")
            self.documents[d.doc_id] = d
        for g in golds:
            key = (g.doc_id, g.user_id)
            if key in self.golds:
                raise DuplicateKeyError(
                    f"duplicate gold for doc {g.doc_id!r} user {g.user_id!r}"
                )
            if not g.text.strip():
                raise ParseError(
                    f"gold for doc {g.doc_id!r} user {g.user_id!r} has empty text"
                )
            self.golds[key] = g
        for s in generated:
            key = (s.model_id, s.doc_id, s.user_id)
            if key in self.generated:
                raise DuplicateKeyError(
                    f"duplicate generated summary {key!r}"
                )
            if not s.text.strip():
                raise ParseError(f"generated summary {key!r} has empty text")
            self.generated[key] = s
        self._validate_references()
        by_doc: dict[str, list[str]] = {}
        for doc_id, user_id in self.golds:
            by_doc.setdefault(doc_id, []).append(user_id)
        self._users_by_doc: dict[str, tuple[str, ...]] = {
            d: tuple(sorted(users)) for d, users in by_doc.items()
        }

    def _validate_references(self):
        for (doc_id, user_id) in self.golds:
            if doc_id not in self.documents:
                raise ReferentialError(
                    f"gold references unknown document {doc_id!r}"
                )
        for (model_id, doc_id, user_id) in self.generated:
            if (doc_id, user_id) not in self.golds:
                raise ReferentialError(
                    f"generated summary for model {model_id!r} references "
                    f"doc {doc_id!r} user {user_id!r} with no gold"
                )
        gold_docs = {d for d, _ in self.golds}
        orphans = sorted(set(self.documents) - gold_docs)
        if orphans:
            raise ReferentialError(
                f"documents without any gold reference: {orphans}"
            )

    # -- views -------------------------------------------------------

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.documents))

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(sorted({m for m, _, _ in self.generated}))

    def users_for(self, doc_id: str) -> tuple[str, ...]:
        return self._users_by_doc.get(doc_id, ())

    @property
    def scorable_doc_ids(self) -> tuple[str, ...]:
        """Documents with at least two gold users."""
        return tuple(
            d for d in self.doc_ids if len(self.users_for(d)) >= 2
        )

    @property
    def flagged_doc_ids(self) -> tuple[str, ...]:
        """Documents kept but unusable for responsiveness (single user)."""
        return tuple(
            d for d in self.doc_ids if len(self.users_for(d)) < 2
        )

    def __eq__(self, other):
        return (
            isinstance(other, EvaluationCorpus)
            and self.documents == other.documents
            and self.golds == other.golds
            and self.generated == other.generated
        )


def load_corpus(path) -> EvaluationCorpus:
    """Read an evaluation corpus from line-oriented JSON.

    Each line is an object with a "kind" of "doc", "gold", or "gen".
    Parse problems report the offending line number.
    """
    documents, golds, generated = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc})")
            kind = rec.get("kind")
            try:
                if kind == "doc":
                    documents.append(Document(rec["doc_id"], rec["text"]))
                elif kind == "gold":
                    golds.append(
                        GoldReference(rec["doc_id"], rec["user_id"], rec["text"])
                    )
                elif kind == "gen":
                    generated.append(
                        GeneratedSummary(
                            rec["model_id"], rec["doc_id"], rec["user_id"],
                            rec["text"],
                        )
                    )
                else:
                    raise ParseError(
                        f"{path}:{lineno}: unknown record kind {kind!r}"
                    )
            except KeyError as exc:
                raise ParseError(
                    f"{path}:{lineno}: record of kind {kind!r} "
                    f"is missing field {exc.args[0]!r}"
                )
    return EvaluationCorpus(documents, golds, generated)


def save_corpus(corpus: EvaluationCorpus, path) -> None:
    """Write a corpus in canonical (sorted) line order.

    Saving and reloading yields an equal corpus.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(corpus.documents):
            d = corpus.documents[doc_id]
            fh.write(json.dumps(
                {"kind": "doc", "doc_id": d.doc_id, "text": d.text},
                sort_keys=True) + "\n")
        for key in sorted(corpus.golds):
            g = corpus.golds[key]
            fh.write(json.dumps(
                {"kind": "gold", "doc_id": g.doc_id, "user_id": g.user_id,
                 "text": g.text}, sort_keys=True) + "\n")
        for key in sorted(corpus.generated):
            s = corpus.generated[key]
            fh.write(json.dumps(
                {"kind": "gen", "model_id": s.model_id, "doc_id": s.doc_id,
                 "user_id": s.user_id, "text": s.text}, sort_keys=True) + "\n")


# -- rated summary pools ----------------------------------------------


@dataclass(frozen=True)
class RatedSummary:
    annotator_id: str
    doc_id: str
    policy_id: str
    text: str
    rating: int


@dataclass
class RatedSummaryPool:
    """Annotator ratings of policy summaries on an ordinal scale.

    ``doc_texts`` optionally carries document bodies; documents not
    listed there fall back to a deterministic concatenation of their
    rated summaries when a surrogate corpus is built.
    """

    records: list[RatedSummary]
    r_max: int
    doc_texts: dict[str, str] = field(default_factory=dict)


def load_rated_pool(path) -> RatedSummaryPool:
    """Read a rated pool from line-oriented JSON.

    Requires one {"kind": "meta", "r_max": ...} line; accepts optional
    {"kind": "doc"} lines carrying document bodies.
    """
    records: list[RatedSummary] = []
    doc_texts: dict[str, str] = {}
    r_max = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc})")
            kind = rec.get("kind")
            try:
                if kind == "meta":
                    if r_max is not None:
                        raise DuplicateKeyError(
                            f"{path}:{lineno}: repeated meta record"
                        )
                    r_max = int(rec["r_max"])
                elif kind == "rated":
                    records.append(RatedSummary(
                        rec["annotator_id"], rec["doc_id"], rec["policy_id"],
                        rec["text"], int(rec["rating"]),
                    ))
                elif kind == "doc":
                    if rec["doc_id"] in doc_texts:
                        raise DuplicateKeyError(
                            f"{path}:{lineno}: duplicate doc {rec['doc_id']!r}"
                        )
                    doc_texts[rec["doc_id"]] = rec["text"]
                else:
                    raise ParseError(
                        f"{path}:{lineno}: unknown record kind {kind!r}"
                    )
            except KeyError as exc:
                raise ParseError(
                    f"{path}:{lineno}: record of kind {kind!r} "
                    f"is missing field {exc.args[0]!r}"
                )
    if r_max is None:
        raise ParseError(f"{path}: missing meta record with r_max")
    seen = set()
    for r in records:
        key = (r.annotator_id, r.doc_id, r.policy_id)
        if key in seen:
            raise DuplicateKeyError(f"duplicate rating for {key!r}")
        seen.add(key)
        if not (1 <= r.rating <= r_max):
            raise ParseError(
                f"rating {r.rating} for {key!r} outside [1, {r_max}]"
            )
    return RatedSummaryPool(records, r_max, doc_texts)


def build_surrogates(pool: RatedSummaryPool, threshold: int = 6):
    """Fold a rated pool into a surrogate evaluation corpus.

    For each (annotator, document) group, the summaries the annotator
    rated strictly above ``threshold`` are concatenated (sorted by
    policy id) into that annotator's gold reference; each policy summary
    with rating r becomes a generated summary repeated k + (r_max - r)
    times, where k is the group's count of above-threshold summaries.
    Groups with k = 0 are dropped with a warning. Annotators take the
    role of users and policies the role of models.

    Returns (corpus, warnings).
    """
    groups: dict[tuple[str, str], list[RatedSummary]] = {}
    for rec in pool.records:
        groups.setdefault((rec.annotator_id, rec.doc_id), []).append(rec)

    warnings: list[str] = []
    golds: list[GoldReference] = []
    generated: list[GeneratedSummary] = []
    used_docs: set[str] = set()
    for (annotator_id, doc_id) in sorted(groups):
        recs = sorted(groups[(annotator_id, doc_id)],
                      key=lambda r: r.policy_id)
        liked = [r for r in recs if r.rating > threshold]
        k = len(liked)
        if k == 0:
            warnings.append(
                f"annotator {annotator_id!r} rated nothing above "
                f"{threshold} for doc {doc_id!r}; pair dropped"
            )
            continue
        used_docs.add(doc_id)
        combined = " ".join(r.text for r in liked)
        golds.append(GoldReference(doc_id, annotator_id, combined))
        for r in recs:
            reps = k + (pool.r_max - r.rating)
            generated.append(GeneratedSummary(
                r.policy_id, doc_id, annotator_id,
                " ".join([r.text] * reps),
            ))

    if not used_docs:
        raise ReferentialError(
            "rated pool produced no surrogate pairs: every "
            "(annotator, document) group was dropped"
        )
    documents: list[Document] = []
    for doc_id in sorted(used_docs):
        text = pool.doc_texts.get(doc_id)
        if text is None:
            recs = sorted(
                (r for r in pool.records if r.doc_id == doc_id),
                key=lambda r: (r.policy_id, r.annotator_id),
            )
            parts, seen_texts = [], set()
            for r in recs:
                if r.text not in seen_texts:
                    parts.append(r.text)
                    seen_texts.add(r.text)
            text = " ".join(parts)
        documents.append(Document(doc_id, text))
    return EvaluationCorpus(documents, golds, generated), warnings


# -- document resampling ----------------------------------------------


@dataclass(frozen=True)
class Sample:
    """A multiset of document ids drawn from a corpus.

    Repeated documents contribute repeatedly to any average taken over
    the sample.
    """

    corpus: EvaluationCorpus
    doc_ids: tuple[str, ...]


@dataclass(frozen=True)
class SampleCollections:
    corpus: EvaluationCorpus
    fractions: tuple[float, ...]
    sets_per_fraction: int
    seed: int
    samples: dict[float, tuple[Sample, ...]]

    def full_sample(self) -> Sample:
        return Sample(self.corpus, self.corpus.doc_ids)


def sample_collections(corpus: EvaluationCorpus, fractions,
                       sets_per_fraction: int, seed: int) -> SampleCollections:
    """Draw document resamples, with replacement, for each fraction.

    Each sub-corpus has round(fraction * |D|) documents (half-up),
    drawn at document granularity from the full sorted id list. The
    draw is fully determined by the seed.
    """
    doc_ids = corpus.doc_ids
    if not doc_ids:
        raise ReferentialError("corpus has no documents to sample")
    rng = np.random.default_rng(seed)
    samples: dict[float, tuple[Sample, ...]] = {}
    for fraction in fractions:
        if not (0.0 < fraction <= 1.0):
            raise ValueError(f"fraction {fraction} outside (0, 1]")
        size = int(math.floor(fraction * len(doc_ids) + 0.5))
        size = max(size, 1)
        drawn = []
        for _ in range(sets_per_fraction):
            idx = rng.integers(0, len(doc_ids), size=size)
            drawn.append(Sample(corpus, tuple(doc_ids[i] for i in idx)))
        samples[fraction] = tuple(drawn)
    return SampleCollections(
        corpus, tuple(fractions), sets_per_fraction, seed, samples,
    )
