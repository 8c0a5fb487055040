"""Reading evaluation corpora and enumerating the text pairs to score.

The corpus format is line-oriented JSON shared with the evaluation
engine: one object per line with a "kind" of "doc", "gold", or "gen".
Texts are addressed globally by key — "doc::<doc>" for a document body,
"gold::<doc>::<user>" for a reader's expected summary, and
"gen::<model>::<doc>::<user>" for a model output — and those keys are
the ids under which exported distances and distributions are stored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import CorpusFormatError


def doc_key(doc_id: str) -> str:
    return f"doc::{doc_id}"


def gold_key(doc_id: str, user_id: str) -> str:
    return f"gold::{doc_id}::{user_id}"


def gen_key(model_id: str, doc_id: str, user_id: str) -> str:
    return f"gen::{model_id}::{doc_id}::{user_id}"


@dataclass
class ExportCorpus:
    """Every corpus text under its global key, plus the record layout
    needed to enumerate scoring pairs."""

    texts: dict[str, str] = field(default_factory=dict)
    documents: dict[str, str] = field(default_factory=dict)
    golds: dict[tuple[str, str], str] = field(default_factory=dict)
    generated: dict[tuple[str, str, str], str] = field(default_factory=dict)

    def users_for(self, doc_id: str) -> tuple[str, ...]:
        return tuple(sorted(u for d, u in self.golds if d == doc_id))

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(sorted({m for m, _, _ in self.generated}))


def _require(record: dict, fields: tuple[str, ...], where: str) -> list:
    values = []
    for name in fields:
        if name not in record:
            raise CorpusFormatError(f"{where}: missing field {name!r}")
        values.append(record[name])
    return values


def load_export_corpus(path) -> ExportCorpus:
    """Parse and validate a corpus file.

    Rejects invalid JSON, unknown kinds, missing fields, empty texts,
    duplicate records, and dangling references, each with the offending
    line number.
    """
    corpus = ExportCorpus()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{where}: invalid JSON ({exc})")
            kind = record.get("kind")
            if kind == "doc":
                doc_id, text = _require(record, ("doc_id", "text"), where)
                key = doc_key(doc_id)
                if doc_id in corpus.documents:
                    raise CorpusFormatError(
                        f"{where}: duplicate document {doc_id!r}")
                corpus.documents[doc_id] = key
            elif kind == "gold":
                doc_id, user_id, text = _require(
                    record, ("doc_id", "user_id", "text"), where)
                key = gold_key(doc_id, user_id)
                if (doc_id, user_id) in corpus.golds:
                    raise CorpusFormatError(
                        f"{where}: duplicate gold for "
                        f"({doc_id!r}, {user_id!r})")
                corpus.golds[(doc_id, user_id)] = key
            elif kind == "gen":
                model_id, doc_id, user_id, text = _require(
                    record, ("model_id", "doc_id", "user_id", "text"), where)
                key = gen_key(model_id, doc_id, user_id)
                if (model_id, doc_id, user_id) in corpus.generated:
                    raise CorpusFormatError(
                        f"{where}: duplicate summary for "
                        f"({model_id!r}, {doc_id!r}, {user_id!r})")
                corpus.generated[(model_id, doc_id, user_id)] = key
            else:
                raise CorpusFormatError(
                    f"{where}: unknown record kind {kind!r}")
            if not isinstance(text, str) or not text.strip():
                raise CorpusFormatError(f"{where}: empty text")
            corpus.texts[key] = text
    for doc_id, user_id in corpus.golds:
        if doc_id not in corpus.documents:
            raise CorpusFormatError(
                f"{path}: gold for ({doc_id!r}, {user_id!r}) references "
                f"an unknown document")
    for model_id, doc_id, user_id in corpus.generated:
        if (doc_id, user_id) not in corpus.golds:
            raise CorpusFormatError(
                f"{path}: summary by {model_id!r} for "
                f"({doc_id!r}, {user_id!r}) has no gold reference")
    if not corpus.texts:
        raise CorpusFormatError(f"{path}: corpus contains no text")
    return corpus


def needed_pairs(corpus: ExportCorpus) -> list[tuple[str, str]]:
    """Every unordered text pair a scoring pass can consult.

    Per document: gold-vs-gold between readers, summary-vs-summary per
    model between readers, every gold and summary against the document
    body, and each summary against its own gold. Returned sorted and
    de-duplicated, each pair itself sorted.
    """
    pairs: set[tuple[str, str]] = set()

    def add(key_a: str, key_b: str):
        if key_a != key_b:
            pairs.add((min(key_a, key_b), max(key_a, key_b)))

    by_model_doc: dict[tuple[str, str], list[str]] = {}
    for (model_id, doc_id, user_id) in corpus.generated:
        by_model_doc.setdefault((model_id, doc_id), []).append(user_id)

    for doc_id, dkey in corpus.documents.items():
        users = corpus.users_for(doc_id)
        gold_keys = {u: corpus.golds[(doc_id, u)] for u in users}
        for i, u in enumerate(users):
            add(gold_keys[u], dkey)
            for v in users[i + 1:]:
                add(gold_keys[u], gold_keys[v])
        for model_id in corpus.model_ids:
            covered = sorted(by_model_doc.get((model_id, doc_id), []))
            gen_keys = {u: corpus.generated[(model_id, doc_id, u)]
                        for u in covered}
            for i, u in enumerate(covered):
                add(gen_keys[u], dkey)
                if u in gold_keys:
                    add(gen_keys[u], gold_keys[u])
                for v in covered[i + 1:]:
                    add(gen_keys[u], gen_keys[v])
    return sorted(pairs)
