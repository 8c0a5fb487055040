"""The two export pipelines: pairwise distance matrices from contextual
embeddings, and averaged masked-LM token distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import load_export_corpus, needed_pairs
from .encoder import MaskedDistributionModel, TextEncoder
from .files import write_distributions, write_matrix
from .matching import pair_distance

MODES = ("bscore_matrix", "infolm_distributions")


@dataclass(frozen=True)
class ExportJob:
    """Everything one export run needs.

    batch_size counts texts per forward pass for embeddings and masked
    copies per forward pass for distributions. top_k bounds each
    exported distribution's support (highest-mass entries kept and
    renormalised); form picks the matrix serialization.
    """

    corpus_path: str
    mode: str
    model_name: str
    out_path: str
    batch_size: int = 8
    top_k: int = 1024
    form: str = "binary"
    device: str = "cpu"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(
                f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.form not in ("binary", "json"):
            raise ValueError(f"unknown matrix form {self.form!r}")


def export_bscore_matrix(job: ExportJob) -> tuple[list[str], np.ndarray]:
    """Write the distance matrix over every corpus text.

    Only the pairs a scoring pass can consult are computed; the rest of
    the grid stays at zero. Each computed distance is the mean of the
    two directed greedy-match scores, so the matrix is symmetric with a
    zero diagonal by construction.
    """
    corpus = load_export_corpus(job.corpus_path)
    ids = sorted(corpus.texts)
    index = {key: i for i, key in enumerate(ids)}
    encoder = TextEncoder(job.model_name, job.device, job.batch_size)
    embedded = dict(zip(ids, encoder.embed([corpus.texts[k] for k in ids])))
    values = np.zeros((len(ids), len(ids)))
    for key_a, key_b in needed_pairs(corpus):
        distance = pair_distance(embedded[key_a], embedded[key_b])
        values[index[key_a], index[key_b]] = distance
        values[index[key_b], index[key_a]] = distance
    write_matrix(ids, values, job.out_path, metric="bscore", form=job.form)
    return ids, values


def _idf_weights(token_lists: dict[str, list[int]]) -> dict[int, float]:
    """Smoothed inverse document frequency of every token id, counting
    each corpus text as one document."""
    n_texts = len(token_lists)
    frequency: dict[int, int] = {}
    for tokens in token_lists.values():
        for token_id in set(tokens):
            frequency[token_id] = frequency.get(token_id, 0) + 1
    return {
        token_id: math.log((n_texts + 1.0) / (count + 1.0)) + 1.0
        for token_id, count in frequency.items()
    }


def export_infolm_distributions(job: ExportJob) -> dict[str, tuple]:
    """Write one averaged masked-token distribution per corpus text.

    Each content position is masked in turn; the resulting vocabulary
    distributions are averaged with weights proportional to the masked
    token's corpus-level inverse document frequency, truncated to the
    top_k highest-mass entries, and renormalised.
    """
    corpus = load_export_corpus(job.corpus_path)
    model = MaskedDistributionModel(job.model_name, job.device,
                                    job.batch_size)
    keys = sorted(corpus.texts)
    masked = {key: model.masked_rows(corpus.texts[key]) for key in keys}
    idf = _idf_weights({key: ids for key, (ids, _) in masked.items()})
    out: dict[str, tuple] = {}
    for key in keys:
        token_ids, rows = masked[key]
        gamma = np.asarray([idf[t] for t in token_ids], dtype=float)
        gamma /= gamma.sum()
        averaged = gamma @ rows
        if len(averaged) > job.top_k:
            cut = np.argpartition(averaged, -job.top_k)[-job.top_k:]
            support = np.sort(cut)
        else:
            support = np.arange(len(averaged))
        mass = averaged[support]
        mass = mass / mass.sum()
        out[key] = ([int(s) for s in support], [float(m) for m in mass])
    write_distributions(out, job.out_path)
    return out


def run_export(job: ExportJob) -> str:
    """Dispatch on mode; returns a one-line summary for the CLI."""
    if job.mode == "bscore_matrix":
        ids, _ = export_bscore_matrix(job)
        pair_count = len(needed_pairs(load_export_corpus(job.corpus_path)))
        return (f"wrote distance matrix over {len(ids)} text(s), "
                f"{pair_count} scored pair(s): {job.out_path}")
    distributions = export_infolm_distributions(job)
    return (f"wrote {len(distributions)} token distribution(s): "
            f"{job.out_path}")
