"""Scoring engine.

Per document, a model is judged on whether its summaries diverge across
users in proportion to how the users' own gold references diverge
(degress, the degree of responsiveness; egises is its complement, the
degree of insensitivity). Responsiveness alone rewards models that
drift arbitrarily far from every reference, so it is discounted by an
effective-dissimilarity penalty built from two logistic penalties: adp
for the document-level best-case distance between generated and gold
summaries, acp for each summary's inconsistency with the model's usual
behaviour on that document. The discounted score is perseval.

System-level values average per-document values, which in turn average
per-user values; documents with fewer than two gold users are excluded
from every denominator and reported as skipped.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import EvaluationCorpus, doc_key, gen_key, gold_key
from .errors import MissingSummaryError, UnscorableSampleError
from .metrics import Metric, TextRef

MEASURES = ("degress", "egises", "adp", "acp", "edp", "perseval", "p_acc")


@dataclass(frozen=True)
class PenaltyConfig:
    """Knobs of the penalty family.

    alpha shapes the effective-dissimilarity decay (>= 3), beta its
    input scaling (>= 1), gamma the accuracy/consistency penalty
    steepness (>= 4), epsilon guards denominators.
    """

    alpha: float = 3.0
    beta: float = 1.7
    gamma: float = 4.0
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.alpha < 3.0:
            raise ValueError(f"alpha must be >= 3, got {self.alpha}")
        if self.beta < 1.0:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.gamma < 4.0:
            raise ValueError(f"gamma must be >= 4, got {self.gamma}")
        if not 0.0 < self.epsilon <= 1e-3:
            raise ValueError(
                f"epsilon must be a small positive value, got {self.epsilon}"
            )


@dataclass(frozen=True)
class PAccConfig:
    """Accuracy-discount knobs: penalty weight and input scaling."""

    alpha_pacc: float = 0.5
    beta_pacc: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_pacc <= 1.0:
            raise ValueError(
                f"alpha_pacc must lie in [0, 1], got {self.alpha_pacc}"
            )
        if not 0.0 < self.beta_pacc <= 1.0:
            raise ValueError(
                f"beta_pacc must lie in (0, 1], got {self.beta_pacc}"
            )


@dataclass(frozen=True)
class DivergenceTensors:
    """All pairwise distances the scores need for one (model, document).

    Indexed by the document's sorted user list: uu[j][k] is the distance
    between users j's and k's gold references, ss[j][k] between the
    model's summaries for them, ud/sd the gold/summary distance to the
    document body, su each summary's distance to its own gold.
    """

    doc_id: str
    users: tuple[str, ...]
    uu: np.ndarray
    ss: np.ndarray
    ud: np.ndarray
    sd: np.ndarray
    su: np.ndarray


def divergence_tensors(corpus: EvaluationCorpus, model_id: str,
                       metric: Metric, doc_id: str) -> DivergenceTensors:
    """Compute one document's tensors for one model.

    Directional metrics always see the pair as (candidate, reference):
    summaries are candidates against golds, and any text is the
    candidate against the document body.
    """
    users = corpus.users_for(doc_id)
    doc = TextRef(doc_key(doc_id), corpus.documents[doc_id].text)
    golds = []
    gens = []
    for user_id in users:
        golds.append(TextRef(gold_key(doc_id, user_id),
                             corpus.golds[(doc_id, user_id)].text))
        key = (model_id, doc_id, user_id)
        if key not in corpus.generated:
            raise MissingSummaryError(
                f"model {model_id!r} has no summary for doc {doc_id!r} "
                f"user {user_id!r}"
            )
        gens.append(TextRef(gen_key(model_id, doc_id, user_id),
                            corpus.generated[key].text))
    n = len(users)
    uu = np.zeros((n, n))
    ss = np.zeros((n, n))
    ud = np.zeros(n)
    sd = np.zeros(n)
    su = np.zeros(n)
    for j in range(n):
        for k in range(n):
            if j != k:
                uu[j, k] = metric.distance(golds[j], golds[k])
                ss[j, k] = metric.distance(gens[j], gens[k])
        ud[j] = metric.distance(golds[j], doc)
        sd[j] = metric.distance(gens[j], doc)
        su[j] = metric.distance(gens[j], golds[j])
    return DivergenceTensors(doc_id, users, uu, ss, ud, sd, su)


def pairwise_divergences(corpus: EvaluationCorpus, model_id: str,
                         metric: Metric):
    """Tensors for every scorable document, plus the skipped ids."""
    tensors = {
        doc_id: divergence_tensors(corpus, model_id, metric, doc_id)
        for doc_id in corpus.scorable_doc_ids
    }
    return tensors, corpus.flagged_doc_ids


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = np.exp(values - values.max())
    return shifted / shifted.sum()


def degress_summary(tensors: DivergenceTensors, j: int,
                    epsilon: float = 1e-8,
                    include_self: bool = True) -> float:
    """Responsiveness of one summary: how closely the summary's
    divergence profile tracks the gold divergence profile.

    Gold and summary divergences to the other users are first expressed
    relative to the distance from the document, softmax-weighted, and
    scaled by the raw divergence; the score is the mean min/max ratio of
    the two profiles. The self term compares two zeros and contributes
    exactly 1; dropping it (include_self=False) removes that floor and
    is not the default behaviour.
    """
    keep = np.ones(len(tensors.users), dtype=bool)
    if not include_self:
        keep[j] = False
    gold_rel = tensors.uu[j, keep] / (tensors.ud[j] + epsilon)
    gen_rel = tensors.ss[j, keep] / (tensors.sd[j] + epsilon)
    gold_profile = _softmax(gold_rel) * tensors.uu[j, keep]
    gen_profile = _softmax(gen_rel) * tensors.ss[j, keep]
    low = np.minimum(gold_profile, gen_profile)
    high = np.maximum(gold_profile, gen_profile)
    return float(np.mean((low + epsilon) / (high + epsilon)))


def degress_document(tensors: DivergenceTensors, epsilon: float = 1e-8,
                     include_self: bool = True) -> float:
    return float(np.mean([
        degress_summary(tensors, j, epsilon, include_self)
        for j in range(len(tensors.users))
    ]))


def adp(tensors: DivergenceTensors, config: PenaltyConfig) -> float:
    """Accuracy-drop penalty for a (model, document).

    Grows logistically with the best-case (minimum) summary-to-gold
    distance: 1/(1+10^gamma) when some summary matches its gold, 1 when
    even the best summary is maximally far.
    """
    best = float(tensors.su.min())
    scaled = 10.0 * best / ((1.0 - best) + config.epsilon)
    return 1.0 / (1.0 + 10.0 ** config.gamma * math.exp(-scaled))


def acp(tensors: DivergenceTensors, j: int, config: PenaltyConfig) -> float:
    """Accuracy-consistency penalty for one summary.

    Grows logistically with how far the summary's gold distance sits
    above the document's best case, relative to the document average.
    """
    best = float(tensors.su.min())
    mean = float(tensors.su.mean())
    scaled = 10.0 * (float(tensors.su[j]) - best) / ((mean - best) + config.epsilon)
    return 1.0 / (1.0 + 10.0 ** config.gamma * math.exp(-scaled))


def edp(dgp: float, config: PenaltyConfig) -> float:
    """Effective dissimilarity: maps the summed penalties onto (0, 1).

    Near 1 when the degradation is negligible, decaying to ~0 as the
    summed penalties approach 2. Computed as s/(1+s) to keep tiny
    values exact instead of cancelling to zero.
    """
    s = 10.0 ** config.alpha * math.exp(-(10.0 ** config.beta) * dgp)
    return s / (1.0 + s)


def perseval_summary(tensors: DivergenceTensors, j: int,
                     config: PenaltyConfig,
                     include_self: bool = True) -> float:
    """Responsiveness discounted by effective dissimilarity."""
    dgp = adp(tensors, config) + acp(tensors, j, config)
    return degress_summary(tensors, j, config.epsilon, include_self) \
        * edp(dgp, config)


def p_accuracy(acc_score: float, egises: float,
               config: PAccConfig = PAccConfig()) -> float:
    """Accuracy discounted by a logistic insensitivity penalty.

    May legitimately go negative: a low-accuracy, highly insensitive
    model is penalised below zero.
    """
    if not 0.0 <= acc_score <= 1.0:
        raise ValueError(f"accuracy score {acc_score} outside [0, 1]")
    if not 0.0 <= egises <= 1.0:
        raise ValueError(f"egises {egises} outside [0, 1]")
    penalty = 1.0 / (1.0 + math.exp(-config.beta_pacc * egises))
    return acc_score - config.alpha_pacc * penalty


# -- model-level aggregation ------------------------------------------


@dataclass
class ModelMetricScores:
    """Every measure at summary, document, and system level for one
    (model, metric) pair."""

    model_id: str
    metric: str
    summary_scores: dict[tuple[str, str], dict[str, float]]
    doc_scores: dict[str, dict[str, float]]
    system_scores: dict[str, float]
    skipped_docs: tuple[str, ...]

    def system_over_docs(self, doc_ids, measure: str = "perseval") -> float:
        """Mean of per-document values over an arbitrary doc multiset.

        Repeated ids contribute repeatedly; ids that were skipped at
        scoring time are ignored. Used for resampled sub-corpora.
        """
        values = [self.doc_scores[d][measure]
                  for d in doc_ids if d in self.doc_scores]
        if not values:
            raise UnscorableSampleError(
                f"no scorable document in sample for model {self.model_id!r}"
            )
        return float(np.mean(values))


def _doc_rows(tensors: DivergenceTensors, config: PenaltyConfig,
              pacc: PAccConfig, include_self: bool):
    """Summary- and document-level measures for one (model, doc)."""
    n = len(tensors.users)
    doc_adp = adp(tensors, config)
    rows = {}
    for j, user_id in enumerate(tensors.users):
        deg = degress_summary(tensors, j, config.epsilon, include_self)
        a = acp(tensors, j, config)
        e = edp(doc_adp + a, config)
        su_j = float(tensors.su[j])
        rows[user_id] = {
            "degress": deg,
            "egises": 1.0 - deg,
            "adp": doc_adp,
            "acp": a,
            "edp": e,
            "perseval": deg * e,
            "p_acc": p_accuracy(1.0 - su_j, 1.0 - deg, pacc),
        }
    doc_deg = float(np.mean([rows[u]["degress"] for u in tensors.users]))
    doc_su = float(tensors.su.mean())
    doc_row = {
        "degress": doc_deg,
        "egises": 1.0 - doc_deg,
        "adp": doc_adp,
        "acp": float(np.mean([rows[u]["acp"] for u in tensors.users])),
        "edp": float(np.mean([rows[u]["edp"] for u in tensors.users])),
        "perseval": float(np.mean([rows[u]["perseval"]
                                   for u in tensors.users])),
        "p_acc": p_accuracy(1.0 - doc_su, 1.0 - doc_deg, pacc),
        "su_mean": doc_su,
    }
    return rows, doc_row


def score_model(corpus: EvaluationCorpus, model_id: str, metric: Metric,
                config: PenaltyConfig = PenaltyConfig(),
                pacc: PAccConfig = PAccConfig(),
                include_self: bool = True,
                _tensor_cache: dict | None = None) -> ModelMetricScores:
    """Score one model with one metric across the corpus."""
    summary_scores: dict[tuple[str, str], dict[str, float]] = {}
    doc_scores: dict[str, dict[str, float]] = {}
    for doc_id in corpus.scorable_doc_ids:
        if _tensor_cache is not None and doc_id in _tensor_cache:
            tensors = _tensor_cache[doc_id]
        else:
            tensors = divergence_tensors(corpus, model_id, metric, doc_id)
        rows, doc_row = _doc_rows(tensors, config, pacc, include_self)
        for user_id, row in rows.items():
            summary_scores[(doc_id, user_id)] = row
        doc_scores[doc_id] = doc_row
    if not doc_scores:
        raise UnscorableSampleError(
            "corpus has no document with two or more gold users"
        )
    sorted_docs = sorted(doc_scores)
    system_scores: dict[str, float] = {}
    for measure in ("degress", "adp", "acp", "edp", "perseval"):
        system_scores[measure] = float(np.mean(
            [doc_scores[d][measure] for d in sorted_docs]))
    system_scores["egises"] = 1.0 - system_scores["degress"]
    system_su = float(np.mean(
        [doc_scores[d]["su_mean"] for d in sorted_docs]))
    system_scores["p_acc"] = p_accuracy(
        1.0 - system_su, system_scores["egises"], pacc)
    for d in sorted_docs:
        doc_scores[d] = {k: v for k, v in doc_scores[d].items()
                         if k != "su_mean"}
    return ModelMetricScores(
        model_id, metric.name, summary_scores, doc_scores, system_scores,
        corpus.flagged_doc_ids,
    )


def degress_system(corpus: EvaluationCorpus, model_id: str, metric: Metric,
                   epsilon: float = 1e-8, include_self: bool = True) -> float:
    """Mean over documents of the mean per-user responsiveness."""
    tensors, _ = pairwise_divergences(corpus, model_id, metric)
    if not tensors:
        raise UnscorableSampleError(
            "corpus has no document with two or more gold users"
        )
    return float(np.mean([
        degress_document(tensors[d], epsilon, include_self)
        for d in sorted(tensors)
    ]))


def egises_system(corpus: EvaluationCorpus, model_id: str, metric: Metric,
                  epsilon: float = 1e-8, include_self: bool = True) -> float:
    """Insensitivity: exactly one minus the system responsiveness."""
    return 1.0 - degress_system(corpus, model_id, metric, epsilon,
                                include_self)


def perseval_system(corpus: EvaluationCorpus, model_id: str, metric: Metric,
                    config: PenaltyConfig = PenaltyConfig(),
                    include_self: bool = True) -> float:
    """Mean over documents of mean per-user discounted responsiveness."""
    tensors, _ = pairwise_divergences(corpus, model_id, metric)
    if not tensors:
        raise UnscorableSampleError(
            "corpus has no document with two or more gold users"
        )
    doc_means = []
    for d in sorted(tensors):
        t = tensors[d]
        doc_means.append(np.mean([
            perseval_summary(t, j, config, include_self)
            for j in range(len(t.users))
        ]))
    return float(np.mean(doc_means))


# -- score tables ------------------------------------------------------


CSV_HEADER = ("model", "metric", "level", "doc_id", "user_id") + MEASURES


class ScoreTable:
    """Scores for every requested (model, metric) pair."""

    def __init__(self, entries: dict[tuple[str, str], ModelMetricScores]):
        self.entries = entries

    def get(self, model_id: str, metric: str) -> ModelMetricScores:
        return self.entries[(model_id, metric)]

    def system_scores(self, metric: str, measure: str) -> dict[str, float]:
        return {
            model: scores.system_scores[measure]
            for (model, metric_name), scores in sorted(self.entries.items())
            if metric_name == metric
        }

    def csv_rows(self):
        """One row per (model, metric, level, key); measures as columns."""
        yield CSV_HEADER
        for (model, metric) in sorted(self.entries):
            scores = self.entries[(model, metric)]
            for (doc_id, user_id) in sorted(scores.summary_scores):
                row = scores.summary_scores[(doc_id, user_id)]
                yield (model, metric, "summary", doc_id, user_id) + tuple(
                    repr(row[m]) for m in MEASURES)
            for doc_id in sorted(scores.doc_scores):
                row = scores.doc_scores[doc_id]
                yield (model, metric, "document", doc_id, "") + tuple(
                    repr(row[m]) for m in MEASURES)
            yield (model, metric, "system", "", "") + tuple(
                repr(scores.system_scores[m]) for m in MEASURES)

    def to_json_obj(self):
        out = {}
        for (model, metric) in sorted(self.entries):
            scores = self.entries[(model, metric)]
            out.setdefault(model, {})[metric] = {
                "summary": {
                    f"{d}/{u}": scores.summary_scores[(d, u)]
                    for (d, u) in sorted(scores.summary_scores)
                },
                "document": {
                    d: scores.doc_scores[d]
                    for d in sorted(scores.doc_scores)
                },
                "system": scores.system_scores,
                "skipped_docs": list(scores.skipped_docs),
            }
        return out


def score_table(corpus: EvaluationCorpus, model_ids, metrics,
                config: PenaltyConfig = PenaltyConfig(),
                pacc: PAccConfig = PAccConfig(),
                include_self: bool = True, jobs: int = 1) -> ScoreTable:
    """Score every (model, metric) pair, optionally in parallel.

    Tensor construction fans out across (model, metric, document) tasks;
    results merge in sorted key order, so the table is identical for
    any worker count.
    """
    metrics = list(metrics)
    model_ids = sorted(model_ids)
    tasks = [
        (model_id, metric, doc_id)
        for model_id in model_ids
        for metric in metrics
        for doc_id in corpus.scorable_doc_ids
    ]

    def build(task):
        model_id, metric, doc_id = task
        return divergence_tensors(corpus, model_id, metric, doc_id)

    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            built = list(pool.map(build, tasks))
    else:
        built = [build(t) for t in tasks]
    cache: dict[tuple[str, str], dict] = {}
    for (model_id, metric, doc_id), tensors in zip(tasks, built):
        cache.setdefault((model_id, metric.name), {})[doc_id] = tensors

    entries = {}
    for model_id in model_ids:
        for metric in metrics:
            entries[(model_id, metric.name)] = score_model(
                corpus, model_id, metric, config, pacc, include_self,
                _tensor_cache=cache.get((model_id, metric.name), {}),
            )
    return ScoreTable(entries)


def save_table_csv(table: ScoreTable, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in table.csv_rows():
            fh.write(",".join(row) + "\n")


def save_table_json(table: ScoreTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.to_json_obj(), fh, indent=2, sort_keys=True)
        fh.write("\n")
