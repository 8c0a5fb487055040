"""Meta-evaluation: correlation statistics, leaderboards, rank
aggregation, resampling stability, and the human-judgement estimator.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    EvaluationCorpus,
    RatedSummaryPool,
    SampleCollections,
    build_surrogates,
    doc_key,
    gen_key,
    gold_key,
)
from .engine import (
    DivergenceTensors,
    PenaltyConfig,
    adp,
    acp,
    degress_summary,
    edp,
)
from .errors import (
    DataError,
    DegenerateInputError,
    MissingRatingError,
    ParseError,
    UnscorableSampleError,
)
from .metrics import Metric, TextRef

# -- correlation statistics -------------------------------------------


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional vector")
    return arr


def _check_pair(x, y):
    x, y = _as_array(x), _as_array(y)
    if len(x) != len(y):
        raise ValueError("vectors differ in length")
    if len(x) < 2:
        raise DegenerateInputError("need at least two observations")
    return x, y


def pearson_r(x, y) -> float:
    """Product-moment correlation."""
    x, y = _check_pair(x, y)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(np.sum(xd * xd)) * float(np.sum(yd * yd)))
    if denom == 0.0:
        raise DegenerateInputError("zero variance in correlation input")
    return float(np.sum(xd * yd)) / denom


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    values = _as_array(values)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and \
                values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> float:
    """Rank correlation via 1 - 6*sum(d^2)/(n(n^2-1)) on tie-free ranks,
    falling back to the product-moment of the average ranks when either
    vector carries ties."""
    x, y = _check_pair(x, y)
    rx = average_ranks(x)
    ry = average_ranks(y)
    n = len(x)
    has_ties = len(set(x.tolist())) < n or len(set(y.tolist())) < n
    if has_ties:
        return pearson_r(rx, ry)
    d = rx - ry
    return 1.0 - 6.0 * float(np.sum(d * d)) / (n * (n * n - 1))


def kendall_tau(x, y) -> float:
    """Tau-a: (concordant - discordant) / (n(n-1)/2); tied pairs count
    as neither."""
    x, y = _check_pair(x, y)
    n = len(x)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            sign = (x[i] - x[j]) * (y[i] - y[j])
            if sign > 0:
                concordant += 1
            elif sign < 0:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


def _perm_batches(n: int, batch: int = 40320):
    """All permutations of range(n), in deterministic batches."""
    it = itertools.permutations(range(n))
    while True:
        chunk = list(itertools.islice(it, batch))
        if not chunk:
            return
        yield np.asarray(chunk, dtype=np.intp)


def permutation_pvalues(x, y, seed: int = 0,
                        exact_limit: int = 10,
                        draws: int = 20000) -> dict[str, float]:
    """Two-sided permutation p-values for the rank statistics.

    Enumerates every permutation of y when n <= exact_limit, otherwise
    falls back to seeded Monte Carlo resampling. Two-sided: proportion
    of permutations whose |statistic| reaches |observed|. The sampled
    estimate counts the observed arrangement itself, so it never
    reports an impossible zero.
    """
    x, y = _check_pair(x, y)
    n = len(x)
    rho_obs = abs(spearman_rho(x, y))
    tau_obs = abs(kendall_tau(x, y))

    rx = average_ranks(x)
    ry = average_ranks(y)
    pair_i, pair_j = np.triu_indices(n, k=1)
    x_sign = np.sign(x[pair_i] - x[pair_j])
    n_pairs = n * (n - 1) / 2
    rx_dev = rx - rx.mean()
    rx_norm = math.sqrt(float(np.sum(rx_dev * rx_dev)))

    def batch_stats(perm_rows):
        """(rho, tau) for each permutation of y in the batch."""
        yb = y[perm_rows]
        ryb = ry[perm_rows]
        ry_dev = ryb - ryb.mean(axis=1, keepdims=True)
        ry_norm = np.sqrt(np.sum(ry_dev * ry_dev, axis=1))
        denom = rx_norm * ry_norm
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(denom > 0.0,
                           ry_dev @ rx_dev / denom, 0.0)
        y_sign = np.sign(yb[:, pair_i] - yb[:, pair_j])
        tau = (y_sign @ x_sign) / n_pairs
        return rho, tau

    rho_hits = tau_hits = total = 0
    tol = 1e-12
    sampled = n > exact_limit
    if sampled:
        rng = np.random.default_rng(seed)
        batches = (
            np.asarray([rng.permutation(n) for _ in range(draws)],
                       dtype=np.intp),
        )
    else:
        batches = _perm_batches(n)
    for perm_rows in batches:
        rho, tau = batch_stats(perm_rows)
        rho_hits += int(np.sum(np.abs(rho) >= rho_obs - tol))
        tau_hits += int(np.sum(np.abs(tau) >= tau_obs - tol))
        total += len(perm_rows)
    if sampled:
        rho_hits, tau_hits, total = rho_hits + 1, tau_hits + 1, total + 1
    return {
        "spearman_p": rho_hits / total,
        "kendall_p": tau_hits / total,
    }


# -- rankings and aggregation -----------------------------------------


HIGHER_IS_BETTER = {
    "degress": True, "perseval": True, "p_acc": True,
    "egises": False, "adp": False, "acp": False, "edp": False,
}


@dataclass(frozen=True)
class Ranking:
    """A strict 1..N ordering of model ids.

    Models tied on the underlying value are ordered lexicographically
    and recorded in ``ties`` so no information is silently lost.
    """

    entries: tuple[tuple[str, int], ...]
    ties: tuple[tuple[str, ...], ...] = ()
    measure: str = ""
    scores: dict = field(default_factory=dict)

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(m for m, _ in self.entries)

    def rank_of(self, model_id: str) -> int:
        for m, r in self.entries:
            if m == model_id:
                return r
        raise KeyError(model_id)

    def rank_vector(self, model_order) -> np.ndarray:
        return np.asarray([self.rank_of(m) for m in model_order],
                          dtype=float)

    def to_json_obj(self):
        return {
            "measure": self.measure,
            "entries": [
                {"model": m, "rank": r,
                 **({"score": self.scores[m]} if m in self.scores else {})}
                for m, r in self.entries
            ],
            "ties": [list(group) for group in self.ties],
        }


def rank_models(scores: dict[str, float],
                higher_is_better: bool = True,
                measure: str = "") -> Ranking:
    """Rank models by score; equal scores tie-break lexicographically
    and are annotated."""
    if not scores:
        raise DegenerateInputError("no models to rank")
    direction = -1.0 if higher_is_better else 1.0
    ordered = sorted(scores, key=lambda m: (direction * scores[m], m))
    ties = []
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and \
                scores[ordered[j + 1]] == scores[ordered[i]]:
            j += 1
        if j > i:
            ties.append(tuple(ordered[i:j + 1]))
        i = j + 1
    return Ranking(
        entries=tuple((m, r) for r, m in enumerate(ordered, start=1)),
        ties=tuple(ties),
        measure=measure,
        scores=dict(scores),
    )


def leaderboard(table, metric: str, measure: str = "perseval") -> Ranking:
    """Rank the table's models on one metric and measure, respecting
    the measure's direction (penalties and insensitivity rank low-first)."""
    scores = table.system_scores(metric, measure)
    return rank_models(scores, HIGHER_IS_BETTER[measure],
                       measure=f"{measure}/{metric}")


def borda_kendall(rankings) -> Ranking:
    """Aggregate rankings by summed rank; lower total is better.

    Equal totals order lexicographically and are annotated as ties.
    """
    rankings = list(rankings)
    if not rankings:
        raise DegenerateInputError("no rankings to aggregate")
    models = set(rankings[0].model_ids)
    for r in rankings[1:]:
        if set(r.model_ids) != models:
            raise DataError("rankings cover different model sets")
    totals = {m: sum(r.rank_of(m) for r in rankings) for m in models}
    ordered = sorted(models, key=lambda m: (totals[m], m))
    ties = []
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and \
                totals[ordered[j + 1]] == totals[ordered[i]]:
            j += 1
        if j > i:
            ties.append(tuple(ordered[i:j + 1]))
        i = j + 1
    return Ranking(
        entries=tuple((m, r) for r, m in enumerate(ordered, start=1)),
        ties=tuple(ties),
        measure="borda",
        scores={m: float(totals[m]) for m in models},
    )


def load_ranking(path) -> Ranking:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        entries = tuple((e["model"], int(e["rank"])) for e in obj["entries"])
        scores = {e["model"]: float(e["score"])
                  for e in obj["entries"] if "score" in e}
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{path}: malformed ranking file ({exc})")
    return Ranking(entries=entries,
                   ties=tuple(tuple(g) for g in obj.get("ties", ())),
                   measure=obj.get("measure", ""), scores=scores)


def save_ranking(ranking: Ranking, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ranking.to_json_obj(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- resampling stability ---------------------------------------------


def bias_variance(full_score: float, fraction_means) -> tuple[float, float]:
    """Spread of {full score} union {per-fraction mean scores}.

    The bias is the population standard deviation of that multiset and
    the variance its square.
    """
    values = np.asarray([full_score, *fraction_means], dtype=float)
    variance = float(np.var(values))
    return math.sqrt(variance), variance


@dataclass
class StabilityReport:
    models: tuple[str, ...]
    fractions: tuple[float, ...]
    full_scores: dict[str, float]
    fraction_means: dict[str, dict[float, float]]
    bias: dict[str, float]
    variance: dict[str, float]
    sample_stats: list[dict]
    epsilon_spearman: float
    epsilon_kendall: float
    delta_stability: float

    def to_json_obj(self):
        return {
            "models": list(self.models),
            "fractions": list(self.fractions),
            "full_scores": self.full_scores,
            "fraction_means": {
                m: {repr(f): v for f, v in per.items()}
                for m, per in self.fraction_means.items()
            },
            "bias": self.bias,
            "variance": self.variance,
            "samples": self.sample_stats,
            "epsilon_spearman": self.epsilon_spearman,
            "epsilon_kendall": self.epsilon_kendall,
            "delta_stability": self.delta_stability,
        }

    def csv_rows(self):
        yield ("model", "full_score",
               *(f"mean_{f}" for f in self.fractions),
               "bias", "variance")
        for m in self.models:
            yield (m, repr(self.full_scores[m]),
                   *(repr(self.fraction_means[m][f])
                     for f in self.fractions),
                   repr(self.bias[m]), repr(self.variance[m]))


def stability_report(collections: SampleCollections, scorer,
                     higher_is_better: bool = True) -> StabilityReport:
    """Run a scorer over every resample and summarise rank stability.

    ``scorer`` maps a Sample to {model: score}. Per model, the report
    carries the full-corpus score, per-fraction means, and the
    bias/variance of their multiset. Per sample, the rank correlations
    against the full-corpus ranking; their minima are the epsilon
    statistics, and delta is the worst per-model max(bias, variance).
    """
    full_scores = scorer(collections.full_sample())
    models = tuple(sorted(full_scores))
    if len(models) < 2:
        raise DegenerateInputError(
            "stability needs at least two models to rank"
        )
    full_ranking = rank_models(full_scores, higher_is_better)
    full_ranks = full_ranking.rank_vector(models)

    fraction_means: dict[str, dict[float, float]] = {m: {} for m in models}
    sample_stats: list[dict] = []
    min_rho = math.inf
    min_tau = math.inf
    for fraction in collections.fractions:
        per_model: dict[str, list[float]] = {m: [] for m in models}
        for set_idx, sample in enumerate(collections.samples[fraction]):
            scores = scorer(sample)
            if set(scores) != set(models):
                raise DataError("scorer returned a different model set")
            for m in models:
                per_model[m].append(scores[m])
            sample_ranks = rank_models(
                scores, higher_is_better).rank_vector(models)
            rho = spearman_rho(sample_ranks, full_ranks)
            tau = kendall_tau(sample_ranks, full_ranks)
            min_rho = min(min_rho, rho)
            min_tau = min(min_tau, tau)
            sample_stats.append({
                "fraction": fraction,
                "set": set_idx,
                "spearman": rho,
                "kendall": tau,
                "scores": {m: scores[m] for m in models},
            })
        for m in models:
            fraction_means[m][fraction] = float(np.mean(per_model[m]))

    bias: dict[str, float] = {}
    variance: dict[str, float] = {}
    for m in models:
        b, v = bias_variance(
            full_scores[m],
            [fraction_means[m][f] for f in collections.fractions],
        )
        bias[m] = b
        variance[m] = v
    delta = max(max(bias[m], variance[m]) for m in models)
    return StabilityReport(
        models=models,
        fractions=collections.fractions,
        full_scores={m: float(full_scores[m]) for m in models},
        fraction_means=fraction_means,
        bias=bias,
        variance=variance,
        sample_stats=sample_stats,
        epsilon_spearman=min_rho,
        epsilon_kendall=min_tau,
        delta_stability=delta,
    )


# -- human-judgement estimation ---------------------------------------


class HumanRatings:
    """Pairwise similarity ratings, averaged over annotators.

    Ratings address texts by short in-document ids: "gold:<user>" for a
    gold reference, "gen:<model>:<user>" for a generated summary. The
    declared scale maps linearly onto divergences: the top of the scale
    means identical (0), the bottom maximally divergent (1).
    """

    def __init__(self, scale_max: float = 6.0):
        if scale_max <= 1:
            raise ValueError("scale_max must exceed 1")
        self.scale_max = float(scale_max)
        self._sums: dict[tuple[str, frozenset], float] = {}
        self._counts: dict[tuple[str, frozenset], int] = {}

    def add(self, doc_id: str, id_a: str, id_b: str, rating: float):
        if not 1.0 <= rating <= self.scale_max:
            raise DataError(
                f"rating {rating} outside [1, {self.scale_max}]"
            )
        key = (doc_id, frozenset((id_a, id_b)))
        self._sums[key] = self._sums.get(key, 0.0) + float(rating)
        self._counts[key] = self._counts.get(key, 0) + 1

    def mean_rating(self, doc_id: str, id_a: str, id_b: str) -> float:
        key = (doc_id, frozenset((id_a, id_b)))
        if key not in self._sums:
            raise MissingRatingError(
                f"no rating for pair ({id_a!r}, {id_b!r}) in doc {doc_id!r}"
            )
        return self._sums[key] / self._counts[key]

    def divergence(self, doc_id: str, id_a: str, id_b: str) -> float:
        rating = self.mean_rating(doc_id, id_a, id_b)
        return 1.0 - (rating - 1.0) / (self.scale_max - 1.0)


def load_ratings(path) -> HumanRatings:
    """Read pairwise ratings from line-oriented JSON.

    An optional {"kind": "meta", "scale_max": ...} line declares the
    scale (default 6).
    """
    entries = []
    scale_max = 6.0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc})")
            if rec.get("kind") == "meta":
                scale_max = float(rec["scale_max"])
                continue
            try:
                entries.append((rec["doc_id"], rec["left_id"],
                                rec["right_id"], float(rec["rating"])))
            except KeyError as exc:
                raise ParseError(
                    f"{path}:{lineno}: missing field {exc.args[0]!r}")
    ratings = HumanRatings(scale_max)
    for doc_id, left, right, rating in entries:
        ratings.add(doc_id, left, right, rating)
    return ratings


def _hj_tensors_ratings(corpus: EvaluationCorpus, ratings: HumanRatings,
                        model_id: str, metric: Metric, doc_id: str
                        ) -> DivergenceTensors:
    users = corpus.users_for(doc_id)
    doc = TextRef(doc_key(doc_id), corpus.documents[doc_id].text)
    n = len(users)
    uu = np.zeros((n, n))
    ss = np.zeros((n, n))
    ud = np.zeros(n)
    sd = np.zeros(n)
    su = np.zeros(n)
    for j, uj in enumerate(users):
        gold_j = TextRef(gold_key(doc_id, uj),
                         corpus.golds[(doc_id, uj)].text)
        gen_j = TextRef(gen_key(model_id, doc_id, uj),
                        corpus.generated[(model_id, doc_id, uj)].text)
        for k, uk in enumerate(users):
            if j == k:
                continue
            uu[j, k] = ratings.divergence(doc_id, f"gold:{uj}", f"gold:{uk}")
            ss[j, k] = ratings.divergence(
                doc_id, f"gen:{model_id}:{uj}", f"gen:{model_id}:{uk}")
        ud[j] = metric.distance(gold_j, doc)
        sd[j] = metric.distance(gen_j, doc)
        su[j] = metric.distance(gen_j, gold_j)
    return DivergenceTensors(doc_id, users, uu, ss, ud, sd, su)


def _hj_tensors_rating_diff(corpus: EvaluationCorpus,
                            pool: RatedSummaryPool, model_id: str,
                            metric: Metric, doc_id: str,
                            threshold: int) -> DivergenceTensors:
    """Rating-difference divergences over a surrogate corpus.

    Gold-gold divergence is the gap between annotators' average liked
    ratings, summary-summary the gap between the ratings two annotators
    gave the same policy, summary-gold the gap between a policy's
    rating and the annotator's liked average. All gaps normalise by the
    scale span; document distances still come from the metric.
    """
    users = corpus.users_for(doc_id)
    span = pool.r_max - 1.0
    by_pair = {(r.annotator_id, r.policy_id): r.rating
               for r in pool.records if r.doc_id == doc_id}
    for user in users:
        if (user, model_id) not in by_pair:
            raise MissingRatingError(
                f"annotator {user!r} has no rating for policy "
                f"{model_id!r} on doc {doc_id!r}"
            )
    liked_mean = {}
    for user in users:
        liked = [r.rating for r in pool.records
                 if r.doc_id == doc_id and r.annotator_id == user
                 and r.rating > threshold]
        liked_mean[user] = float(np.mean(liked))
    doc = TextRef(doc_key(doc_id), corpus.documents[doc_id].text)
    n = len(users)
    uu = np.zeros((n, n))
    ss = np.zeros((n, n))
    ud = np.zeros(n)
    sd = np.zeros(n)
    su = np.zeros(n)
    for j, uj in enumerate(users):
        gold_j = TextRef(gold_key(doc_id, uj),
                         corpus.golds[(doc_id, uj)].text)
        gen_j = TextRef(gen_key(model_id, doc_id, uj),
                        corpus.generated[(model_id, doc_id, uj)].text)
        for k, uk in enumerate(users):
            if j == k:
                continue
            uu[j, k] = abs(liked_mean[uj] - liked_mean[uk]) / span
            ss[j, k] = abs(by_pair[(uj, model_id)]
                           - by_pair[(uk, model_id)]) / span
        su[j] = abs(by_pair[(uj, model_id)] - liked_mean[uj]) / span
        ud[j] = metric.distance(gold_j, doc)
        sd[j] = metric.distance(gen_j, doc)
    return DivergenceTensors(doc_id, users, uu, ss, ud, sd, su)


def perseval_hj(corpus: EvaluationCorpus | None, ratings,
                accuracy_surrogate: Metric,
                config: PenaltyConfig = PenaltyConfig(),
                source: str = "ratings",
                threshold: int = 6) -> dict[str, dict[str, float]]:
    """Human-judgement scores per model.

    With source="ratings", gold-gold and summary-summary divergences
    come from pairwise similarity ratings and everything else from the
    accuracy-surrogate metric. With source="rating_diff", ``ratings``
    is a rated summary pool; divergences are absolute rating gaps (the
    comparison variant), and the corpus, if not supplied, is the pool's
    surrogate corpus.

    Returns {model: {"degress", "egises", "perseval"}}.
    """
    if source == "rating_diff":
        if not isinstance(ratings, RatedSummaryPool):
            raise DataError(
                "rating_diff needs a RatedSummaryPool as ratings")
        pool = ratings
        if corpus is None:
            corpus, _ = build_surrogates(pool, threshold)
        tensor_fn = lambda model, doc: _hj_tensors_rating_diff(
            corpus, pool, model, accuracy_surrogate, doc, threshold)
    elif source == "ratings":
        if not isinstance(ratings, HumanRatings):
            raise DataError("ratings source needs a HumanRatings")
        if corpus is None:
            raise DataError("ratings source needs an explicit corpus")
        tensor_fn = lambda model, doc: _hj_tensors_ratings(
            corpus, ratings, model, accuracy_surrogate, doc)
    else:
        raise ValueError(f"unknown divergence source {source!r}")

    scorable = corpus.scorable_doc_ids
    if not scorable:
        raise UnscorableSampleError(
            "corpus has no document with two or more gold users"
        )
    out: dict[str, dict[str, float]] = {}
    for model_id in corpus.model_ids:
        deg_docs = []
        pse_docs = []
        for doc_id in scorable:
            t = tensor_fn(model_id, doc_id)
            doc_adp = adp(t, config)
            degs = []
            pses = []
            for j in range(len(t.users)):
                deg = degress_summary(t, j, config.epsilon)
                e = edp(doc_adp + acp(t, j, config), config)
                degs.append(deg)
                pses.append(deg * e)
            deg_docs.append(float(np.mean(degs)))
            pse_docs.append(float(np.mean(pses)))
        degress = float(np.mean(deg_docs))
        out[model_id] = {
            "degress": degress,
            "egises": 1.0 - degress,
            "perseval": float(np.mean(pse_docs)),
        }
    return out
