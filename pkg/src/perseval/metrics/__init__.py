"""Divergence metrics over texts.

Every metric maps an ordered (candidate, reference) pair of texts to a
distance in [0, 1]. Texts travel as (key, text) references so that
file-backed metrics can dereference precomputed values by id while
string metrics work on the text alone.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

from ..errors import MissingIdError
from .distributions import (
    ProbabilityDistribution,
    ab_divergence,
    infolm_distance,
    jsd_distance,
)
from .files import (
    DistanceMatrixFile,
    load_distributions,
    load_matrix,
    save_distributions,
    save_matrix,
)
from .strings import (
    bleu1_distance,
    lcs_length,
    meteor_distance,
    rouge_l_distance,
    rouge_su4_distance,
    tokenize,
)

__all__ = [
    "TextRef", "Metric", "get_metric", "METRIC_NAMES",
    "tokenize", "lcs_length", "rouge_l_distance", "rouge_su4_distance",
    "bleu1_distance", "meteor_distance",
    "ProbabilityDistribution", "jsd_distance", "ab_divergence",
    "infolm_distance",
    "DistanceMatrixFile", "load_matrix", "save_matrix",
    "load_distributions", "save_distributions",
]


class TextRef(NamedTuple):
    """A text plus its id in the shared pair-key space."""

    key: str
    text: str


@lru_cache(maxsize=65536)
def _tokens(text: str) -> tuple[str, ...]:
    return tuple(tokenize(text))


class Metric:
    """Base for distance metrics; subclasses define pair_distance."""

    name: str

    def pair_distance(self, cand: TextRef, ref: TextRef) -> float:
        raise NotImplementedError

    def distance(self, cand: TextRef, ref: TextRef) -> float:
        value = self.pair_distance(cand, ref)
        return min(max(value, 0.0), 1.0)


class _TokenMetric(Metric):
    def __init__(self, name, fn):
        self.name = name
        self._fn = fn

    def pair_distance(self, cand, ref):
        return self._fn(_tokens(cand.text), _tokens(ref.text))


class TokenJsdMetric(Metric):
    """JSD distance between the two texts' unigram frequencies."""

    name = "jsd"

    def pair_distance(self, cand, ref):
        return jsd_distance(
            ProbabilityDistribution.from_tokens(_tokens(cand.text)),
            ProbabilityDistribution.from_tokens(_tokens(ref.text)),
        )


class MatrixMetric(Metric):
    """Distances dereferenced from a precomputed matrix file."""

    def __init__(self, matrix: DistanceMatrixFile, name: str | None = None):
        self.matrix = matrix
        self.name = name or matrix.metric

    def pair_distance(self, cand, ref):
        return self.matrix.lookup(cand.key, ref.key)


class InfoLMMetric(Metric):
    """Divergence between precomputed masked-LM token distributions."""

    name = "infolm"

    def __init__(self, distributions: dict[str, ProbabilityDistribution],
                 a_param: float = 1.0, b_param: float = 1.0):
        self.distributions = distributions
        self.a_param = a_param
        self.b_param = b_param

    def _dist(self, key):
        try:
            return self.distributions[key]
        except KeyError:
            raise MissingIdError(f"id {key!r} absent from distributions")

    def pair_distance(self, cand, ref):
        return infolm_distance(
            self._dist(cand.key), self._dist(ref.key),
            self.a_param, self.b_param,
        )


METRIC_NAMES = (
    "rouge_l", "rouge_su4", "bleu1", "meteor", "jsd", "bscore", "infolm",
)

_ALIASES = {"bleu": "bleu1"}


def get_metric(name: str, matrix_path=None, distributions_path=None,
               a_param: float = 1.0, b_param: float = 1.0) -> Metric:
    """Construct a metric by name.

    ``bscore`` requires a matrix file path; ``infolm`` a distributions
    file path. The remaining metrics work on the texts directly.
    """
    name = _ALIASES.get(name, name)
    if name == "rouge_l":
        return _TokenMetric(name, rouge_l_distance)
    if name == "rouge_su4":
        return _TokenMetric(name, rouge_su4_distance)
    if name == "bleu1":
        return _TokenMetric(name, bleu1_distance)
    if name == "meteor":
        return _TokenMetric(name, meteor_distance)
    if name == "jsd":
        return TokenJsdMetric()
    if name == "bscore":
        if matrix_path is None:
            raise ValueError("bscore needs a distance-matrix file")
        return MatrixMetric(load_matrix(matrix_path), name="bscore")
    if name == "infolm":
        if distributions_path is None:
            raise ValueError("infolm needs a distributions file")
        return InfoLMMetric(load_distributions(distributions_path),
                            a_param, b_param)
    raise ValueError(f"unknown metric {name!r}")
