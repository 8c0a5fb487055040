"""Probability distributions over token/vocabulary supports, and the
divergence-based distances built on them."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import DataError

MASS_TOLERANCE = 1e-6
_SMOOTHING = 1e-12


@dataclass(frozen=True)
class ProbabilityDistribution:
    """Non-negative mass over a discrete support, summing to one."""

    support: tuple
    mass: tuple

    def __post_init__(self):
        if len(self.support) != len(self.mass):
            raise DataError("support and mass lengths differ")
        if len(self.support) == 0:
            raise DataError("empty distribution")
        if len(set(self.support)) != len(self.support):
            raise DataError("support elements must be unique")
        arr = np.asarray(self.mass, dtype=float)
        if np.any(arr < 0.0):
            raise DataError("negative probability mass")
        total = float(arr.sum())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise DataError(f"mass sums to {total}, not 1")

    @classmethod
    def from_counts(cls, counts: Counter) -> "ProbabilityDistribution":
        if not counts:
            raise DataError("empty distribution")
        support = tuple(sorted(counts))
        total = sum(counts[s] for s in support)
        return cls(support, tuple(counts[s] / total for s in support))

    @classmethod
    def from_tokens(cls, tokens) -> "ProbabilityDistribution":
        """Unigram relative frequencies."""
        return cls.from_counts(Counter(tokens))


def _align(p: ProbabilityDistribution, q: ProbabilityDistribution):
    """Zero-fill both masses onto the sorted union support."""
    union = sorted(set(p.support) | set(q.support))
    index = {s: i for i, s in enumerate(union)}
    pv = np.zeros(len(union))
    qv = np.zeros(len(union))
    for s, m in zip(p.support, p.mass):
        pv[index[s]] = m
    for s, m in zip(q.support, q.mass):
        qv[index[s]] = m
    return pv, qv


def jsd_distance(p: ProbabilityDistribution,
                 q: ProbabilityDistribution) -> float:
    """Square root of the base-2 Jensen-Shannon divergence.

    Zero masses contribute nothing (0 log 0 = 0), so identical
    distributions give exactly 0 and disjoint supports exactly 1.
    """
    pv, qv = _align(p, q)
    mv = 0.5 * (pv + qv)

    def half_kl(av):
        nz = av > 0.0
        return float(np.sum(av[nz] * np.log2(av[nz] / mv[nz])))

    divergence = 0.5 * half_kl(pv) + 0.5 * half_kl(qv)
    return math.sqrt(min(max(divergence, 0.0), 1.0))


def ab_divergence(p: ProbabilityDistribution, q: ProbabilityDistribution,
                  a_param: float = 1.0, b_param: float = 1.0) -> float:
    """Two-parameter divergence over smoothed, union-aligned masses.

        D = log(sum p^(a+b)) / (b(a+b))
          + log(sum q^(a+b)) / (a+b)
          - log(sum p^a q^b) / b

    Both masses get 1e-12 added to every union-support element and are
    renormalised before the logs, since the expression is undefined on
    zero mass.
    """
    if a_param <= 0.0 or b_param <= 0.0:
        raise ValueError("a_param and b_param must be positive")
    pv, qv = _align(p, q)
    pv = pv + _SMOOTHING
    qv = qv + _SMOOTHING
    pv /= pv.sum()
    qv /= qv.sum()
    ab = a_param + b_param
    term_p = math.log(float(np.sum(pv ** ab))) / (b_param * ab)
    term_q = math.log(float(np.sum(qv ** ab))) / ab
    term_cross = math.log(float(np.sum(pv ** a_param * qv ** b_param))) / b_param
    return term_p + term_q - term_cross


def infolm_distance(p: ProbabilityDistribution, q: ProbabilityDistribution,
                    a_param: float = 1.0, b_param: float = 1.0) -> float:
    """Map the divergence onto [0, 1) via 1 - exp(-D)."""
    return max(0.0, 1.0 - math.exp(-ab_divergence(p, q, a_param, b_param)))
