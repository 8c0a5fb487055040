"""Greedy token matching over embedding matrices.

Pure NumPy; the model-facing code hands in one row per content token.
"""
from __future__ import annotations

import numpy as np


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.maximum(norms, 1e-12)


def greedy_match_f1(cand: np.ndarray, ref: np.ndarray) -> float:
    """Harmonic mean of greedy-matching precision and recall.

    Each candidate token greedily takes its best cosine match among the
    reference tokens (precision) and vice versa (recall); tokens may be
    reused.
    """
    if len(cand) == 0 or len(ref) == 0:
        return 0.0
    sim = _unit_rows(cand) @ _unit_rows(ref).T
    precision = float(sim.max(axis=1).mean())
    recall = float(sim.max(axis=0).mean())
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def pair_distance(emb_a: np.ndarray, emb_b: np.ndarray) -> float:
    """Embedding distance between two texts: one minus the mean of the
    two directed match scores, clamped to [0, 1].

    The two directions use the same similarity matrix transposed, so
    the result is symmetric by construction; empty-vs-empty is 0 and
    empty-vs-anything is maximal.
    """
    if len(emb_a) == 0 and len(emb_b) == 0:
        return 0.0
    if len(emb_a) == 0 or len(emb_b) == 0:
        return 1.0
    score = 0.5 * (greedy_match_f1(emb_a, emb_b)
                   + greedy_match_f1(emb_b, emb_a))
    return min(max(1.0 - score, 0.0), 1.0)
