"""Cosine ranking of candidate audio embeddings against the projected query."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, EmptyCandidateSet, ZeroVector

_EPS = 1e-12


@dataclass
class CandidateScores:
    scores: np.ndarray  # (N,) cosine similarities in [-1, 1]
    selected: int  # argmax, lowest index on exact ties
    geoalign: float  # scores[selected]


def select_candidate(g_embed: np.ndarray, candidates: np.ndarray) -> CandidateScores:
    """Score every candidate row by cosine similarity and pick the best."""
    g = np.asarray(g_embed, dtype=np.float64).reshape(-1)
    C = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if C.shape[0] == 0:
        raise EmptyCandidateSet("no candidates to rank")
    if C.shape[1] != g.shape[0]:
        raise DimensionMismatch(f"candidate dim {C.shape[1]} != query dim {g.shape[0]}")
    g_norm = np.linalg.norm(g)
    c_norms = np.linalg.norm(C, axis=1)
    if g_norm < _EPS:
        raise ZeroVector("query embedding is zero")
    if (c_norms < _EPS).any():
        raise ZeroVector("zero candidate embedding")
    scores = (C @ g) / (c_norms * g_norm)
    selected = int(np.argmax(scores))
    return CandidateScores(scores=scores, selected=selected, geoalign=float(scores[selected]))
