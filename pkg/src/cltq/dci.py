"""Distributional correspondence indexing.

Each vocabulary term gets a profile with one dimension per pivot: the
distributional correspondence (cosine of document-incidence vectors) between
the term and that pivot in the term's own unlabeled corpus.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .pivots import PivotPair
from .projection import ProjectionMatrix, project, project_rows  # noqa: F401  (re-export)
from .vectorizer import Vocabulary, incidence_matrix


class MissingPivotError(ValueError):
    pass


def dcf_cosine(u, v) -> float:
    """Cosine of two occurrence vectors; 0 if either is all-zero."""
    u = u.toarray().ravel() if sp.issparse(u) else np.asarray(u, dtype=float).ravel()
    v = v.toarray().ravel() if sp.issparse(v) else np.asarray(v, dtype=float).ravel()
    denom = np.sqrt((u @ u) * (v @ v))
    if denom == 0:
        return 0.0
    return float(np.clip(u @ v / denom, -1.0, 1.0))


def cosine_profiles(occ: sp.spmatrix, pivot_cols: np.ndarray) -> np.ndarray:
    """Cosine between every column of ``occ`` (doc x term) and each pivot column.

    Batched form of :func:`dcf_cosine`, returns |V| x m.
    """
    occ = sp.csc_matrix(occ)
    P = occ[:, pivot_cols]
    dots = np.asarray((occ.T @ P).todense())
    sq = np.asarray(occ.multiply(occ).sum(axis=0)).ravel()
    # sqrt of the product keeps self-similarity of integer vectors exactly 1
    denom = np.sqrt(np.outer(sq, sq[pivot_cols]))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, dots / denom, 0.0)
    return np.clip(out, -1.0, 1.0)


DCF: dict[str, Callable[[sp.spmatrix, np.ndarray], np.ndarray]] = {"cosine": cosine_profiles}


def postprocess_profiles(profiles: np.ndarray) -> np.ndarray:
    """Center each row on its mean, then scale it to unit L2 norm (zero rows stay zero)."""
    centered = profiles - profiles.mean(axis=1, keepdims=True)
    # dividing by the largest entry first keeps the norm free of underflow
    peak = np.abs(centered).max(axis=1, keepdims=True)
    zero = np.all(profiles == 0, axis=1, keepdims=True) | (peak == 0)
    scaled = centered / np.where(zero, 1.0, peak)
    norms = np.linalg.norm(scaled, axis=1, keepdims=True)
    return np.where(zero, 0.0, scaled / np.where(zero, 1.0, norms))


def term_profiles(corpus: Corpus, vocab: Vocabulary, pivot_terms: Sequence[str],
                  dcf: str = "cosine") -> np.ndarray:
    """Raw (unprocessed) |V| x m correspondence matrix for one language."""
    occ = incidence_matrix(corpus, vocab)
    missing = [t for t in pivot_terms if t not in vocab]
    if missing:
        raise MissingPivotError(f"pivot terms outside the vocabulary: {missing[:5]}")
    cols = np.array([vocab.index(t) for t in pivot_terms])
    support = np.asarray(occ[:, cols].sum(axis=0)).ravel()
    if np.any(support == 0):
        bad = pivot_terms[int(np.flatnonzero(support == 0)[0])]
        raise MissingPivotError(f"pivot {bad!r} never occurs in the {corpus.language} unlabeled corpus")
    return DCF[dcf](occ, cols)


def build_projection(source_unlabeled: Corpus, target_unlabeled: Corpus,
                     pivots: Sequence[PivotPair], vocab_s: Vocabulary, vocab_t: Vocabulary,
                     *, dcf: str = "cosine", postprocess: bool = True
                     ) -> tuple[ProjectionMatrix, ProjectionMatrix]:
    """Per-language projections ``(theta_s, theta_t)``, each with ``len(pivots)`` columns."""
    if not pivots:
        raise ValueError("no pivots")
    out = []
    for corpus, vocab, terms in (
        (source_unlabeled, vocab_s, [p.source_term for p in pivots]),
        (target_unlabeled, vocab_t, [p.target_term for p in pivots]),
    ):
        prof = term_profiles(corpus, vocab, terms, dcf)
        if postprocess:
            prof = postprocess_profiles(prof)
        out.append(ProjectionMatrix(prof, corpus.language, "dci"))
    return out[0], out[1]
