"""Structural correspondence learning.

One linear pivot-presence predictor per pivot pair is trained on the union of
both unlabeled corpora in the concatenated (source + target) feature space;
the stacked weight vectors are reduced to ``k`` directions by truncated SVD.
"""

from __future__ import annotations

import logging
import warnings
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .pivots import PivotPair
from .projection import ProjectionMatrix, project, project_rows  # noqa: F401  (re-export)
from .vectorizer import Vocabulary, incidence_matrix, tfidf_matrix

log = logging.getLogger(__name__)


class UntrainablePivotError(ValueError):
    pass


def modified_huber(z: np.ndarray) -> np.ndarray:
    return np.where(z >= -1, np.maximum(0.0, 1.0 - z) ** 2, -4.0 * z)


def modified_huber_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 1, 0.0, np.where(z >= -1, -2.0 * (1.0 - z), -4.0))


def _spectral_norm_sq(X: sp.spmatrix, n_iter: int = 30) -> float:
    """Largest eigenvalue of [X 1]^T [X 1] by power iteration (upper-bounded by 1.01x)."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(X.shape[1] + 1)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(n_iter):
        u = X @ v[:-1] + v[-1]
        w = np.append(X.T @ u, u.sum())
        lam = float(np.linalg.norm(w))
        if lam == 0:
            return 0.0
        v = w / lam
    return 1.01 * lam


def bilingual_design(source_unlabeled: Corpus, target_unlabeled: Corpus,
                     vocab_s: Vocabulary, vocab_t: Vocabulary, binary: bool = True) -> sp.csr_matrix:
    """Source rows then target rows, columns = source vocabulary then target vocabulary."""
    n_cols = len(vocab_s) + len(vocab_t)
    build = incidence_matrix if binary else tfidf_matrix
    return sp.vstack([
        build(source_unlabeled, vocab_s, n_cols=n_cols),
        build(target_unlabeled, vocab_t, offset=len(vocab_s), n_cols=n_cols),
    ]).tocsr()


def pivot_rows(pivots: Sequence[PivotPair], vocab_s: Vocabulary, vocab_t: Vocabulary):
    missing = [p.source_term for p in pivots if p.source_term not in vocab_s]
    missing += [p.target_term for p in pivots if p.target_term not in vocab_t]
    if missing:
        raise UntrainablePivotError(f"pivot terms outside the vocabulary: {missing[:5]}")
    rows_s = np.array([vocab_s.index(p.source_term) for p in pivots])
    rows_t = np.array([len(vocab_s) + vocab_t.index(p.target_term) for p in pivots])
    return rows_s, rows_t


def train_auxiliary_predictors(source_unlabeled: Corpus, target_unlabeled: Corpus,
                               pivots: Sequence[PivotPair], vocab_s: Vocabulary,
                               vocab_t: Vocabulary, *, reg: float = 1e-4, n_iter: int = 100,
                               clip_negative: bool = True, binary: bool = True) -> np.ndarray:
    """Weight matrix W of shape (|V_s| + |V_t|, len(pivots)).

    Column j holds the weights of a modified-Huber linear model predicting the
    presence of pivot j (its source term in source documents, its target term
    in target documents) from all other terms; the two pivot features are
    masked out.  All tasks are solved jointly by accelerated full-batch
    gradient descent for exactly ``n_iter`` steps.  Tasks whose labels are all
    one class give a zero column.
    """
    if not pivots:
        raise ValueError("no pivots")
    if len(source_unlabeled) == 0 or len(target_unlabeled) == 0:
        raise ValueError("unlabeled corpora must be non-empty")
    rows_s, rows_t = pivot_rows(pivots, vocab_s, vocab_t)
    X = bilingual_design(source_unlabeled, target_unlabeled, vocab_s, vocab_t, binary)
    # presence indicator is always built from incidence, independent of feature weighting
    B = X if binary else bilingual_design(source_unlabeled, target_unlabeled, vocab_s, vocab_t, True)
    Bc = B.tocsc()
    present = np.asarray((Bc[:, rows_s] + Bc[:, rows_t]).todense()) > 0
    n, m = present.shape
    n_pos = present.sum(axis=0)
    absent = np.flatnonzero(n_pos == 0)
    if len(absent):
        raise UntrainablePivotError(
            f"pivot {pivots[absent[0]].source_term}/{pivots[absent[0]].target_term} "
            "never occurs in the unlabeled corpora")
    active = n_pos < n
    Y = np.where(present, 1.0, -1.0)[:, active]
    mask = np.ones((X.shape[1], m))
    mask[rows_s, np.arange(m)] = 0.0
    mask[rows_t, np.arange(m)] = 0.0
    mask = mask[:, active]

    step = 1.0 / (2.0 * _spectral_norm_sq(X) / n + reg)
    # float32 halves the cost of the two sparse products per step
    X = X.astype(np.float32)
    XT = X.T.tocsr()
    Y = Y.astype(np.float32)
    mask = mask.astype(np.float32)
    W = np.zeros_like(mask)
    b = np.zeros(mask.shape[1], dtype=np.float32)
    W_prev, b_prev = W, b
    for it in range(1, n_iter + 1):
        mom = (it - 1) / (it + 2)
        V = W + mom * (W - W_prev)
        c = b + mom * (b - b_prev)
        G = Y * modified_huber_grad(Y * (X @ V + c)) / n
        gW = (XT @ G + reg * V) * mask
        W_prev, b_prev = W, b
        W = V - step * gW
        b = c - step * G.sum(axis=0)

    out = np.zeros((X.shape[1], m))
    out[:, active] = W.astype(float)
    if clip_negative:
        np.maximum(out, 0.0, out=out)
    if not active.all():
        log.warning("%d single-class auxiliary tasks produced zero columns", int((~active).sum()))
    return out


def _fix_signs(U: np.ndarray) -> np.ndarray:
    for j in range(U.shape[1]):
        i = np.argmax(np.abs(U[:, j]))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    return U


def truncated_svd(W, k: int, *, oversampling: int | None = None, n_iter: int = 50,
                  tol: float = 1e-8, seed: int = 0, language: str = "bilingual",
                  return_singular_values: bool = False):
    """Top-``k`` left singular vectors of ``W`` by block power iteration.

    The block carries ``oversampling`` (default ``2k``) extra columns and is
    re-orthonormalized at every half step.  Iteration stops after ``n_iter``
    rounds or once both the Ritz values (relative to the largest) and the
    leading Ritz vectors move by less than ``tol``.  Each column's largest
    magnitude entry is made positive.  If ``W`` has rank below ``k`` the extra
    columns are zero and a warning is issued.
    """
    rows, cols = W.shape
    if k < 1 or k > min(rows, cols):
        raise ValueError(f"k={k} must lie in [1, {min(rows, cols)}]")
    p = 2 * k if oversampling is None else oversampling
    block = min(k + p, rows, cols)
    rng = np.random.default_rng(seed)
    WT = W.T
    Q, _ = np.linalg.qr(W @ rng.standard_normal((cols, block)))
    s_old = U_old = None
    for _ in range(n_iter):
        Z, _ = np.linalg.qr(WT @ Q)
        Q, _ = np.linalg.qr(W @ Z)
        Ub, s, _ = np.linalg.svd(np.asarray(Q.T @ W), full_matrices=False)
        U = Q @ Ub[:, :k]
        if s_old is not None:
            scale = s[0] if s[0] > 0 else 1.0
            ds = np.max(np.abs(s[:k] - s_old[:k])) / scale
            # displacement of each Ritz vector (1 - |cos| would only be quadratic in it)
            signs = np.where(np.sum(U * U_old, axis=0) < 0, -1.0, 1.0)
            dv = np.max(np.linalg.norm(U - U_old * signs, axis=0))
            if ds < tol and dv < tol:
                break
        s_old, U_old = s, U
        if block == min(rows, cols):
            # the block spans the whole range: Rayleigh-Ritz is already exact
            break
    Ub, s, _ = np.linalg.svd(np.asarray(Q.T @ W), full_matrices=False)
    U = Q @ Ub[:, :k]
    s = s[:k]
    rank = int(np.sum(s > max(rows, cols) * np.finfo(float).eps * max(s[0], np.finfo(float).tiny)))
    if rank < k:
        warnings.warn(f"matrix rank {rank} is below k={k}; padding with zero columns",
                      RuntimeWarning, stacklevel=2)
        U[:, rank:] = 0.0
        s = np.where(np.arange(k) < rank, s, 0.0)
    U = _fix_signs(np.ascontiguousarray(U))
    theta = ProjectionMatrix(U, language, "scl")
    return (theta, s) if return_singular_values else theta


def build_projection(source_unlabeled: Corpus, target_unlabeled: Corpus,
                     pivots: Sequence[PivotPair], vocab_s: Vocabulary, vocab_t: Vocabulary,
                     k: int = 100, **aux_options) -> ProjectionMatrix:
    W = train_auxiliary_predictors(source_unlabeled, target_unlabeled, pivots,
                                   vocab_s, vocab_t, **aux_options)
    k = min(k, *W.shape)
    language = f"{source_unlabeled.language}+{target_unlabeled.language}"
    return truncated_svd(W, k, language=language)


def document_matrix(corpus: Corpus, vocab: Vocabulary, side: str, vocab_s: Vocabulary,
                    vocab_t: Vocabulary) -> sp.csr_matrix:
    """tf-idf rows of ``corpus`` placed in the concatenated bilingual column space."""
    n_cols = len(vocab_s) + len(vocab_t)
    offset = 0 if side == "source" else len(vocab_s)
    return tfidf_matrix(corpus, vocab, offset=offset, n_cols=n_cols)
