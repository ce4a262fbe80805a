"""Vocabularies and sublinear tf-idf bag-of-words vectors."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Document


class EmptyVocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    term_to_index: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int

    def __len__(self) -> int:
        return len(self.term_to_index)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index

    def index(self, term: str) -> int:
        return self.term_to_index[term]

    @property
    def terms(self) -> list[str]:
        out = [""] * len(self.term_to_index)
        for t, i in self.term_to_index.items():
            out[i] = t
        return out

    @property
    def idf(self) -> np.ndarray:
        return np.log(self.n_docs / self.doc_freq)


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    weights: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        w = np.asarray(self.weights, dtype=float)
        if idx.ndim != 1 or idx.shape != w.shape:
            raise ValueError("indices and weights must be 1-d and equally long")
        if len(idx) and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("indices must be strictly increasing and within [0, dim)")
        if np.any(w == 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonzero")

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.weights.tolist()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.weights))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.weights
        return out

    @classmethod
    def zeros(cls, dim: int) -> "SparseVector":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0), dim)


def build_vocabulary(corpora: Sequence[Corpus] | Corpus, min_df: int = 1) -> Vocabulary:
    """Index every term occurring in at least ``min_df`` documents of ``corpora``.

    Indices follow lexicographic term order.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    df: Counter = Counter()
    n_docs = 0
    for corpus in corpora:
        for doc in corpus.documents:
            df.update(doc.terms.keys())
        n_docs += len(corpus)
    kept = sorted(t for t, f in df.items() if f >= min_df)
    if not kept:
        raise EmptyVocabularyError(f"no term reaches min_df={min_df} over {n_docs} documents")
    return Vocabulary({t: i for i, t in enumerate(kept)},
                      np.array([df[t] for t in kept], dtype=np.int64), n_docs)


def _tfidf_entries(doc: Document, vocab: Vocabulary, idf: np.ndarray):
    idx, w = [], []
    for term, count in doc.terms.items():
        j = vocab.term_to_index.get(term)
        if j is None:
            continue
        weight = (1.0 + math.log(count)) * idf[j]
        if weight != 0.0:
            idx.append(j)
            w.append(weight)
    idx = np.asarray(idx, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    order = np.argsort(idx)
    idx, w = idx[order], w[order]
    norm = np.linalg.norm(w)
    if norm > 0:
        w = w / norm
    return idx, w


def tfidf_vectorize(doc: Document, vocab: Vocabulary) -> SparseVector:
    """(1 + ln tf) * ln(N / df), L2-normalized; out-of-vocabulary terms are dropped."""
    idx, w = _tfidf_entries(doc, vocab, vocab.idf)
    return SparseVector(idx, w, len(vocab))


def tfidf_matrix(corpus: Corpus, vocab: Vocabulary, *, offset: int = 0,
                 n_cols: int | None = None) -> sp.csr_matrix:
    """Row-stack of :func:`tfidf_vectorize` over a corpus.

    ``offset``/``n_cols`` place the vocabulary inside a wider (e.g. concatenated
    bilingual) column space.
    """
    idf = vocab.idf
    n_cols = len(vocab) + offset if n_cols is None else n_cols
    indptr, indices, data = [0], [], []
    for doc in corpus.documents:
        idx, w = _tfidf_entries(doc, vocab, idf)
        indices.append(idx + offset)
        data.append(w)
        indptr.append(indptr[-1] + len(idx))
    return sp.csr_matrix(
        (np.concatenate(data) if data else np.zeros(0),
         np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
         np.asarray(indptr)),
        shape=(len(corpus), n_cols),
    )


def incidence_matrix(corpus: Corpus, vocab: Vocabulary, *, offset: int = 0,
                     n_cols: int | None = None) -> sp.csr_matrix:
    """Binary document x term presence matrix (float64 ones)."""
    n_cols = len(vocab) + offset if n_cols is None else n_cols
    rows, cols = [], []
    t2i = vocab.term_to_index
    for i, doc in enumerate(corpus.documents):
        js = [t2i[t] for t in doc.terms if t in t2i]
        rows.extend([i] * len(js))
        cols.extend(js)
    cols = np.asarray(cols, dtype=np.int64) + offset
    m = sp.csr_matrix((np.ones(len(cols)), (np.asarray(rows, dtype=np.int64), cols)),
                      shape=(len(corpus), n_cols))
    m.sort_indices()
    return m


def document_frequencies(corpora: Iterable[Corpus] | Corpus) -> Counter:
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    df: Counter = Counter()
    for corpus in corpora:
        for doc in corpus.documents:
            df.update(doc.terms.keys())
    return df
