"""Pivot selection: mutual information ranking, a budgeted translation oracle,
support and prevalence-drift filtering."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .corpus import Corpus
from .vectorizer import document_frequencies

log = logging.getLogger(__name__)


class OracleBudgetExhausted(RuntimeError):
    pass


class PivotSelectionError(RuntimeError):
    """Not enough pivots could be selected; ``pivots`` holds those found so far."""

    def __init__(self, message: str, pivots: list["PivotPair"]):
        super().__init__(f"{message} ({len(pivots)} pivots found so far)")
        self.pivots = pivots


@dataclass
class TranslationOracle:
    dictionary: Mapping[str, str]
    budget: int
    calls_used: int = field(default=0)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be >= 0")

    @property
    def remaining(self) -> int:
        return self.budget - self.calls_used

    def translate(self, term: str) -> Optional[str]:
        """One charged lookup; ``None`` when the dictionary has no entry."""
        if self.calls_used >= self.budget:
            raise OracleBudgetExhausted(f"translation budget of {self.budget} calls exhausted")
        self.calls_used += 1
        return self.dictionary.get(term)


@dataclass(frozen=True)
class PivotPair:
    source_term: str
    target_term: str
    mi_score: float

    def __post_init__(self):
        if not self.source_term or not self.target_term:
            raise ValueError("pivot terms must be non-empty")
        if not self.mi_score >= 0:
            raise ValueError("mi_score must be >= 0")


def mi_from_counts(n11, n10, n01, n00) -> np.ndarray:
    """MI in bits between term presence and class from 2x2 contingency counts.

    ``n11`` = term & positive, ``n10`` = term & negative, ``n01`` = no term &
    positive, ``n00`` = no term & negative.  Zero cells contribute nothing.
    """
    cells = [np.asarray(c, dtype=float) for c in (n11, n10, n01, n00)]
    n = sum(cells)
    p_t = (cells[0] + cells[1]) / n
    p_pos = (cells[0] + cells[2]) / n
    marg = [(p_t, p_pos), (p_t, 1 - p_pos), (1 - p_t, p_pos), (1 - p_t, 1 - p_pos)]
    total = np.zeros(np.broadcast(*cells).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for c, (pa, pb) in zip(cells, marg):
            p = c / n
            term = p * np.log2(p / (pa * pb))
            total = total + np.where(p > 0, term, 0.0)
    # rounding can leave tiny negatives for independent variables
    return np.maximum(total, 0.0)


def _contingency(corpus: Corpus):
    y = corpus.label_array()
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    pos_df: dict[str, int] = {}
    neg_df: dict[str, int] = {}
    for doc, label in zip(corpus.documents, y):
        bucket = pos_df if label else neg_df
        for t in doc.terms:
            bucket[t] = bucket.get(t, 0) + 1
    return pos_df, neg_df, n_pos, n_neg


def mutual_information(term: str, corpus: Corpus) -> float:
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    y = corpus.label_array()
    has = np.fromiter((term in d.terms for d in corpus.documents), dtype=bool, count=len(corpus))
    pos = y == 1
    return float(mi_from_counts((has & pos).sum(), (has & ~pos).sum(),
                                (~has & pos).sum(), (~has & ~pos).sum()))


def mutual_information_scores(corpus: Corpus, terms=None) -> dict[str, float]:
    """MI of every term (default: every term of ``corpus``) with the class label."""
    pos_df, neg_df, n_pos, n_neg = _contingency(corpus)
    if terms is None:
        terms = set(pos_df) | set(neg_df)
    terms = list(terms)
    n11 = np.array([pos_df.get(t, 0) for t in terms], dtype=float)
    n10 = np.array([neg_df.get(t, 0) for t in terms], dtype=float)
    mi = mi_from_counts(n11, n10, n_pos - n11, n_neg - n10)
    return dict(zip(terms, mi.tolist()))


def drift_ratio(f_s: float, f_t: float) -> float:
    hi = max(f_s, f_t)
    return min(f_s, f_t) / hi if hi > 0 else 0.0


def select_pivots(source_labeled: Corpus, source_unlabeled: Corpus, target_unlabeled: Corpus,
                  oracle: TranslationOracle, m: int = 450, phi: int = 30,
                  drift_threshold: float = 0.5) -> list[PivotPair]:
    """Pick ``m`` translation-equivalent pivots.

    Candidates are source terms with document frequency >= ``phi`` in
    ``source_unlabeled``, ranked by MI with the class on ``source_labeled``
    (ties: lexicographic).  Each examined candidate costs one oracle call.
    """
    if m < 1 or phi < 1:
        raise ValueError("m and phi must be >= 1")
    if not 0 <= drift_threshold <= 1:
        raise ValueError("drift_threshold must lie in [0, 1]")
    df_s = document_frequencies(source_unlabeled)
    df_t = document_frequencies(target_unlabeled)
    n_s, n_t = len(source_unlabeled), len(target_unlabeled)
    candidates = [t for t, f in df_s.items() if f >= phi]
    mi = mutual_information_scores(source_labeled, candidates)
    candidates.sort(key=lambda t: (-mi[t], t))

    pivots: list[PivotPair] = []
    rejected = {"untranslated": 0, "support": 0, "drift": 0}
    for term in candidates:
        if len(pivots) == m:
            break
        try:
            translation = oracle.translate(term)
        except OracleBudgetExhausted as err:
            raise PivotSelectionError(str(err), pivots) from None
        if translation is None:
            rejected["untranslated"] += 1
            continue
        if df_t.get(translation, 0) < phi:
            rejected["support"] += 1
            continue
        if drift_ratio(df_s[term] / n_s, df_t[translation] / n_t) < drift_threshold:
            rejected["drift"] += 1
            continue
        pivots.append(PivotPair(term, translation, mi[term]))
    if len(pivots) < m:
        raise PivotSelectionError(
            f"only {len(candidates)} candidates with support >= {phi}; rejections {rejected}",
            pivots,
        )
    log.info("selected %d pivots with %d oracle calls; rejections %s",
             len(pivots), oracle.calls_used, rejected)
    return pivots


def write_pivots(pivots, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pivots:
            fh.write(f"{p.source_term}\t{p.target_term}\t{p.mi_score!r}\n")


def read_pivots(path) -> list[PivotPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s, t, score = line.rstrip("\n").split("\t")
            out.append(PivotPair(s, t, float(score)))
    return out
