"""Bag-of-words corpora: the processed line format, loading, and a synthetic
bilingual benchmark with a known vocabulary correspondence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

LABEL_FIELD = "#label#:"


class CorpusFormatError(ValueError):
    """Raised for lines or files that do not follow the processed corpus format."""

    def __init__(self, message: str, lineno: Optional[int] = None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"line {lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class Label(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1

    @property
    def tag(self) -> str:
        return "positive" if self is Label.POSITIVE else "negative"

    @classmethod
    def from_tag(cls, tag: str) -> "Label":
        if tag == "positive":
            return cls.POSITIVE
        if tag == "negative":
            return cls.NEGATIVE
        raise ValueError(f"unknown label {tag!r}")


@dataclass(frozen=True)
class Document:
    id: str
    terms: dict[str, int]

    def __post_init__(self):
        for term, count in self.terms.items():
            if not term:
                raise ValueError(f"document {self.id}: empty term")
            if count < 1:
                raise ValueError(f"document {self.id}: count for {term!r} is {count}")


@dataclass(frozen=True)
class Corpus:
    language: str
    domain: str
    documents: list[Document]
    labels: Optional[list[Label]] = None
    _ids: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.language or not self.domain:
            raise ValueError("corpus language and domain must be non-empty")
        if self.labels is not None and len(self.labels) != len(self.documents):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.documents)} documents"
            )
        ids = frozenset(d.id for d in self.documents)
        if len(ids) != len(self.documents):
            raise ValueError("duplicate document ids in corpus")
        object.__setattr__(self, "_ids", ids)

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def label_array(self) -> np.ndarray:
        """Labels as an int array of 0/1 (raises on an unlabeled corpus)."""
        if self.labels is None:
            raise ValueError(f"corpus {self.language}/{self.domain} is unlabeled")
        return np.fromiter((int(y) for y in self.labels), dtype=np.int64, count=len(self.labels))


def parse_processed_line(line: str, lineno: Optional[int] = None) -> tuple[Document, Optional[Label]]:
    """Parse one ``token:count ... [#label#:positive|negative]`` line.

    The count is whatever follows the *last* colon, so tokens may contain colons.
    """
    fields = line.split()
    label = None
    if fields and fields[-1].startswith(LABEL_FIELD):
        tag = fields.pop()[len(LABEL_FIELD):]
        try:
            label = Label.from_tag(tag)
        except ValueError:
            raise CorpusFormatError(f"unknown label {tag!r}", lineno) from None
    if not fields:
        raise CorpusFormatError("empty document", lineno)
    terms: dict[str, int] = {}
    for f in fields:
        token, sep, raw = f.rpartition(":")
        if not sep or not token:
            raise CorpusFormatError(f"field {f!r} is not token:count", lineno)
        try:
            count = int(raw)
        except ValueError:
            raise CorpusFormatError(f"malformed count in {f!r}", lineno) from None
        if count < 1:
            raise CorpusFormatError(f"count < 1 in {f!r}", lineno)
        if token in terms:
            raise CorpusFormatError(f"duplicate token {token!r}", lineno)
        terms[token] = count
    doc_id = f"line-{lineno}" if lineno is not None else "line"
    return Document(doc_id, terms), label


def format_processed_line(doc: Document, label: Optional[Label] = None) -> str:
    parts = [f"{t}:{c}" for t, c in doc.terms.items()]
    if label is not None:
        parts.append(LABEL_FIELD + Label(label).tag)
    return " ".join(parts)


def load_corpus(path, language: str, domain: str) -> Corpus:
    path = Path(path)
    docs, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                doc, label = parse_processed_line(line, lineno)
            except CorpusFormatError as err:
                raise CorpusFormatError(str(err), lineno, path) from None
            docs.append(Document(f"{path.stem}-{lineno}", doc.terms))
            labels.append(label)
    if not docs:
        raise CorpusFormatError("empty corpus file", path=path)
    n_labeled = sum(y is not None for y in labels)
    if 0 < n_labeled < len(labels):
        raise CorpusFormatError(
            f"mixed labeling ({n_labeled} of {len(labels)} lines labeled)", path=path
        )
    return Corpus(language, domain, docs, labels if n_labeled else None)


def write_corpus(corpus: Corpus, path) -> None:
    labels = corpus.labels if corpus.labels is not None else [None] * len(corpus)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc, y in zip(corpus.documents, labels):
            fh.write(format_processed_line(doc, y) + "\n")


def load_dictionary(path) -> dict[str, str]:
    """Read ``source<TAB>target`` pairs; later duplicates of a source term are errors."""
    path = Path(path)
    pairs: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusFormatError("expected source<TAB>target", lineno, path)
            if parts[0] in pairs:
                raise CorpusFormatError(f"duplicate source term {parts[0]!r}", lineno, path)
            pairs[parts[0]] = parts[1]
    return pairs


def write_dictionary(pairs: Iterable[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, t in pairs:
            fh.write(f"{s}\t{t}\n")


@dataclass(frozen=True)
class SyntheticBilingual:
    source_labeled: Corpus
    source_unlabeled: Corpus
    target_unlabeled: Corpus
    target_test: Corpus
    dictionary: list[tuple[str, str]]

    def __iter__(self):
        # unpacks as the 5-tuple (src_lab, src_unlab, tgt_unlab, tgt_test, dictionary)
        return iter((self.source_labeled, self.source_unlabeled, self.target_unlabeled,
                     self.target_test, self.dictionary))


def class_conditional_distributions(rng: np.random.Generator, vocab_size: int,
                                    polar_fraction: float = 0.3,
                                    polarity_scale: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    """Two term distributions sharing a Zipf-like backbone.

    A random subset of terms carries a polarity s ~ N(0, 1); the positive class
    reweights each term by exp(scale * s), the negative class by exp(-scale * s).
    """
    ranks = rng.permutation(vocab_size)
    base = 1.0 / (ranks + 10.0)
    polarity = np.where(rng.random(vocab_size) < polar_fraction,
                        rng.standard_normal(vocab_size), 0.0)
    pos = base * np.exp(polarity_scale * polarity)
    neg = base * np.exp(-polarity_scale * polarity)
    return pos / pos.sum(), neg / neg.sum()


def _sample_docs(rng, names, dists, labels, prefix, mean_length):
    n = len(labels)
    lengths = 10 + rng.poisson(mean_length - 10, size=n)
    counts = np.empty((n, len(names)), dtype=np.int64)
    for y in (0, 1):
        rows = np.flatnonzero(labels == y)
        counts[rows] = rng.multinomial(lengths[rows], dists[y])
    docs = []
    for i in range(n):
        nz = np.flatnonzero(counts[i])
        docs.append(Document(f"{prefix}-{i:06d}", {names[j]: int(counts[i, j]) for j in nz}))
    return docs


def _balanced_labels(rng, n):
    labels = np.zeros(n, dtype=np.int64)
    labels[: (n + 1) // 2] = 1
    return rng.permutation(labels)


def generate_synthetic_bilingual(seed: int, n_labeled: int = 2000, n_unlabeled: int = 10000,
                                 vocab_size: int = 2000, *, mean_length: int = 60,
                                 source_language: str = "src", target_language: str = "tgt",
                                 domain: str = "synthetic") -> SyntheticBilingual:
    """Generate a source/target benchmark where the target language is a pure
    renaming (``s_i`` -> ``t_i``) of the source vocabulary.

    Returns, in order: labeled source training set, unlabeled source set,
    unlabeled target set, labeled target test pool (``n_labeled`` documents)
    and the dictionary pairs.  Unlabeled sets are class-balanced mixtures.
    """
    if vocab_size < 20:
        raise ValueError("vocab_size must be >= 20")
    if n_labeled < 1 or n_unlabeled < 1:
        raise ValueError("corpus sizes must be >= 1")
    rng = np.random.default_rng(seed)
    dists = class_conditional_distributions(rng, vocab_size)
    src_names = [f"s_{i}" for i in range(vocab_size)]
    tgt_names = [f"t_{i}" for i in range(vocab_size)]

    def make(names, lang, split, n, labeled):
        y = _balanced_labels(rng, n)
        docs = _sample_docs(rng, names, dists, y, f"{lang}-{split}", mean_length)
        labels = [Label(int(v)) for v in y] if labeled else None
        return Corpus(lang, domain, docs, labels)

    src_lab = make(src_names, source_language, "train", n_labeled, True)
    src_unl = make(src_names, source_language, "unlabeled", n_unlabeled, False)
    tgt_unl = make(tgt_names, target_language, "unlabeled", n_unlabeled, False)
    tgt_test = make(tgt_names, target_language, "test", n_labeled, True)
    return SyntheticBilingual(src_lab, src_unl, tgt_unl, tgt_test, list(zip(src_names, tgt_names)))
