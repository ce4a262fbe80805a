"""Quantification error measures, the artificial-prevalence protocol (APP),
paired Wilcoxon signed-rank tests and the results/summary TSV files."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .corpus import Corpus
from .quantifiers import PrevalenceEstimate

DEFAULT_LEVELS = (0.01,) + tuple(round(0.05 * i, 2) for i in range(1, 20)) + (0.99,)
METRICS = ("ae", "rae", "kld")
RESULTS_HEADER = ("method", "level_index", "sample_index", "true_prev", "est_prev",
                  "ae", "rae", "kld", "degenerate_flag")

SIGNIFICANCE_LEVELS = (0.05, 0.005)


class ResultsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Distribution2:
    p_pos: float

    def __post_init__(self):
        if not 0.0 <= self.p_pos <= 1.0:
            raise ValueError(f"p_pos={self.p_pos} outside [0, 1]")

    @property
    def p_neg(self) -> float:
        return 1.0 - self.p_pos

    def as_array(self) -> np.ndarray:
        return np.array([self.p_pos, 1.0 - self.p_pos])


def _p(x) -> float:
    if isinstance(x, (Distribution2, PrevalenceEstimate)):
        return x.p_pos
    return float(x)


def smooth(p_pos: float, sample_size: int) -> np.ndarray:
    """Additive smoothing (p + eps) / (1 + 2 eps) with eps = 1 / (2 n), both classes."""
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    eps = 1.0 / (2 * sample_size)
    return (np.array([p_pos, 1.0 - p_pos]) + eps) / (1 + 2 * eps)


def ae(true, est) -> float:
    t, e = _p(true), _p(est)
    # mean over both classes: |e - t| and |(1-e) - (1-t)|
    return abs(e - t)


def rae(true, est, sample_size: int) -> float:
    t = smooth(_p(true), sample_size)
    e = smooth(_p(est), sample_size)
    return float(np.mean(np.abs(e - t) / t))


def kld(true, est, sample_size: int) -> float:
    t = smooth(_p(true), sample_size)
    e = smooth(_p(est), sample_size)
    return float(max(np.sum(t * np.log(t / e)), 0.0))


@dataclass(frozen=True)
class SampleSpec:
    level_index: int
    sample_index: int
    prevalence: float
    document_ids: list[str]
    indices: np.ndarray = field(repr=False)
    seed: int = 0

    @property
    def size(self) -> int:
        return len(self.indices)


def positives_for(prevalence: float, n: int) -> int:
    """round(prevalence * n), halves rounded up."""
    return int(math.floor(prevalence * n + 0.5))


def sample_seed(base_seed: int, level_index: int, sample_index: int) -> int:
    """Stable 64-bit seed for one protocol sample (independent of process and order)."""
    ss = np.random.SeedSequence([int(base_seed), int(level_index), int(sample_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _draw(labels: np.ndarray, prevalence: float, n: int, seed: int) -> np.ndarray:
    k = positives_for(prevalence, n)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) < k:
        raise ValueError(f"pool has {len(pos)} positive documents, sample needs {k}")
    if len(neg) < n - k:
        raise ValueError(f"pool has {len(neg)} negative documents, sample needs {n - k}")
    rng = np.random.default_rng(seed)
    idx = np.concatenate([rng.choice(pos, k, replace=False), rng.choice(neg, n - k, replace=False)])
    return rng.permutation(idx)


def app_sample(pool: Corpus, prevalence: float, n: int, seed: int, *,
               level_index: int = 0, sample_index: int = 0) -> SampleSpec:
    """Draw ``round(prevalence*n)`` positives and the rest negatives, without replacement."""
    if not 0.0 <= prevalence <= 1.0:
        raise ValueError("prevalence must lie in [0, 1]")
    if n < 1:
        raise ValueError("sample size must be >= 1")
    idx = _draw(pool.label_array(), prevalence, n, seed)
    return SampleSpec(level_index, sample_index, prevalence,
                      [pool.documents[i].id for i in idx], idx, seed)


@dataclass(frozen=True)
class SampleRecord:
    method: str
    level_index: int
    sample_index: int
    true_prev: float
    est_prev: float
    ae: float
    rae: float
    kld: float
    degenerate: bool = False


@dataclass
class ProtocolResult:
    records: list[SampleRecord]

    def methods(self) -> list[str]:
        return sorted({r.method for r in self.records})

    def for_method(self, method: str) -> list[SampleRecord]:
        return sorted((r for r in self.records if r.method == method),
                      key=lambda r: (r.level_index, r.sample_index))

    def values(self, method: str, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.for_method(method)])

    def mean(self, method: str, metric: str) -> float:
        return float(self.values(method, metric).mean())


Estimator = Callable[[SampleSpec], "PrevalenceEstimate | float"]


def run_protocol(estimators: Mapping[str, Estimator], pool: Corpus, base_seed: int, *,
                 levels: Sequence[float] = DEFAULT_LEVELS, samples_per_level: int = 100,
                 sample_size: int = 200) -> ProtocolResult:
    """Evaluate every estimator on the same ``len(levels) * samples_per_level`` samples.

    Each sample is seeded from (base_seed, level, index), so all estimators see
    identical samples and the output does not depend on evaluation order.
    """
    labels = pool.label_array()
    records = []
    for li, prev in enumerate(levels):
        for si in range(samples_per_level):
            seed = sample_seed(base_seed, li, si)
            idx = _draw(labels, prev, sample_size, seed)
            spec = SampleSpec(li, si, prev, [pool.documents[i].id for i in idx], idx, seed)
            true_prev = float(labels[idx].mean())
            for name, est in estimators.items():
                out = est(spec)
                degenerate = bool(getattr(out, "degenerate", False))
                p = _p(out)
                records.append(SampleRecord(
                    name, li, si, true_prev, p, ae(true_prev, p),
                    rae(true_prev, p, sample_size), kld(true_prev, p, sample_size), degenerate))
    records.sort(key=lambda r: (r.method, r.level_index, r.sample_index))
    return ProtocolResult(records)


# --- significance -----------------------------------------------------------

def _exact_two_sided(ranks2: np.ndarray, w2: int) -> float:
    """P(min(W+, W-) <= W) over all sign assignments; ranks and W are doubled to integers."""
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    s = np.arange(total + 1)
    hit = np.minimum(s, total - s) <= w2
    return float(counts[hit].sum() / counts.sum())


def wilcoxon_signed_rank(a, b, *, exact_limit: int = 25) -> tuple[float, float]:
    """Two-sided paired Wilcoxon signed-rank test, returns (W, p).

    Zero differences are dropped and tied |differences| share mean ranks.
    W = min(W+, W-).  Up to ``exact_limit`` nonzero pairs the p-value is exact
    (full distribution of W+ over sign flips, ties included); beyond that a
    normal approximation with tie and continuity correction is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and equally long")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return 0.0, 1.0
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if n <= exact_limit:
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        return w, min(1.0, _exact_two_sided(ranks2, int(round(2 * w))))
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
    if var <= 0:
        return w, 1.0
    z = (w - mean + 0.5) / math.sqrt(var)
    return w, min(1.0, math.erfc(-z / math.sqrt(2)))


def significance_mark(p_value: float) -> str:
    """Dagger convention against the best method.

    "†": not significantly different at alpha = 0.05; "††": only at
    alpha = 0.005; "" otherwise.
    """
    if p_value > SIGNIFICANCE_LEVELS[0]:
        return "†"
    if p_value > SIGNIFICANCE_LEVELS[1]:
        return "††"
    return ""


# --- files --------------------------------------------------------------------

def write_results(result: ProtocolResult | Sequence[SampleRecord], path) -> None:
    records = result.records if isinstance(result, ProtocolResult) else result
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(RESULTS_HEADER) + "\n")
        for r in records:
            fh.write(f"{r.method}\t{r.level_index}\t{r.sample_index}\t{r.true_prev:.6f}\t"
                     f"{r.est_prev:.6f}\t{r.ae:.6f}\t{r.rae:.6f}\t{r.kld:.6f}\t{int(r.degenerate)}\n")


def read_results(path) -> list[SampleRecord]:
    path = Path(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != RESULTS_HEADER:
            raise ResultsFormatError(f"{path}: line 1: unexpected header {header}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(RESULTS_HEADER):
                raise ResultsFormatError(f"{path}: line {lineno}: expected {len(RESULTS_HEADER)} fields")
            try:
                flag = int(parts[8])
                if flag not in (0, 1):
                    raise ValueError(parts[8])
                out.append(SampleRecord(parts[0], int(parts[1]), int(parts[2]),
                                        *(float(x) for x in parts[3:8]), bool(flag)))
            except ValueError as err:
                raise ResultsFormatError(f"{path}: line {lineno}: {err}") from None
    return out


def _rounded(records: Sequence[SampleRecord]) -> list[SampleRecord]:
    # summaries are computed from what the results file holds
    return [SampleRecord(r.method, r.level_index, r.sample_index,
                         *(float(f"{getattr(r, m):.6f}") for m in
                           ("true_prev", "est_prev", "ae", "rae", "kld")), r.degenerate)
            for r in records]


@dataclass(frozen=True)
class SummaryRow:
    method: str
    n_samples: int
    n_degenerate: int
    means: dict
    marks: dict
    p_values: dict


def summarize(records: Sequence[SampleRecord]) -> list[SummaryRow]:
    """Per-method means, the best (lowest-mean) method per metric and dagger marks.

    Other methods are compared with the best one by a paired Wilcoxon test over
    the samples both were evaluated on.
    """
    records = _rounded(records)
    by_method: dict[str, dict[tuple[int, int], SampleRecord]] = defaultdict(dict)
    for r in records:
        key = (r.level_index, r.sample_index)
        if key in by_method[r.method]:
            raise ResultsFormatError(f"duplicate record for {r.method} sample {key}")
        by_method[r.method][key] = r
    methods = sorted(by_method)
    means = {m: {k: float(np.mean([getattr(r, k) for r in by_method[m].values()]))
                 for k in METRICS} for m in methods}
    marks = {m: {} for m in methods}
    pvals = {m: {} for m in methods}
    for metric in METRICS:
        best = min(methods, key=lambda m: (means[m][metric], m))
        for m in methods:
            if m == best:
                marks[m][metric], pvals[m][metric] = "best", 1.0
                continue
            keys = sorted(set(by_method[m]) & set(by_method[best]))
            a = [getattr(by_method[m][k], metric) for k in keys]
            b = [getattr(by_method[best][k], metric) for k in keys]
            _, p = wilcoxon_signed_rank(a, b) if keys else (0.0, 0.0)
            marks[m][metric], pvals[m][metric] = significance_mark(p), p
    return [SummaryRow(m, len(by_method[m]), sum(r.degenerate for r in by_method[m].values()),
                       means[m], marks[m], pvals[m]) for m in methods]


SUMMARY_HEADER = ("method", "n_samples", "n_degenerate") + tuple(
    f"{m}{s}" for m in METRICS for s in ("", "_mark", "_p"))


def write_summary(rows: Sequence[SummaryRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(SUMMARY_HEADER) + "\n")
        for row in rows:
            cells = [row.method, str(row.n_samples), str(row.n_degenerate)]
            for m in METRICS:
                cells += [f"{row.means[m]:.6f}", row.marks[m], f"{row.p_values[m]:.6g}"]
            fh.write("\t".join(cells) + "\n")


def format_table(rows: Sequence[SummaryRow]) -> str:
    """Plain-text comparison table; the best entry per metric is starred."""
    width = max([len("method")] + [len(r.method) for r in rows])
    lines = [f"{'method':<{width}}  " + "  ".join(f"{m.upper():>12}" for m in METRICS)]
    for r in rows:
        cells = []
        for m in METRICS:
            mark = "*" if r.marks[m] == "best" else r.marks[m]
            cells.append(f"{r.means[m]:>9.4f}{mark:<3}")
        lines.append(f"{r.method:<{width}}  " + "  ".join(cells))
    lines.append("* best; † not significantly different from best at alpha=0.05; "
                 "†† at alpha=0.005 (Wilcoxon signed-rank, paired samples)")
    return "\n".join(lines)
