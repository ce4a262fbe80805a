"""Experiment configuration and the end-to-end pipeline:
ingest -> vocabularies -> pivots -> projection -> classifiers -> rates ->
quantifiers -> APP protocol -> results and summary files.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
import logging
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from . import dci, scl
from .corpus import Corpus, load_corpus, load_dictionary
from .evaluation import (DEFAULT_LEVELS, ProtocolResult, SampleSpec, run_protocol, summarize,
                         write_results, write_summary)
from .learner import TrainConfig, cross_val_predictions, grid_search_C, train
from .pivots import TranslationOracle, read_pivots, select_pivots, write_pivots
from .projection import load_projection, project_rows, save_projection
from .quantifiers import METHODS, RateEstimates, estimate_rates, make_quantifier
from .vectorizer import Vocabulary, build_vocabulary, tfidf_matrix

log = logging.getLogger(__name__)

PATH_KEYS = ("source_labeled", "source_unlabeled", "target_unlabeled", "target_test", "dictionary")
PROJECTIONS = ("scl", "dci")
SCALINGS = ("auto", "l2", "standardize", "none")


class ConfigError(ValueError):
    """Bad configuration or missing/unreadable input file (exit code 2)."""


class PipelineError(RuntimeError):
    """A pipeline stage failed (exit code 1)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class ExperimentConfig:
    source_labeled: Optional[Path] = None
    source_unlabeled: Optional[Path] = None
    target_unlabeled: Optional[Path] = None
    target_test: Optional[Path] = None
    dictionary: Optional[Path] = None
    source_language: str = "source"
    target_language: str = "target"
    domain: str = "default"
    projection: str = "both"
    methods: tuple = METHODS
    pivots: int = 450
    min_support: int = 30
    k: int = 100
    alpha: float = 0.85
    drift_threshold: float = 0.5
    oracle_budget: Optional[int] = None
    min_df: int = 3
    scl_iterations: int = 30
    feature_scaling: str = "auto"
    levels: tuple = DEFAULT_LEVELS
    samples_per_level: int = 100
    sample_size: int = 200
    seed: int = 0
    folds_rates: int = 10
    folds_grid: int = 5
    jobs: int = 1
    out: Path = Path("results")
    cache: bool = True
    cache_dir: Optional[Path] = None

    @property
    def budget(self) -> int:
        return 10 * self.pivots if self.oracle_budget is None else self.oracle_budget

    @property
    def projections(self) -> tuple[str, ...]:
        return PROJECTIONS if self.projection == "both" else (self.projection,)

    def validate(self) -> "ExperimentConfig":
        for key in ("pivots", "min_support", "k", "min_df", "scl_iterations", "samples_per_level",
                    "sample_size", "folds_rates", "folds_grid", "jobs"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.feature_scaling not in SCALINGS:
            raise ConfigError(f"feature_scaling must be one of {SCALINGS}")
        if self.projection not in PROJECTIONS + ("both",):
            raise ConfigError(f"projection must be scl, dci or both, got {self.projection!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown methods {bad}; choose from {','.join(METHODS)}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")
        if not 0 <= self.drift_threshold <= 1:
            raise ConfigError("drift_threshold must lie in [0, 1]")
        if self.budget < 1:
            raise ConfigError("oracle_budget must be positive")
        if any(not 0 <= p <= 1 for p in self.levels) or not self.levels:
            raise ConfigError("levels must be prevalences in [0, 1]")
        for key in PATH_KEYS:
            p = getattr(self, key)
            if p is None:
                raise ConfigError(f"no path configured for {key}")
            if not Path(p).is_file():
                raise ConfigError(f"{key}: no such file: {p}")
        return self


def _coerce(name: str, raw: str):
    """Convert a textual config value to the type of the matching field."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if name not in fields:
        raise ConfigError(f"unknown config key {name!r}")
    default = fields[name].default
    try:
        if name in PATH_KEYS or name in ("out", "cache_dir"):
            return Path(raw)
        if name == "methods":
            return tuple(m.strip().lower() for m in raw.split(",") if m.strip())
        if name == "levels":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if name == "oracle_budget":
            return None if raw.lower() in ("", "none") else int(raw)
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: no such file: {path}")
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key = key.strip().replace("-", "_")
            value = _coerce(key, raw.strip())
            if isinstance(value, Path) and not value.is_absolute():
                value = path.parent / value
            values[key] = value
    return values


def make_config(config_path=None, **overrides) -> ExperimentConfig:
    values = read_config(config_path) if config_path else {}
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, str):
            value = _coerce(key, value)
        values[key] = value
    try:
        return ExperimentConfig(**values)
    except TypeError as err:
        raise ConfigError(str(err)) from None


def write_config(values: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in values.items():
            if isinstance(value, (tuple, list)):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key} = {value}\n")


# --- stage cache ------------------------------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stage_key(*parts) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).hexdigest()[:20]


class StageCache:
    """Content-addressed stage directories under ``root``; ``None`` disables caching."""

    def __init__(self, root: Optional[Path]):
        self.root = Path(root) if root is not None else None

    def get(self, stage: str, key: str, compute: Callable[[Path], None], load: Callable[[Path], object]):
        if self.root is None:
            tmp = Path(tempfile.mkdtemp(prefix="cltq-"))
            try:
                compute(tmp)
                return load(tmp)
            finally:
                shutil.rmtree(tmp, ignore_errors=True)
        d = self.root / f"{stage}-{key}"
        if not (d / "DONE").exists():
            shutil.rmtree(d, ignore_errors=True)
            d.mkdir(parents=True)
            compute(d)
            (d / "DONE").write_text(key + "\n")
        else:
            log.info("stage %s: cached at %s", stage, d)
        return load(d)


def save_vocabulary(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"n_docs": vocab.n_docs, "terms": vocab.terms,
                   "doc_freq": vocab.doc_freq.tolist()}, fh)


def load_vocabulary(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return Vocabulary({t: i for i, t in enumerate(d["terms"])},
                      np.asarray(d["doc_freq"], dtype=np.int64), d["n_docs"])


# --- pipeline -------------------------------------------------------------------

@dataclass
class Corpora:
    source_labeled: Corpus
    source_unlabeled: Corpus
    target_unlabeled: Corpus
    target_test: Corpus
    dictionary: dict


@dataclass
class ClassifierOutputs:
    """Held-out rates and test-pool outputs for one projection."""
    projection: str
    hard_C: float
    soft_C: float
    rates: RateEstimates
    hard: np.ndarray
    soft: np.ndarray
    train_accuracy_cv: float = field(default=float("nan"))


def load_inputs(cfg: ExperimentConfig) -> Corpora:
    src, tgt, dom = cfg.source_language, cfg.target_language, cfg.domain
    try:
        corpora = Corpora(
            load_corpus(cfg.source_labeled, src, dom),
            load_corpus(cfg.source_unlabeled, src, dom),
            load_corpus(cfg.target_unlabeled, tgt, dom),
            load_corpus(cfg.target_test, tgt, dom),
            load_dictionary(cfg.dictionary),
        )
    except (OSError, ValueError) as err:
        raise PipelineError("ingest", str(err)) from err
    if not corpora.source_labeled.is_labeled or not corpora.target_test.is_labeled:
        raise PipelineError("ingest", "source training set and target test pool must be labeled")
    return corpora


def normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.where(norms == 0, 1.0, norms)


def scale_features(X_train: np.ndarray, X_test: np.ndarray, how: str):
    """l2: unit-length rows; standardize: z-scores with training-set statistics."""
    if how == "auto":
        raise ValueError("resolve 'auto' to a concrete scaling first")
    if how == "l2":
        return normalize_rows(X_train), normalize_rows(X_test)
    if how == "standardize":
        mu, sd = X_train.mean(axis=0), X_train.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return (X_train - mu) / sd, (X_test - mu) / sd
    return X_train, X_test


def _stage(name):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except (ValueError, RuntimeError, OSError, IndexError) as err:
                raise PipelineError(name, str(err)) from err
        return inner
    return wrap


@_stage("vectorize")
def build_vocabularies(c: Corpora, cfg: ExperimentConfig):
    return (build_vocabulary([c.source_labeled, c.source_unlabeled], cfg.min_df),
            build_vocabulary([c.target_unlabeled], cfg.min_df))


@_stage("pivots")
def choose_pivots(c: Corpora, cfg: ExperimentConfig):
    oracle = TranslationOracle(c.dictionary, cfg.budget)
    return select_pivots(c.source_labeled, c.source_unlabeled, c.target_unlabeled, oracle,
                         cfg.pivots, cfg.min_support, cfg.drift_threshold)


@_stage("project")
def build_features(projection: str, c: Corpora, pivots, vocab_s, vocab_t, cfg: ExperimentConfig,
                   cache: StageCache, key: str):
    """Projected, row-normalized (train, test) document matrices."""
    if projection == "dci":
        def compute(d):
            th_s, th_t = dci.build_projection(c.source_unlabeled, c.target_unlabeled, pivots,
                                              vocab_s, vocab_t)
            save_projection(th_s, d / "theta_source.tsv")
            save_projection(th_t, d / "theta_target.tsv")
        th_s, th_t = cache.get("dci", key, compute, lambda d: (
            load_projection(d / "theta_source.tsv"), load_projection(d / "theta_target.tsv")))
        X_train = project_rows(tfidf_matrix(c.source_labeled, vocab_s), th_s)
        X_test = project_rows(tfidf_matrix(c.target_test, vocab_t), th_t)
    else:
        def compute(d):
            theta = scl.build_projection(c.source_unlabeled, c.target_unlabeled, pivots,
                                         vocab_s, vocab_t, k=cfg.k, n_iter=cfg.scl_iterations)
            save_projection(theta, d / "theta.tsv")
        theta = cache.get("scl", key, compute, lambda d: load_projection(d / "theta.tsv"))
        X_train = project_rows(scl.document_matrix(c.source_labeled, vocab_s, "source", vocab_s, vocab_t), theta)
        X_test = project_rows(scl.document_matrix(c.target_test, vocab_t, "target", vocab_s, vocab_t), theta)
    how = cfg.feature_scaling
    if how == "auto":
        how = "standardize" if projection == "scl" else "l2"
    return scale_features(X_train, X_test, how)


@_stage("train")
def fit_classifiers(projection: str, X_train, y_train, X_test, cfg: ExperimentConfig,
                    cache: StageCache, key: str) -> ClassifierOutputs:
    hard_alpha = cfg.alpha if projection == "scl" else 0.0

    def compute(d):
        hard_C = grid_search_C(X_train, y_train, "hinge", cfg.folds_grid, alpha=hard_alpha,
                               seed=cfg.seed, jobs=cfg.jobs)
        soft_C = grid_search_C(X_train, y_train, "logistic", cfg.folds_grid, seed=cfg.seed, jobs=cfg.jobs)
        hard_cfg = TrainConfig("hinge", hard_C, hard_alpha)
        soft_cfg = TrainConfig("logistic", soft_C)
        cv = cross_val_predictions(X_train, y_train, hard_cfg, cfg.folds_rates, cfg.seed,
                                   soft_config=soft_cfg, jobs=cfg.jobs)
        rates = estimate_rates(cv)
        hard_model = train(X_train, y_train, hard_cfg)
        soft_model = train(X_train, y_train, soft_cfg)
        np.savez(d / "models.npz", hard_w=hard_model.weights, hard_b=hard_model.bias,
                 soft_w=soft_model.weights, soft_b=soft_model.bias)
        with open(d / "rates.json", "w", encoding="utf-8") as fh:
            json.dump({"hard_C": hard_C, "soft_C": soft_C, "cv_accuracy": float(np.mean(cv.hard == cv.labels)),
                       **dataclasses.asdict(rates)}, fh, indent=1)

    def load(d):
        with open(d / "rates.json", encoding="utf-8") as fh:
            info = json.load(fh)
        m = np.load(d / "models.npz")
        margin_h = X_test @ m["hard_w"] + float(m["hard_b"])
        margin_s = X_test @ m["soft_w"] + float(m["soft_b"])
        rates = RateEstimates(info["tpr_hard"], info["fpr_hard"], info["tpr_soft"], info["fpr_soft"])
        return ClassifierOutputs(projection, info["hard_C"], info["soft_C"], rates,
                                 (margin_h > 0).astype(np.int64), expit(margin_s),
                                 info["cv_accuracy"])

    return cache.get(f"learner-{projection}", key, compute, load)


def method_name(projection: str, method: str) -> str:
    return f"{projection.upper()}-{method.upper()}"


def make_estimators(outputs: ClassifierOutputs, methods) -> dict:
    estimators = {}
    for method in methods:
        q = make_quantifier(method, outputs.rates)

        def est(spec: SampleSpec, q=q):
            return q.quantify(outputs.hard[spec.indices], outputs.soft[spec.indices])
        estimators[method_name(outputs.projection, method)] = est
    return estimators


@dataclass
class RunOutput:
    result: ProtocolResult
    summary: list
    classifiers: dict
    results_path: Path
    summary_path: Path


def run_experiment(cfg: ExperimentConfig) -> RunOutput:
    cfg.validate()
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create output directory {out}: {err}") from None
    cache = StageCache((cfg.cache_dir or out / "cache") if cfg.cache else None)
    digests = {k: file_digest(getattr(cfg, k)) for k in PATH_KEYS}

    corpora = load_inputs(cfg)
    vocab_key = stage_key(digests, cfg.min_df)
    vocab_s, vocab_t = cache.get(
        "vocab", vocab_key,
        lambda d: [save_vocabulary(v, d / f"{side}.json")
                   for v, side in zip(build_vocabularies(corpora, cfg), ("source", "target"))],
        lambda d: (load_vocabulary(d / "source.json"), load_vocabulary(d / "target.json")))
    log.info("vocabularies: %d source, %d target terms", len(vocab_s), len(vocab_t))

    pivot_key = stage_key(digests, cfg.pivots, cfg.min_support, cfg.drift_threshold, cfg.budget)
    pivots = cache.get("pivots", pivot_key,
                       lambda d: write_pivots(choose_pivots(corpora, cfg), d / "pivots.tsv"),
                       lambda d: read_pivots(d / "pivots.tsv"))
    log.info("%d pivots", len(pivots))

    y_train = corpora.source_labeled.label_array()
    estimators, classifiers = {}, {}
    for projection in cfg.projections:
        proj_key = stage_key(pivot_key, vocab_key, projection,
                             (cfg.k, cfg.scl_iterations) if projection == "scl" else ())
        X_train, X_test = build_features(projection, corpora, pivots, vocab_s, vocab_t, cfg, cache, proj_key)
        learn_key = stage_key(proj_key, cfg.seed, cfg.folds_grid, cfg.folds_rates, cfg.feature_scaling,
                              cfg.alpha if projection == "scl" else 0.0)
        outputs = fit_classifiers(projection, X_train, y_train, X_test, cfg, cache, learn_key)
        log.info("%s: C_hard=%g C_soft=%g rates=%s", projection, outputs.hard_C, outputs.soft_C, outputs.rates)
        classifiers[projection] = outputs
        estimators.update(make_estimators(outputs, cfg.methods))

    try:
        result = run_protocol(estimators, corpora.target_test, cfg.seed, levels=cfg.levels,
                              samples_per_level=cfg.samples_per_level, sample_size=cfg.sample_size)
    except ValueError as err:
        raise PipelineError("evaluate", str(err)) from err
    results_path, summary_path = out / "results.tsv", out / "summary.tsv"
    write_results(result, results_path)
    rows = summarize(result.records)
    write_summary(rows, summary_path)
    return RunOutput(result, rows, classifiers, results_path, summary_path)
