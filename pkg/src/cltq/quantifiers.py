"""Aggregative quantifiers: CC, PCC and their rate-adjusted variants ACC, PACC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .learner import CvPredictions

DEGENERATE_GAP = 1e-6


@dataclass(frozen=True)
class RateEstimates:
    tpr_hard: float
    fpr_hard: float
    tpr_soft: float
    fpr_soft: float

    def __post_init__(self):
        for name in ("tpr_hard", "fpr_hard", "tpr_soft", "fpr_soft"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class PrevalenceEstimate:
    p_pos: float
    method: str
    degenerate: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_pos <= 1.0:
            raise ValueError(f"prevalence {self.p_pos} outside [0, 1]")

    @property
    def p_neg(self) -> float:
        return 1.0 - self.p_pos


def estimate_rates(cv: CvPredictions) -> RateEstimates:
    """tpr/fpr from held-out decisions, and their posterior-averaged analogues."""
    pos = cv.labels == 1
    neg = ~pos
    if not pos.any() or not neg.any():
        raise ValueError("rate estimation needs both classes in the held-out predictions")
    return RateEstimates(
        float(np.mean(cv.hard[pos])), float(np.mean(cv.hard[neg])),
        float(np.mean(cv.soft[pos])), float(np.mean(cv.soft[neg])),
    )


def cc(decisions) -> PrevalenceEstimate:
    d = np.asarray(decisions, dtype=float)
    if d.size == 0:
        raise ValueError("empty sample")
    if not np.all((d == 0) | (d == 1)):
        raise ValueError("decisions must be 0/1")
    return PrevalenceEstimate(float(d.mean()), "CC")


def pcc(posteriors) -> PrevalenceEstimate:
    p = np.asarray(posteriors, dtype=float)
    if p.size == 0:
        raise ValueError("empty sample")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("posteriors must lie in [0, 1]")
    return PrevalenceEstimate(float(np.clip(p.mean(), 0.0, 1.0)), "PCC")


def adjust(p_cc: float, tpr: float, fpr: float, *, method: str = "ACC",
           clip: bool = True) -> PrevalenceEstimate | float:
    """Invert the classifier's misclassification: (p_cc - fpr) / (tpr - fpr).

    With ``clip`` (the default) the result is clipped to [0, 1] and wrapped in
    a :class:`PrevalenceEstimate`; when tpr and fpr are closer than 1e-6 the
    unadjusted ``p_cc`` is returned, flagged as degenerate.  ``clip=False``
    returns the raw float of the inversion (which may leave [0, 1]).
    """
    gap = tpr - fpr
    if not clip:
        return (p_cc - fpr) / gap
    if abs(gap) < DEGENERATE_GAP:
        return PrevalenceEstimate(float(p_cc), method, degenerate=True)
    return PrevalenceEstimate(float(np.clip((p_cc - fpr) / gap, 0.0, 1.0)), method)


class Quantifier(Protocol):
    """Maps the per-document classifier outputs of one sample to a prevalence.

    Anything that consumes a sample's hard decisions and/or posteriors fits
    here, including learned non-linear adjusters.
    """

    name: str

    def quantify(self, hard: np.ndarray, soft: np.ndarray) -> PrevalenceEstimate: ...


@dataclass(frozen=True)
class CC:
    name: str = "CC"

    def quantify(self, hard, soft=None):
        return cc(hard)


@dataclass(frozen=True)
class PCC:
    name: str = "PCC"

    def quantify(self, hard, soft):
        return pcc(soft)


@dataclass(frozen=True)
class ACC:
    rates: RateEstimates
    name: str = "ACC"

    def quantify(self, hard, soft=None):
        return adjust(cc(hard).p_pos, self.rates.tpr_hard, self.rates.fpr_hard, method=self.name)


@dataclass(frozen=True)
class PACC:
    rates: RateEstimates
    name: str = "PACC"

    def quantify(self, hard, soft):
        return adjust(pcc(soft).p_pos, self.rates.tpr_soft, self.rates.fpr_soft, method=self.name)


METHODS = ("cc", "acc", "pcc", "pacc")


def make_quantifier(name: str, rates: Optional[RateEstimates] = None) -> Quantifier:
    name = name.lower()
    if name == "cc":
        return CC()
    if name == "pcc":
        return PCC()
    if rates is None:
        raise ValueError(f"{name} needs rate estimates")
    if name == "acc":
        return ACC(rates)
    if name == "pacc":
        return PACC(rates)
    raise ValueError(f"unknown quantification method {name!r}")
