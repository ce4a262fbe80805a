import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cltq.learner import CvPredictions
from cltq.quantifiers import (ACC, CC, PACC, PCC, PrevalenceEstimate, RateEstimates, adjust, cc,
                              estimate_rates, make_quantifier, pcc)

unit = st.floats(0, 1)


def cv(hard_pos, hard_neg, soft_pos=None, soft_neg=None):
    hard = np.array(hard_pos + hard_neg)
    soft = np.array((soft_pos or [0.5] * len(hard_pos)) + (soft_neg or [0.5] * len(hard_neg)))
    labels = np.array([1] * len(hard_pos) + [0] * len(hard_neg))
    return CvPredictions(hard, soft, labels, np.zeros(len(labels), dtype=int))


def test_rates_by_counting():
    r = estimate_rates(cv([1, 1, 0, 1], [0, 0, 1, 0]))
    assert (r.tpr_hard, r.fpr_hard) == (0.75, 0.25)


def test_rates_perfect_classifier():
    r = estimate_rates(cv([1, 1], [0, 0, 0]))
    assert (r.tpr_hard, r.fpr_hard) == (1.0, 0.0)


def test_soft_rates_are_mean_posteriors():
    r = estimate_rates(cv([1, 1], [0], [0.8, 0.6], [0.1]))
    assert r.tpr_soft == pytest.approx(0.7) and r.fpr_soft == pytest.approx(0.1)


def test_rates_need_both_classes():
    with pytest.raises(ValueError):
        estimate_rates(cv([1, 0], []))
    with pytest.raises(ValueError):
        RateEstimates(1.2, 0, 0, 0)


def test_cc_examples():
    assert cc([1, 1, 0, 0]).p_pos == 0.5
    assert cc([0, 0, 0]).p_pos == 0.0
    assert cc([1, 0, 0, 0, 1]).p_pos == pytest.approx(0.4)
    with pytest.raises(ValueError):
        cc([])


def test_pcc_examples():
    assert pcc([0.9, 0.1]).p_pos == pytest.approx(0.5)
    assert pcc([1.0, 1.0]).p_pos == 1.0
    assert pcc([0.2, 0.4, 0.6]).p_pos == pytest.approx(0.4)
    with pytest.raises(ValueError):
        pcc([0.5, 1.2])
    with pytest.raises(ValueError):
        pcc([])


def test_adjust_examples():
    assert adjust(0.6, 1.0, 0.0).p_pos == pytest.approx(0.6)
    assert adjust(0.5, 0.8, 0.2).p_pos == pytest.approx(0.5)
    assert adjust(0.1, 0.7, 0.3).p_pos == 0.0
    assert adjust(0.1, 0.7, 0.3, clip=False) == pytest.approx(-0.5)


def test_adjust_degenerate_rates():
    est = adjust(0.37, 0.6, 0.6 + 1e-7)
    assert est.p_pos == 0.37 and est.degenerate
    assert not adjust(0.37, 0.6, 0.5).degenerate


def test_prevalence_estimate_invariants():
    assert PrevalenceEstimate(0.25, "CC").p_neg == 0.75
    with pytest.raises(ValueError):
        PrevalenceEstimate(1.5, "CC")


def expected_unclipped_acc(labels, tpr, fpr):
    """Brute force over all 2^n decision outcomes of a classifier with exact rates."""
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=len(labels)):
        prob = 1.0
        for y, h in zip(labels, outcome):
            p1 = tpr if y else fpr
            prob *= p1 if h else 1 - p1
        total += prob * adjust(np.mean(outcome), tpr, fpr, clip=False)
    return total


@pytest.mark.parametrize("labels,tpr,fpr", [
    ([1, 0, 0, 1, 1, 0, 0, 0], 0.8, 0.2),
    ([1, 1, 1, 1, 1, 0], 0.9, 0.35),
    ([0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0], 0.65, 0.1),
])
def test_adjustment_is_exact_in_expectation(labels, tpr, fpr):
    assert expected_unclipped_acc(labels, tpr, fpr) == pytest.approx(np.mean(labels), abs=1e-9)


@given(unit, unit, unit, unit)
def test_adjust_monotone(p1, p2, tpr, fpr):
    if tpr - fpr < 1e-6:
        return
    lo, hi = sorted((p1, p2))
    assert adjust(lo, tpr, fpr).p_pos <= adjust(hi, tpr, fpr).p_pos


@given(unit, unit, unit)
def test_adjust_within_unit_interval(p, tpr, fpr):
    assert 0.0 <= adjust(p, tpr, fpr).p_pos <= 1.0


@given(st.lists(st.sampled_from([0.0, 1.0]), min_size=1, max_size=30))
def test_pcc_equals_cc_on_crisp_posteriors(values):
    assert pcc(values).p_pos == cc(values).p_pos


def test_quantifier_objects():
    rates = RateEstimates(0.8, 0.2, 0.7, 0.3)
    hard = np.array([1, 1, 0, 0, 0])
    soft = np.array([0.9, 0.6, 0.4, 0.2, 0.4])
    assert CC().quantify(hard, soft).p_pos == pytest.approx(0.4)
    assert PCC().quantify(hard, soft).p_pos == pytest.approx(0.5)
    assert ACC(rates).quantify(hard, soft).p_pos == pytest.approx((0.4 - 0.2) / 0.6)
    assert PACC(rates).quantify(hard, soft).p_pos == pytest.approx(0.5)
    assert ACC(rates).quantify(hard, soft).method == "ACC"
    assert make_quantifier("PACC", rates).name == "PACC"
    with pytest.raises(ValueError):
        make_quantifier("acc")
    with pytest.raises(ValueError):
        make_quantifier("hdy", rates)
