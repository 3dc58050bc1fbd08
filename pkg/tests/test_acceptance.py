"""Acceptance criteria 1-8, one PASS/FAIL line each.

Every criterion runs through the single verification suite that holds its
checks.  Suites shared by two criteria run once per session.
"""
import pytest

from ibpfourier.harness import CRITERION_SUITES, verify_lemma

LINES = {}
_REPORTS = {}


def report(criterion):
    suite = CRITERION_SUITES[criterion]
    if suite not in _REPORTS:
        _REPORTS[suite] = verify_lemma(suite)
    return _REPORTS[suite]


def record(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[criterion] = line
    print(line)


def statuses(rep, names=None):
    return {c.name: c.status for c in rep.checks if names is None or c.name in names}


def test_criterion_1_series_exactness():
    rep = report(1)
    ok = rep.status == "pass" and rep.runtime < 1.0
    record(1, ok, f"coefficients 2^(n-1) to n = 12 and c_n = -(n-1) a_(n-1) exact; {rep.runtime:.3f} s")
    assert rep.status == "pass", rep.to_json()
    assert rep.runtime < 1.0


THIRD_ORDER = "zeros_2d_order3"


def test_criterion_2_zero_counts():
    rep = report(2)
    others = {n: s for n, s in statuses(rep).items() if n != THIRD_ORDER}
    third = rep.check(THIRD_ORDER)
    ok = rep.status == "pass" and rep.runtime < 30.0
    counts = {c.name: c.measured for c in rep.checks if c.name.startswith("zeros_")}
    record(2, ok, f"counts {counts}; random fibers agree: "
                  f"{rep.check('closed_vs_numeric').status}; {rep.runtime:.1f} s")
    # every sub-check except the third-derivative count holds
    assert all(s == "pass" for s in others.values()), rep.to_json()
    assert rep.runtime < 30.0
    # the third derivative of a Coulomb fiber vanishes at u = 0 and u = +-sqrt(3/2) s
    assert third.measured == {"closed_form": 3, "numeric": 3}


@pytest.mark.xfail(strict=True, reason="(f_y)''' of a 2D Coulomb fiber has 3 zeros, not the stated 2")
def test_criterion_2_third_derivative_count_is_two():
    assert report(2).check(THIRD_ORDER).status == "pass"


@pytest.mark.slow
def test_criterion_3_decay_certificates():
    rep = report(3)
    ok = rep.status == "pass" and rep.runtime < 300.0
    worst = {c.name: round(c.measured - c.target, 3) for c in rep.checks}
    record(3, ok, f"min margin {min(worst.values()):.3f} over {len(worst)} fits; {rep.runtime:.0f} s")
    assert rep.status == "pass", rep.to_json()
    assert rep.runtime < 300.0


@pytest.mark.slow
def test_criterion_4_fubini_2d():
    rep = report(4)
    c = rep.check("fubini_2d")
    ok = c.status == "pass" and c.seconds < 300.0
    record(4, ok, f"max |F_xy - F_yx| / allowance = {c.measured:.3g} on 36 wave vectors; {c.seconds:.0f} s")
    assert c.status == "pass", rep.to_json()
    assert c.seconds < 300.0


@pytest.mark.slow
def test_criterion_5_six_orderings():
    rep = report(5)
    cs = [c for c in rep.checks if c.name.startswith("six_orderings_")]
    seconds = sum(c.seconds for c in cs)
    ok = len(cs) == 3 and all(c.status == "pass" for c in cs) and seconds < 1200.0
    ratio = max(c.measured / c.target for c in cs)
    record(5, ok, f"max deviation / allowance = {ratio:.3g} over {len(cs)} wave vectors; {seconds:.0f} s")
    assert len(cs) == 3
    assert all(c.status == "pass" for c in cs), rep.to_json()
    assert seconds < 1200.0


@pytest.mark.slow
def test_criterion_6_oracle_agreement():
    rep = report(6)
    c = rep.check("oracle_111")
    ok = c.status == "pass" and c.seconds < 600.0
    record(6, ok, f"relative difference to the oracle = {c.measured:.3g} (target 1e-3); {c.seconds:.0f} s")
    assert c.status == "pass", rep.to_json()
    assert c.measured <= 1e-3
    assert c.seconds < 600.0


@pytest.mark.slow
def test_criterion_7_tail_shape():
    rep = report(7)
    slopes, spread = rep.check("tail_slopes"), rep.check("uniform_in_m")
    ok = slopes.status == spread.status == "pass" and slopes.seconds < 300.0
    record(7, ok, f"slopes {[round(s, 3) for s in slopes.measured]}, spread {spread.measured:.3f}; "
                  f"{slopes.seconds:.0f} s")
    assert slopes.status == "pass", rep.to_json()
    assert spread.status == "pass", rep.to_json()
    assert slopes.seconds < 300.0


@pytest.mark.slow
def test_criterion_8_regularization_invariance():
    rep = report(8)
    c = rep.check("regularization_invariance")
    ok = c.status == "pass" and rep.runtime < 120.0
    record(8, ok, f"max |difference| / combined error = {c.measured:.3g} over "
                  f"{c.detail['fiber_k_pairs']} fiber/k pairs; {rep.runtime:.0f} s")
    assert c.status == "pass", rep.to_json()
    assert rep.runtime < 120.0
