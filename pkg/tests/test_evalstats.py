import csv
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from rrcap.errors import ConstantInput, DegenerateInput, LengthMismatch
from rrcap.evalstats import (
    EvalRecord,
    evaluate,
    fit_logistic,
    krocc,
    logistic,
    nelder_mead,
    read_manifest,
    srocc,
)

from oracles import kendall_tau_b_direct, logistic_direct, spearman_direct


def test_srocc_perfect():
    assert srocc([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0, abs=1e-15)
    assert srocc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-15)


def test_srocc_ties_against_oracle():
    x = [1, 2, 2, 3, 5, 5, 5]
    y = [2, 1, 4, 4, 3, 7, 6]
    assert srocc(x, y) == pytest.approx(spearman_direct(x, y), abs=1e-12)
    assert srocc(x, y) == pytest.approx(scipy.stats.spearmanr(x, y)[0], abs=1e-12)


def test_krocc_examples():
    assert krocc([1, 2, 3, 4], [2, 3, 5, 9]) == 1.0
    assert krocc([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(ConstantInput):
        krocc([1, 1, 1], [1, 2, 3])
    with pytest.raises(ConstantInput):
        srocc([1, 1, 1], [1, 2, 3])


def test_krocc_matches_scipy_tau_b(rng):
    x = rng.integers(0, 5, 25)
    y = rng.integers(0, 5, 25)
    assert krocc(x, y) == pytest.approx(scipy.stats.kendalltau(x, y, variant="b")[0], abs=1e-12)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        srocc([1, 2], [1, 2, 3])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_rank_stats_invariant_under_monotone_transform(seed):
    r = np.random.default_rng(seed)
    x = r.integers(0, 8, 12).astype(float)
    y = r.normal(size=12)
    if np.ptp(x) == 0:
        return
    for f in (np.exp, lambda t: 3 * t + 1, np.cbrt):
        assert srocc(f(x), y) == pytest.approx(srocc(x, y), abs=1e-12)
        assert krocc(f(x), f(y)) == pytest.approx(krocc(x, y), abs=1e-12)


def test_logistic_form_matches_definition():
    beta = np.array([2.0, 3.0, 0.5, 1.0])
    for x in (-1.0, 0.0, 0.3, 0.5, 2.0):
        assert logistic(np.array([x]), beta)[0] == pytest.approx(logistic_direct(x, *beta), abs=1e-14)


def test_fit_recovers_exact_logistic():
    x = np.linspace(0, 1, 50)
    y = np.array([logistic_direct(t, 2, 3, 0.5, 1) for t in x])
    fit = fit_logistic(x, y)
    assert math.sqrt(np.mean((fit(x) - y) ** 2)) <= 1e-6


def test_fit_escapes_saturated_plateau():
    # weakly correlated tied data where the simplex from the default start drifts
    # onto a flat (constant) curve
    pred = np.array([4.0, 0, 7, 1, 4, 1, 3, 6, 2, 7, 5, 7, 2, 2, 3, 4, 4])
    mos = np.array([6, 6, 5.5, 5.5, 2, 1.5, 1.5, 3, 1, 5.5, 5.5, 4.5, 4, 2, 1.5, 7, 2])
    fit = fit_logistic(pred, mos)
    sse = float(np.sum((fit(pred) - mos) ** 2))
    line = np.polyval(np.polyfit(pred, mos, 1), pred)
    assert sse <= float(np.sum((line - mos) ** 2))
    assert sse == pytest.approx(53.425, abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_fit_never_worse_than_line(seed):
    r = np.random.default_rng(seed)
    n = int(r.integers(4, 25))
    x, y = r.integers(0, 6, n).astype(float), r.normal(size=n)
    if np.ptp(x) == 0:
        return
    fit = fit_logistic(x, y)
    line = np.polyval(np.polyfit(x, y, 1), x)
    assert np.sum((fit(x) - y) ** 2) <= np.sum((line - y) ** 2) * (1 + 1e-9) + 1e-12


def test_srocc_exact_on_integer_ranks():
    assert srocc([1, 0.9, 0.95, 0.8, 0.7], [0, 1, 2, 3, 4]) == -0.9


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        fit_logistic([1, 2, 3, 4], [5, 5, 5, 5])
    with pytest.raises(DegenerateInput):
        fit_logistic([1, 1, 1, 1], [1, 2, 3, 4])
    with pytest.raises(DegenerateInput):
        fit_logistic([1, 2, 3], [1, 2, 3])


def test_fit_is_monotone_and_deterministic(rng):
    x = rng.random(30)
    y = 5 / (1 + np.exp(-8 * (x - 0.4))) + rng.normal(0, 0.2, 30)
    a, b = fit_logistic(x, y), fit_logistic(x, y)
    assert a == b
    xs = np.sort(x)
    fx = a(xs)
    assert np.all(np.diff(fx) >= 0) or np.all(np.diff(fx) <= 0)


def test_fit_not_worse_than_curve_fit(rng):
    from scipy.optimize import curve_fit

    x = rng.random(40)
    y = 4 * (0.5 - 1 / (1 + np.exp(6 * (x - 0.5)))) + 2 + rng.normal(0, 0.1, 40)
    ours = fit_logistic(x, y)
    p0 = [np.ptp(y), 4 / np.ptp(x), np.median(x), y.min()]
    ref, _ = curve_fit(lambda t, a, b, c, d: logistic(t, np.array([a, b, c, d])), x, y, p0=p0, maxfev=20000)
    sse = lambda f: float(np.sum((f - y) ** 2))  # noqa: E731
    assert sse(ours(x)) <= sse(logistic(x, ref)) * (1 + 1e-6) + 1e-12


def test_nelder_mead_quadratic():
    x, f, _ = nelder_mead(lambda p: (p[0] - 1) ** 2 + 10 * (p[1] + 2) ** 2 + 1, np.array([0.0, 0.0]), np.array([0.1, 0.1]))
    assert x == pytest.approx([1, -2], abs=1e-4) and f == pytest.approx(1, abs=1e-8)


def _records(pred, mos):
    return [EvalRecord(str(i), float(p), float(m)) for i, (p, m) in enumerate(zip(pred, mos))]


def test_evaluate_identity():
    mos = np.linspace(1, 5, 12)
    s = evaluate(_records(mos, mos))
    assert s.srocc == pytest.approx(1) and s.krocc == pytest.approx(1) and s.plcc == pytest.approx(1)
    assert s.rmse <= 1e-6


def test_evaluate_negated():
    mos = np.linspace(1, 5, 12)
    s = evaluate(_records(-mos, mos))
    assert s.srocc == pytest.approx(-1) and s.krocc == pytest.approx(-1)
    assert s.plcc == pytest.approx(1, abs=1e-9)
    # near the linear limit only the product b1*b2 is identified; it sets the direction
    assert s.fit.beta1 * s.fit.beta2 < 0
    assert np.all(np.diff(s.fit(np.linspace(-5, -1, 9))) < 0)


def test_evaluate_permutation_invariant(rng):
    pred = rng.random(20)
    mos = 3 * pred + rng.normal(0, 0.3, 20)
    recs = _records(pred, mos)
    perm = rng.permutation(20)
    a = evaluate(recs)
    b = evaluate([recs[i] for i in perm])
    assert a.srocc == b.srocc and a.krocc == b.krocc
    assert a.plcc == pytest.approx(b.plcc, abs=1e-6) and a.rmse == pytest.approx(b.rmse, abs=1e-6)


def test_fit_does_not_worsen_monotone_data(rng):
    for _ in range(5):
        x = np.sort(rng.random(25))
        y = np.cbrt(x) * 4 + np.linspace(0, 0.01, 25)
        before = abs(np.corrcoef(x, y)[0, 1])
        assert evaluate(_records(x, y)).plcc >= before - 1e-9


def test_evaluate_needs_four():
    with pytest.raises(DegenerateInput):
        evaluate(_records([1, 2, 3], [1, 2, 3]))


def test_read_manifest(tmp_path):
    path = tmp_path / "m.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["item_id", "payload_path", "distorted_path", "mos"])
        w.writerow(["a", "ref.rrcap", "sub/d.ply", "3.5"])
    (item,) = read_manifest(path)
    assert item.item_id == "a" and item.mos == 3.5
    assert item.payload_path == str(tmp_path / "ref.rrcap")
    assert item.distorted_path == str(tmp_path / "sub" / "d.ply")


def test_read_manifest_bad_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("id,payload,dist,mos\n")
    with pytest.raises(ValueError):
        read_manifest(path)
