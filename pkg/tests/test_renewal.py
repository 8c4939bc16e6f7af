import json
import math
from fractions import Fraction

import numpy as np
import pytest

from ecf_lab import renewal


@pytest.fixture(scope="module")
def small():
    return {
        L: renewal.simulate_renewal("R", L, 2, 2, 1500, seed=7)
        for L in (10**3, 10**4)
    }


def test_preconditions():
    with pytest.raises(ValueError):
        renewal.simulate_renewal("X", 100, 1, 1, 10)
    with pytest.raises(ValueError):
        renewal.simulate_renewal("R", 5, 1, 1, 10)
    with pytest.raises(ValueError):
        renewal.simulate_renewal("R", 100, 0, 1, 10)


def test_ratios_and_windows(small):
    d = small[10**3]
    assert d.containment_violations == 0
    assert d.N + d.truncated + d.precision_failures == d.requested
    assert np.all(d.ratios > 1)
    assert all(len(w) == 4 for w in d.windows)
    # the window symbol at j = 0 is never a forbidden h.1-
    assert all(not (w[1].m == 1 and w[1].sign == -1) for w in d.windows)
    for j in (-1, 0, 1, 2):
        assert sum(d.window_freqs(j).values()) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        d.window_freqs(3)


def test_t_sequence_windows():
    d = renewal.simulate_renewal("T", 10**3, 3, 1, 500, seed=2)
    assert d.containment_violations == 0
    assert all(len(w) == 4 for w in d.windows)
    assert np.all(d.ratios > 1)


def test_deterministic_and_worker_independent():
    a = renewal.simulate_renewal("R", 500, 1, 1, 300, seed=11)
    b = renewal.simulate_renewal("R", 500, 1, 1, 300, seed=11, workers=2, chunksize=50)
    assert np.array_equal(a.ratios, b.ratios)
    assert a.windows == b.windows


def test_extended_precision_ratio():
    # 1 + 1e-17 is 1.0 in double precision but not in the 64-bit mantissa
    r = renewal._extended_ratio(10**17 + 1, Fraction(10**17))
    assert float(r) == 1.0
    assert r > 1 and r.dtype == np.longdouble


def test_median_index_grows_with_L():
    meds = [np.median(renewal.simulate_renewal("R", L, 1, 1, 400, seed=3).indices)
            for L in (10**2, 10**4, 10**6)]
    assert meds[0] < meds[1] < meds[2]
    # at least logarithmic growth: half the rate log(L)/I with I < 2.5
    assert meds[2] - meds[0] >= 0.5 * math.log(10**4) / 2.5


def test_diagnostics(small):
    a, b = small[10**3], small[10**4]
    assert renewal.ks_distance(a, a) == 0.0
    diag = renewal.convergence_diagnostic([a, b])
    assert diag["ks"][0][0] == 0 and diag["ks"][0][1] == diag["ks"][1][0] > 0
    assert 0 <= diag["tv"][0][1] <= 1
    with pytest.raises(ValueError):
        renewal.convergence_diagnostic([a])
    assert renewal.tv_distance({"a": 1.0}, {"b": 1.0}) == 1.0


def test_scale_probe():
    out = renewal.scale_invariance_probe("R", 10**3, [1, 2, 5], 600, seed=5, N1=1, N2=1)
    assert out[0]["drift"] == 0.0
    assert all(r["drift"] < 3 * r["stderr"] for r in out)
    with pytest.raises(ValueError):
        renewal.scale_invariance_probe("R", 10**3, [20], 50)


def test_json_report(small):
    d = small[10**3]
    rep = d.to_json("ratios.csv")
    json.dumps(rep)
    assert rep["N"] == d.N and rep["ratio_samples_path"] == "ratios.csv"
    assert set(rep["window_freqs"]) == {"-1", "0", "1", "2"}
    counts, edges = d.histogram()
    assert len(edges) == 201 and counts.sum() <= 1.0 + 1e-12
    assert d.ratio_cdf(1.0) == 0.0
