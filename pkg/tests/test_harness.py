import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stable_she import MCSummary
from stable_she import harness
from stable_she.harness import GapReport, g_bound, g_function, gronwall_bound, gronwall_steps, picard_oracle, theory_scale


def picard_series_terms(c, gamma, t):
    """Terms ``c lam^j t^(j e) / Gamma(1 + j e)`` of the iterates from f = c, ``lam = c Gamma(1-gamma)``."""
    mpmath.mp.dps = 30
    lam = mpmath.mpf(c) * mpmath.gamma(1 - mpmath.mpf(gamma))
    e = 1 - mpmath.mpf(gamma)
    j = 0
    while True:
        yield c * lam**j * mpmath.mpf(t) ** (j * e) / mpmath.gamma(1 + j * e)
        j += 1


def exact_picard_iterate(c, gamma, t, m):
    """The m-th Picard iterate from f = c: the first m + 1 series terms."""
    terms = picard_series_terms(c, gamma, t)
    return float(mpmath.fsum(next(terms) for _ in range(m + 1)))


def exact_fixed_point_log(c, gamma, t):
    """Log of the converged series (a Mittag-Leffler function), summed past its peak term."""
    total, peak = mpmath.mpf(0), mpmath.mpf(0)
    for term in picard_series_terms(c, gamma, t):
        total += term
        peak = max(peak, term)
        if term < peak * mpmath.mpf(10) ** -25:
            return float(mpmath.log(total))


@pytest.mark.parametrize("gamma,k", [(0.3, 1), (0.5, 2), (0.6, 2), (0.74, 3), (0.75, 4), (0.9, 10)])
def test_gronwall_step_count(gamma, k):
    assert gronwall_steps(gamma) == k
    assert gamma < k / (k + 1) and not gamma < (k - 1) / k


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("gamma", [0.3, 0.6, 0.9])
def test_bound_exceeds_constant(c, gamma):
    t = np.linspace(0, 1, 101)
    assert np.all(gronwall_bound(c, gamma, 1.0)(t) >= c)


def test_bound_dominates_picard_fixed_point_example():
    t, f = picard_oracle(1.0, 0.6, 1.0, points=100, iterations=50)
    assert t.size == 100 and t[-1] == pytest.approx(1.0)
    assert np.all(gronwall_bound(1.0, 0.6, 1.0)(t) >= f)


# oracle error against the exact 50th iterate, frozen from the 30-digit sum at the shipped resolution
@pytest.mark.parametrize(
    "c,gamma,tol", [(0.5, 0.3, 2e-6), (2.0, 0.3, 3e-5), (1.0, 0.6, 1e-3), (2.0, 0.6, 5e-3), (0.5, 0.9, 3e-2), (2.0, 0.9, 4e-2)]
)
def test_picard_oracle_matches_exact_iterate(c, gamma, tol):
    t, f = picard_oracle(c, gamma, 1.0, points=100, iterations=50)
    sub = slice(0, 100, 9)
    exact = np.array([exact_picard_iterate(c, gamma, s, 50) for s in t[sub]])
    err = np.max(np.abs(f[sub] / exact - 1))
    assert err <= tol
    # the oracle error is far below the slack of the bound, so it cannot flip the verdict
    margin = np.min(gronwall_bound(c, gamma, 1.0).log(t) - np.log(f))
    assert err < math.expm1(min(margin, 700.0)) / 2


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("gamma", [0.3, 0.6])
def test_bound_dominates_converged_fixed_point(c, gamma):
    t = np.linspace(0.01, 1.0, 100)
    bound = gronwall_bound(c, gamma, 1.0).log(t)
    exact = np.array([exact_fixed_point_log(c, gamma, s) for s in t])
    assert np.all(bound >= exact)


def test_gronwall_rejects_bad_input():
    with pytest.raises(ValueError):
        gronwall_bound(0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        gronwall_steps(1.0)
    with pytest.raises(ValueError):
        gronwall_bound(1.0, 0.5, 1.0)(1.5)


def test_g_vanishes_at_zero_state():
    assert g_function(0.25, 0.0, 1.2) == 0.0


@pytest.mark.parametrize("r,y", [(0.25, 0.3), (1 / 64, 2.0), (0.5, 10.0)])
def test_g_matches_high_precision_quadrature(r, y):
    mpmath.mp.dps = 25
    # e^{-x} - 1 + x = x^2 1F1(1; 3; -x) / 2, free of cancellation near 0
    ref = mpmath.quad(lambda s: (s * y) ** 2 * mpmath.hyp1f1(1, 3, -s * y) / 2 * s ** (-2.2), [0, r])
    assert g_function(r, y, 1.2) == pytest.approx(float(ref), rel=1e-9)


@given(st.sampled_from([2, 4, 16, 64, 256, 1000]), st.floats(1e-6, 50.0))
def test_g_is_below_its_closed_form_bound(n, y):
    assert g_function(1.0 / n, y, 1.2) <= g_bound(n, y, 1.5, 0.8) * (1 + 1e-9)


def test_g_bound_on_random_pairs():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(2, 500))
        y = float(rng.uniform(0, 20))
        assert g_function(1.0 / n, y, 1.2) <= g_bound(n, y, 1.5, 0.8) * (1 + 1e-9)


@pytest.mark.parametrize("n", [3, 4, 16, 64, 1000])
def test_theory_scale_formula(n):
    assert theory_scale(n, 1.5, 0.8) == pytest.approx(n**-0.15 * math.log(n), rel=1e-14)


def test_theory_scale_peaks_at_exp_20_over_3():
    turn = math.exp(2 / (1.5 - 1.5 * 0.8))
    assert turn == pytest.approx(785.77, abs=0.01)
    ns = [4, 16, 64, 700]
    vals = [theory_scale(n, 1.5, 0.8) for n in ns]
    assert vals == sorted(vals)
    assert theory_scale(2000, 1.5, 0.8) < theory_scale(1000, 1.5, 0.8) < theory_scale(787, 1.5, 0.8)


def test_summary_invariants_and_round_trip():
    s = MCSummary.from_samples([0.2, 0.4, 0.9], seed=4, aborted=1)
    assert s.replicas == 4 and s.aborted == 1 and s.abort_fraction == 0.25
    assert MCSummary.from_dict(json.loads(json.dumps(s.to_dict()))) == s
    with pytest.raises(ValueError):
        MCSummary(0.5, -1.0, 3)
    with pytest.raises(ValueError):
        MCSummary(0.5, 0.1, 3, aborted=4)
    empty = MCSummary.from_samples([], aborted=2)
    assert math.isnan(empty.estimate) and empty.replicas == 2


def test_gap_report_round_trip():
    y = MCSummary(0.78, 0.004, 2000, 0, 1)
    z = MCSummary(0.79, 0.003, 2000, 0, 1)
    r = GapReport.build(16, y, z, 1.5, 0.8, 0.02)
    assert r.gap == pytest.approx(0.01) and r.combined_se == pytest.approx(0.005)
    assert r.gap >= 0 and r.passed
    assert GapReport.from_dict(json.loads(json.dumps(r.to_dict()))) == r


def test_stream_ranges_are_disjoint():
    starts = [harness.Y_STREAMS, harness.Z_STREAMS, harness.NOISE_STREAMS, harness.SAMPLER_STREAMS,
              harness.TIME_CHANGE_STREAMS, harness.PDE_STREAMS]
    assert starts == sorted(starts)
    # dual levels get 2^32 streams each and stay below the noise range
    assert harness.dual_stream_base(2) + 2**32 <= harness.NOISE_STREAMS
    assert harness.Z_STREAMS - harness.Y_STREAMS >= 2**40


def square(x):
    return x * x


def test_parallel_map_preserves_order():
    assert harness.parallel_map(square, range(10), workers=3) == [x * x for x in range(10)]
    assert harness.parallel_map(square, [], workers=3) == []
