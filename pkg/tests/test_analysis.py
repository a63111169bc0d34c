import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinscope._validation import AnalysisError, ClassificationUnavailable
from spinscope.analysis import (
    ZeroCrossing,
    classify_correlation,
    detect_splitting,
    dimension_from_minimum,
    dip_minimum,
    estimate_noise,
    find_zeros,
    fingerprint,
    peel_couplings,
    track_couplings,
)
from spinscope.analytic import DipParameters, dip_multi, generic_cluster_dip
from spinscope.exact_sim import pulse_scan, resonant_tau
from spinscope.systems import CoupledPair


@given(st.floats(8.0, 200.0))
def test_find_zeros_of_a_cosine(period):
    n = np.arange(0, int(2 * period) + 1, dtype=float)
    y = np.cos(np.pi * n / period)
    zs = [z.n_frac for z in find_zeros(n, y)]
    expected = [period / 2, 3 * period / 2]
    expected = [e for e in expected if e < n[-1]]
    assert len(zs) == len(expected)
    # linear interpolation error on a unit cosine sampled at unit spacing
    for z, e in zip(zs, expected):
        assert abs(z - e) < 0.5 * (np.pi / period) ** 2 / 4 + 1e-9


def test_find_zeros_exact_sample_counts_once():
    n = np.arange(5.0)
    zs = find_zeros(n, [1.0, 0.5, 0.0, -0.5, -1.0])
    assert [z.n_frac for z in zs] == [2.0]
    # touching zero without a sign change is not a crossing
    assert find_zeros(n, [1.0, 0.5, 0.0, 0.5, 1.0]) == []


def test_find_zeros_requires_unit_spacing():
    with pytest.raises(ValueError):
        find_zeros([0.0, 2.0, 4.0], [1.0, 0.0, -1.0])


def test_estimate_noise(rng):
    y = rng.normal(0.0, 0.05, 4000)
    assert estimate_noise(y) == pytest.approx(0.05, rel=0.1)
    smooth = np.cos(np.arange(200) / 40.0)
    assert estimate_noise(smooth) < 1e-3


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_dip_minimum_and_dimension_on_clean_traces(d):
    n = np.arange(0, 160, dtype=float)
    y = generic_cluster_dip(0.0025, 0.1, d, n)
    dmin, _, _ = dip_minimum(n, y)
    assert abs(dmin - (d - 4) / d) < 1e-3
    rep = classify_correlation(n, y)
    assert rep.dimension == d
    assert rep.confidence > 6


def test_dimension_levels_and_no_dip():
    assert [dimension_from_minimum(v) for v in (-1.0, -1 / 3, 0.0, 0.2, 1 / 3)] == [2, 3, 4, 5, 6]
    with pytest.raises(ClassificationUnavailable):
        dimension_from_minimum(0.995)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_classification_survives_sample_noise(d, rng):
    n = np.arange(0, 150, dtype=float)
    clean = generic_cluster_dip(0.0025, 0.1, d, n)
    for _ in range(20):
        rep = classify_correlation(n, clean + rng.normal(0, 0.05, len(n)))
        assert rep.dimension == d


def _dip_trace(couplings, omega0=0.1, n_max=800, g=1):
    n = np.arange(0, n_max + 1, dtype=float)
    return n, dip_multi(DipParameters(omega0, couplings, g), n)


@pytest.mark.parametrize("scale", [0.004, 0.007])
def test_peel_recovers_five_three_two(scale):
    true = np.array([5, 3, 2]) / 5 * scale
    n, y = _dip_trace(true)
    rep = fingerprint(n, 0.1, values=y)
    assert rep.n_detected == 3
    assert np.allclose(rep.couplings, true, rtol=2e-3)
    assert rep.unresolved == []


def test_peel_nv_sensor_halves_the_coupling():
    n, y = _dip_trace([0.002, 0.0012], g=2, n_max=600)
    rep = fingerprint(n, 0.1, g="nv", values=y)
    assert np.allclose(rep.couplings, [0.002, 0.0012], rtol=3e-3)


def test_peel_flags_near_coincident_zeros():
    n, y = _dip_trace([0.004, 0.0038], n_max=200)
    zeros = find_zeros(n, y)
    rep = peel_couplings(zeros, 0.1, n_max=200)
    assert rep.unresolved


def test_peel_rejects_too_many_crossings():
    zeros = [ZeroCrossing(float(x), -1.0) for x in (10.3, 17.9, 23.1, 29.7)]
    with pytest.raises(AnalysisError):
        peel_couplings(zeros, 0.1, max_spins=2)
    with pytest.raises(ValueError):
        peel_couplings(list(reversed(zeros)), 0.1)


def test_detect_splitting_on_exact_pair_traces():
    lam = 0.005
    split = CoupledPair(0.11, 0.09, lam, 4 * lam)
    shifted = pulse_scan(split, "spin_half", resonant_tau(0.11 + 4 * lam), (0, 200))
    base = pulse_scan(split, "spin_half", resonant_tau(0.11), (0, 200))
    rep = detect_splitting(shifted, base)
    assert rep.split is True and rep.inferred_regime == "correlated"
    free = CoupledPair(0.11, 0.09, lam, 0.0)
    at_a = pulse_scan(free, "spin_half", resonant_tau(0.11), (0, 200))
    rep = detect_splitting(at_a, at_a)
    assert rep.split is False


def test_track_couplings_follows_crossings():
    sweep = [[0.004, 0.002], [0.0035, 0.0024], [0.0031, 0.0028], [0.0029, 0.0032]]
    path = track_couplings(sweep)
    assert np.allclose(path[:, 0], [0.004, 0.0035, 0.0031, 0.0029])
    with pytest.raises(AnalysisError):
        track_couplings([[0.1, 0.2], [0.1]])


def test_noisy_dip_minimum_pools_the_whole_sinusoid(rng):
    # a single sinusoid: the global fit beats the trough-only spread of ~0.02 at noise 0.05
    n = np.arange(0, 150, dtype=float)
    clean = generic_cluster_dip(0.0025, 0.1, 5, n)
    lows = np.array([dip_minimum(n, clean + rng.normal(0, 0.05, len(n)))[0] for _ in range(200)])
    assert abs(lows.mean() - 0.2) < 0.003
    assert lows.std() < 0.012


def test_noisy_dip_minimum_falls_back_on_non_sinusoidal_traces(rng):
    n = np.arange(0, 600, dtype=float)
    clean = dip_multi(DipParameters(0.1, (0.004, 0.0024, 0.0016)), n)
    low, window, _ = dip_minimum(n, clean + rng.normal(0, 0.01, len(n)))
    assert window != (0, len(n))
    assert abs(low - clean.min()) < 0.03
