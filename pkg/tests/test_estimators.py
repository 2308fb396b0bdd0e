import math

import numpy as np
import pytest

from randloop import estimators, lattice, measure, oracle
from randloop.estimators import SamplerConfig
from randloop.measure import WeightSpec

CFG = SamplerConfig(kind="direct", n_samples=100_000, seed=17)


def test_pair_probs_sum_to_one():
    g = lattice.chain(2)
    p = estimators.pair_event_probs(g, 1.0, 0.5, WeightSpec.field(1), 0, 1, CFG)
    assert p.p_plus.mean + p.p_minus.mean == pytest.approx(p.p_same.mean)
    assert p.p_same.mean + p.p_diff.mean == pytest.approx(1.0)
    assert p.p_signed.mean == pytest.approx(p.p_plus.mean - p.p_minus.mean)


def test_two_site_bars_only_closed_form():
    # bars reverse the time direction, so two sites joined through bars
    # always carry opposite directions at time 0: P(E+) = 0 and
    # P(E) = (e^b - e^-b) / (e^b + 3 e^-b) at b = 1
    g = lattice.chain(2)
    p = estimators.pair_event_probs(g, 1.0, 0.0, WeightSpec.field(1), 0, 1, CFG)
    assert p.p_plus.mean == 0.0
    exact = (math.e - 1 / math.e) / (math.e + 3 / math.e)
    assert abs(p.p_same.mean - exact) <= 3 * p.p_same.stderr


def test_two_site_crosses_only_closed_form():
    # crosses keep the time direction: P(E-) = 0 and
    # P(E) = (1 - e^-2b) / (3 + e^-2b) at b = 1
    g = lattice.chain(2)
    p = estimators.pair_event_probs(g, 1.0, 1.0, WeightSpec.field(1), 0, 1, CFG)
    assert p.p_minus.mean == 0.0
    exact = (1 - math.exp(-2)) / (3 + math.exp(-2))
    assert abs(p.p_plus.mean - exact) <= 3 * p.p_plus.stderr


def test_small_beta_limit():
    g = lattice.chain(2)
    cfg = SamplerConfig(kind="direct", n_samples=10_000, seed=3)
    p = estimators.pair_event_probs(g, 1e-4, 0.5, WeightSpec.field(1), 0, 1, cfg)
    assert p.p_same.mean <= 0.01
    assert p.p_diff.mean >= 0.99


def test_multi_matches_single_pair():
    g = lattice.chain(3)
    spec = WeightSpec.field(1)
    single = estimators.pair_event_probs(g, 1.0, 0.5, spec, 0, 2, CFG)
    multi, y = estimators.pair_event_probs_multi(g, 1.0, 0.5, spec,
                                                 [(0, 1), (0, 2)], CFG)
    assert multi[(0, 2)].p_plus.mean == single.p_plus.mean
    assert multi[(0, 2)].p_same.stderr == single.p_same.stderr
    assert y is not None and y.mean > 0


def test_validation():
    g = lattice.chain(2)
    with pytest.raises(ValueError):
        estimators.pair_event_probs(g, 1.0, 0.5, WeightSpec.field(1), 1, 1, CFG)
    with pytest.raises(measure.MeasureError):
        estimators.pair_event_probs(g, 1.0, 0.5,
                                    WeightSpec.field(1, (0.1, 0.0)), 0, 1, CFG)
    with pytest.raises(measure.MeasureError):
        estimators.run_sampler(g, 1.0, 0.5, WeightSpec.field(1), {},
                               SamplerConfig(kind="exact"))


def _unit_probs(p_plus, p_minus):
    e = lambda v: measure.EstimateWithError(v, 0.0, 2, 2)
    same = p_plus + p_minus
    return estimators.PairEventProbs(
        e(p_plus), e(p_minus), e(same), e(1 - same), e(p_plus - p_minus))


def test_correlation_identity_operator():
    # B = Id: the two-point function collapses to tr A / (2S+1) exactly,
    # independent of the pair-event probabilities
    rng = np.random.default_rng(0)
    A = rng.normal(size=(2, 2))
    probs = _unit_probs(0.3, 0.2)
    got = estimators.correlation_plain(A, np.eye(2), probs, 1)
    assert got == pytest.approx(np.trace(A) / 2)
    assert estimators.one_point_value(A, 1) == pytest.approx(np.trace(A) / 2)


def test_correlation_spin_half_specializations():
    # S^3 S^3 and S^1 S^1 reduce to P(E)/4; S^2 S^2 to [P(E+) - P(E-)]/4
    s1, s2, s3 = oracle.spin_matrices(1)
    probs = _unit_probs(0.35, 0.15)
    assert estimators.correlation_plain(s3, s3, probs, 1) == \
        pytest.approx(0.5 / 4)
    assert estimators.correlation_plain(s1, s1, probs, 1) == \
        pytest.approx(0.5 / 4)
    assert estimators.correlation_plain(s2.real + 1j * s2.imag, s2, probs, 1) \
        == pytest.approx(0.2 / 4)


def test_tilde_specializations_spin_one():
    _, _, s3 = oracle.spin_matrices(2)
    probs = _unit_probs(0.4, 0.1)
    general = estimators.correlation_tilde(s3, s3, probs, 2)
    assert general == pytest.approx(estimators.spin_spin_tilde(probs, 2))
    assert estimators.spin_spin_tilde(probs, 2) == pytest.approx(2 / 3 * 0.3)
    assert estimators.nematic_tilde(probs, 2) == pytest.approx(2 / 9 * 0.5)
    with pytest.raises(ValueError):
        estimators.correlation_tilde(np.eye(2), np.eye(2), probs, 1)


def test_with_error_variants_match_values():
    g = lattice.chain(2)
    p = estimators.pair_event_probs(g, 1.0, 0.5, WeightSpec.field(1), 0, 1,
                                    SamplerConfig(n_samples=10_000, seed=5))
    _, _, s3 = oracle.spin_matrices(1)
    v, err = estimators.correlation_plain_with_error(s3, s3, p, 1)
    assert v == pytest.approx(estimators.correlation_plain(s3, s3, p, 1))
    assert err > 0


def test_macroscopic_fraction_small_beta():
    # with (almost) no events every loop is a single site: fraction 1/n
    g = lattice.torus(2, 2)
    cfg = SamplerConfig(kind="direct", n_samples=10_000, seed=11)
    est = estimators.macroscopic_fraction(g, 1e-4, 0.5, 2.0, cfg)
    assert est.mean == pytest.approx(0.25, abs=0.01)


def test_metropolis_agrees_with_direct_pair_probs():
    g = lattice.chain(4, periodic=True)
    spec = WeightSpec.uniform(2.0)
    pd = estimators.pair_event_probs(
        g, 1.0, 0.5, spec, 0, 2,
        SamplerConfig(kind="direct", n_samples=100_000, seed=23))
    pm = estimators.pair_event_probs(
        g, 1.0, 0.5, spec, 0, 2,
        SamplerConfig(kind="metropolis", n_sweeps=20_000, burn_in=1_000,
                      seed=24))
    sig = math.hypot(pd.p_same.stderr, pm.p_same.stderr)
    assert abs(pd.p_same.mean - pm.p_same.mean) <= 3 * sig
