import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize, stats

from curator_audit.estimators import (PowerEstimate, bayesian_interval, binomial_lower_bound, binomial_upper_bound,
                                      fit_ratio_model, kde_fit, truncate_density, truncate_probability)
from curator_audit.mechanisms import MechanismSpec, generate_inputs, oracle, row_from_symbols, sample_batch
from curator_audit.witness import WitnessSet


def test_truncation():
    assert truncate_density(0.003, 1e-4) == 0.003
    assert truncate_density(1e-6, 1e-4) == 1e-4
    assert truncate_probability(0.0, 0.01) == 0.01
    with pytest.raises(ValueError):
        truncate_density(0.1, 0.0)


def test_cp_lower_examples():
    assert binomial_lower_bound(0, 40) == 0.0
    assert binomial_lower_bound(40, 40) == pytest.approx(0.05 ** (1 / 40))
    # brute-force inversion of the binomial tail
    brute = optimize.brentq(lambda p: stats.binom.sf(49, 100, p) - 0.05, 1e-6, 1 - 1e-6, xtol=1e-14)
    assert binomial_lower_bound(50, 100) == pytest.approx(brute, abs=1e-9)
    assert binomial_lower_bound(50, 100) == pytest.approx(0.4136, abs=1e-4)
    with pytest.raises(ValueError):
        binomial_lower_bound(3, 10, 1.0)


@given(st.integers(1, 400), st.data())
def test_cp_bounds_bracket_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = binomial_lower_bound(k, n), binomial_upper_bound(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_cp_coverage():
    rng = np.random.default_rng(5)
    p, n = 0.07, 300
    ks = rng.binomial(n, p, size=1000)
    cover = np.mean([binomial_lower_bound(int(k), n) <= p for k in ks])
    assert cover >= 0.95


def test_bayesian_interval_examples():
    lo, _ = bayesian_interval(10_000, 0, 10_000, 0.03, 0.0)
    assert lo > 7.5
    lo, hi = bayesian_interval(500, 500, 10_000)
    assert lo <= 0 <= hi
    lo, hi = bayesian_interval(600, 300, 10_000, 0.03, 1e-4)
    assert lo <= math.log(2) <= hi


def test_bayesian_interval_empty():
    with pytest.raises(ValueError):
        bayesian_interval(0, 10, 10, 0.03, 0.9)


def test_bayesian_interval_posterior_monte_carlo():
    # joint coverage of the union-bound construction, against posterior draws
    rng = np.random.default_rng(0)
    ka, kb, n, d = 600, 300, 10_000, 1e-4
    pa = rng.beta(1 + ka, 1 + n - ka, 1_000_000)
    pb = rng.beta(1 + kb, 1 + n - kb, 1_000_000)
    xi = np.maximum(np.log((pa - d) / pb), np.log((1 - pb - d) / (1 - pa)))
    lo, hi = bayesian_interval(ka, kb, n, 0.03, d)
    assert np.mean((xi >= lo) & (xi <= hi)) >= 0.97


def test_ratio_model_scalar_tracks_true_ratio():
    spec = MechanismSpec.laplace(2.0)
    a = sample_batch(spec, [0.0], 40_000, 1)
    b = sample_batch(spec, [1.0], 40_000, 2)
    model = fit_ratio_model(a, b, seed=0)
    held = sample_batch(spec, [0.5], 5000, 3)
    orc = oracle(spec)
    true_lr = orc.log_density([0.0], held) - orc.log_density([1.0], held)
    rho = stats.spearmanr(model.score(held), true_lr).statistic
    assert rho >= 0.99
    assert model.score(np.array([-3.0]))[0] > model.score(np.array([3.0]))[0]


def test_ratio_model_no_signal():
    spec = MechanismSpec.laplace(1.0)
    a = sample_batch(spec, [0.0], 20_000, 1)
    b = sample_batch(spec, [0.0], 20_000, 2)
    model = fit_ratio_model(a, b, seed=0)
    s = model.score(sample_batch(spec, [0.0], 2000, 3))
    assert np.all(np.abs(s - 0.5) < 0.05)


def test_ratio_model_svt_class_order():
    spec = MechanismSpec.svt(8.0, thresholds=(1.0,) * 10)
    pair = generate_inputs("All Below", 10)
    a = sample_batch(spec, pair.a, 1_000_000, 1)
    b = sample_batch(spec, pair.a_prime, 1_000_000, 2)
    model = fit_ratio_model(a, b, kind="classes", seed=0)
    orc = oracle(spec)
    outs, pa = orc.enumerate_outputs(pair.a)
    _, pb = orc.enumerate_outputs(pair.a_prime)
    rows = np.array([row_from_symbols(o, 10) for o in outs])
    est = model.log_ratio(rows)
    assert list(np.argsort(est)) == list(np.argsort(np.log(pa / pb)))


def test_ratio_model_degenerate_flagged():
    a = np.zeros(500)
    model = fit_ratio_model(a, a.copy())
    assert model.degenerate


def test_ratio_model_monotone_feature_invariance():
    rng = np.random.default_rng(0)
    a, b = rng.normal(0, 1, 5000), rng.normal(0.5, 1, 5000)
    m1 = fit_ratio_model(a, b, seed=0)
    m2 = fit_ratio_model(np.exp(a), np.exp(b), seed=0)
    probe = rng.normal(0.2, 1, 500)
    r = stats.spearmanr(m1.score(probe), m2.score(np.exp(probe))).statistic
    assert r > 0.999


def test_ratio_model_serializes():
    from curator_audit.estimators import RatioModel
    rng = np.random.default_rng(0)
    m = fit_ratio_model(rng.normal(0, 1, 2000), rng.normal(1, 1, 2000))
    m2 = RatioModel.from_dict(m.to_dict())
    x = rng.normal(0, 2, 50)
    assert np.allclose(m.score(x), m2.score(x))


@pytest.mark.slow
def test_kde_laplace_mode():
    x = sample_batch(MechanismSpec.laplace(1.0), [0.0], 3_000_000, 4)
    assert abs(kde_fit(x)(0.0) - 0.5) <= 0.01


def test_kde_uniform_and_mass():
    x = np.random.default_rng(1).uniform(0, 1, 200_000)
    m = kde_fit(x)
    assert 0.9 <= m(0.5) <= 1.1
    assert m.total_mass() == pytest.approx(1.0, abs=1e-3)
    assert np.all(m.values >= 0)


def test_kde_errors():
    with pytest.raises(ValueError):
        kde_fit(np.ones(500))
    with pytest.raises(TypeError):
        kde_fit(np.zeros((500, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        kde_fit(np.arange(10.0))


def test_kde_error_shrinks_with_samples():
    errs = []
    for n in (50_000, 200_000, 800_000):
        x = sample_batch(MechanismSpec.laplace(1.0), [0.0], n, 7)
        errs.append(abs(kde_fit(x)(0.0) - 0.5))
    assert errs[2] <= errs[0]


def test_power_estimate_invariant():
    w = WitnessSet(0.0)
    with pytest.raises(ValueError):
        PowerEstimate(1.0, 1.5, math.inf, 0.95, w, 10, "x")
    PowerEstimate(1.0, 0.5, math.inf, 0.95, w, 10, "x")


@given(st.floats(-5, 5), st.floats(0, 1))
def test_witness_membership_values(t, q):
    w = WitnessSet(t, q)
    m = w.membership(np.array([t - 1, t, t + 1]))
    assert list(m) == [0.0, q, 1.0]
