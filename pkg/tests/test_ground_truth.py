import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from curator_audit.boundary_oracle import exact_epsilon, output_masses
from curator_audit.ground_truth import (PrivacyClaim, canonical_pair, delta_curve, inverse_delta_curve,
                                        optimal_witness, rappor_epsilon, svt_benchmark_epsilon, tradeoff,
                                        tradeoff_curve, true_epsilon, witness_probabilities)
from curator_audit.mechanisms import (MechanismSpec, generate_inputs, oracle, rappor_differing_bits,
                                      with_separating_hash)


def test_claim_validation():
    with pytest.raises(ValueError):
        PrivacyClaim(-1.0)
    with pytest.raises(ValueError):
        PrivacyClaim(1.0, 1.0)


@pytest.mark.parametrize("spec,expected,lower", [
    (MechanismSpec.laplace(2.0), 2.0, False),
    (MechanismSpec.adapted_laplace(0.5, 3.0), math.inf, False),
    (MechanismSpec.rappor(1.0, 8, 2), 0.0, False),
    (MechanismSpec.adapted_svt(1.0, 2.5), 2.5, True),
])
def test_true_epsilon_examples(spec, expected, lower):
    eps = true_epsilon(spec)
    assert eps.value == pytest.approx(expected, abs=1e-12) if math.isfinite(expected) else eps.value == math.inf
    assert eps.lower_bound is lower


@pytest.mark.parametrize("theta", [0.5, 2.0, 7.0])
def test_svt_epsilon_matches_enumeration(theta):
    spec = MechanismSpec.svt(theta)
    enumerated = exact_epsilon(output_masses(spec, canonical_pair(spec)))
    assert svt_benchmark_epsilon(theta) == pytest.approx(enumerated, abs=1e-6)
    assert true_epsilon(spec).value == pytest.approx(enumerated, abs=1e-6)


def test_svt_epsilon_large_theta_slope():
    # for small noise the top-mass ratio grows like (3/4) e^{theta/4}
    assert svt_benchmark_epsilon(100.0) == pytest.approx(25.0 - math.log(4 / 3), abs=1e-6)


def test_rappor_epsilon_formula():
    assert rappor_epsilon(0.5, 2) == pytest.approx(4 * (math.log(0.75) - math.log(0.25)))
    spec = MechanismSpec.rappor(0.5, 8, 2)
    sep = with_separating_hash(spec, canonical_pair(spec))
    assert true_epsilon(sep).value == pytest.approx(rappor_epsilon(0.5, 2), abs=1e-9)
    # colliding hashes leave fewer differing bits, and the truth follows the spec as given
    d = rappor_differing_bits(spec, canonical_pair(spec))
    assert d < 4
    assert true_epsilon(spec).value == pytest.approx(d / 4 * rappor_epsilon(0.5, 2), abs=1e-9)
    assert exact_epsilon(output_masses(spec, canonical_pair(spec))) == pytest.approx(true_epsilon(spec).value, abs=1e-9)


def test_laplace_witness_is_lower_half_line():
    w, power = optimal_witness(MechanismSpec.laplace(1.0))
    assert w.interval is not None
    lo, hi = w.interval
    assert lo == -math.inf and hi == pytest.approx(0.0, abs=1e-9)
    assert power == pytest.approx(1.0, abs=1e-6)


def test_rappor_witness_flips_differing_bits():
    spec = MechanismSpec.rappor(0.5, 8, 2)
    pair = canonical_pair(spec)
    spec = with_separating_hash(spec, pair)
    w, power = optimal_witness(spec, pair)
    assert power == pytest.approx(rappor_epsilon(0.5, 2), abs=1e-9)
    # every element flips all 2h differing bits; the remaining bits are unconstrained
    from curator_audit.mechanisms import bloom_bits
    bb = bloom_bits(spec, pair.a_prime)
    diff = bb != bloom_bits(spec, pair.a)
    assert w.elements is not None and len(w.elements) == 2 ** (8 - 4)
    for e in w.elements:
        assert np.all(np.asarray(e)[diff] == 1 - bb[diff])


def test_gaussian_witness_against_grid():
    spec = MechanismSpec.gaussian(1.0)
    pair = canonical_pair(spec)
    w, power = optimal_witness(spec, pair, delta_c=0.05)
    pa, pb = witness_probabilities(spec, pair, w)
    assert pa > 0 and pb > 0
    # brute force over 10^4 thresholds on the upper tail statistic
    orc = oracle(spec)
    ts = np.linspace(-6, 8, 10_000)
    a = np.array([orc.sf(pair.a, t) for t in ts])
    b = np.array([orc.sf(pair.a_prime, t) for t in ts])
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(a - 0.05 > 0, np.log((a - 0.05) / b), -np.inf)
        a2, b2 = 1 - b, 1 - a  # complements, reversed ordering
        dn = np.where(a2 - 0.05 > 0, np.log((a2 - 0.05) / b2), -np.inf)
        # lower tails
        la, lb = 1 - a, 1 - b
        lo1 = np.where(la - 0.05 > 0, np.log((la - 0.05) / lb), -np.inf)
        lo2 = np.where(lb - 0.05 > 0, np.log((lb - 0.05) / la), -np.inf)
    brute = max(np.nanmax(up), np.nanmax(dn), np.nanmax(lo1), np.nanmax(lo2))
    assert power == pytest.approx(brute, abs=1e-3)


@pytest.mark.parametrize("theta,alpha,beta", [
    (1.0, math.exp(-1) / 2, 0.5),
])
def test_laplace_tradeoff_knee(theta, alpha, beta):
    assert tradeoff(tradeoff_curve(MechanismSpec.laplace(theta)), alpha) == pytest.approx(beta)


def test_gaussian_tradeoff_center():
    assert tradeoff(tradeoff_curve(MechanismSpec.gaussian(1.0)), 0.5) == pytest.approx(norm.cdf(-1.0))


def test_tradeoff_limits_and_domain():
    for spec in (MechanismSpec.laplace(2.0), MechanismSpec.gaussian(0.7)):
        c = tradeoff_curve(spec)
        assert tradeoff(c, 1 - 1e-12) < 1e-6
        with pytest.raises(ValueError):
            tradeoff(c, 0.0)
        with pytest.raises(ValueError):
            tradeoff(c, 1.0)


@pytest.mark.parametrize("spec", [MechanismSpec.laplace(0.8), MechanismSpec.laplace(3.0),
                                  MechanismSpec.gaussian(0.5), MechanismSpec.gaussian(2.0)])
def test_tradeoff_convex_nonincreasing(spec):
    a = np.linspace(1e-4, 1 - 1e-4, 4001)
    b = tradeoff(tradeoff_curve(spec), a)
    assert np.all(np.diff(b) <= 1e-12)
    assert np.all(np.diff(b, 2) >= -1e-9)
    assert np.all(a + b <= 1 + 1e-12)


def test_delta_curve_examples():
    assert delta_curve(MechanismSpec.gaussian(1.0), 0.0) == pytest.approx(norm.cdf(0.5) - norm.cdf(-0.5), abs=1e-12)
    assert delta_curve(MechanismSpec.laplace(2.0), 2.0) == pytest.approx(0.0, abs=1e-15)
    assert inverse_delta_curve(MechanismSpec.gaussian(1.0), 0.38292) == pytest.approx(0.0, abs=1e-4)


def test_inverse_delta_out_of_range():
    with pytest.raises(ValueError):
        inverse_delta_curve(MechanismSpec.gaussian(1.0), 0.9)


@given(st.sampled_from(["laplace", "gaussian"]), st.floats(0.3, 4.0), st.floats(0.01, 10.0))
def test_delta_round_trip(fam, theta, eps):
    spec = MechanismSpec.laplace(theta * 3) if fam == "laplace" else MechanismSpec.gaussian(theta)
    d = delta_curve(spec, eps)
    if d <= 1e-13:
        return
    assert inverse_delta_curve(spec, d) == pytest.approx(eps, abs=1e-6)


@pytest.mark.parametrize("spec", [MechanismSpec.laplace(0.4), MechanismSpec.gaussian(0.6)])
def test_delta_curve_nonincreasing(spec):
    d = delta_curve(spec, np.linspace(0, 10, 500))
    assert np.all(np.diff(d) <= 1e-15)


@pytest.mark.parametrize("spec", [MechanismSpec.laplace(1.7), MechanismSpec.svt(3.0), MechanismSpec.rappor(0.4, 8, 2)])
def test_oracle_witness_power_equals_true_epsilon(spec):
    pair = canonical_pair(spec)
    m = output_masses(spec, pair)
    assert exact_epsilon(m) == pytest.approx(true_epsilon(spec).value, abs=1e-6)
    _, power = optimal_witness(spec, pair)
    assert power == pytest.approx(true_epsilon(spec).value, abs=1e-6)
