import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curator_audit import fp_analyzer as F
from curator_audit.auditors import DEFAULT_SURROGATE, SurrogateFn, dpsgd_audit
from curator_audit.boundary_oracle import check_boundaries
from curator_audit.fp_analyzer import (AttackUnavailable, UnsupportedCombination, Verdict, classify,
                                       construct_attack)
from curator_audit.ground_truth import canonical_pair, true_epsilon
from curator_audit.mechanisms import Family, MechanismSpec, blackbox


# -- classify ----------------------------------------------------------------

@pytest.mark.parametrize("triple,verdict", [
    ((1.0, 2.0, 0.8), Verdict.FP),
    ((1.0, 0.5, 1.3), Verdict.FN),
    ((2.0, 2.0, 2.0), Verdict.TP),
    ((1.0, 0.5, 0.2), Verdict.TP),
    ((1.0, 3.0, 2.0), Verdict.TN),
    ((1.0, math.inf, 1.0), Verdict.FP),
    ((1.0, 1.0 + 1e-12, 1.0), Verdict.FP),
])
def test_classify_examples(triple, verdict):
    assert classify(*triple).verdict is verdict


def test_classify_flags_infeasible_power():
    v = classify(1.0, 0.5, 0.9)
    assert v.infeasible and v.verdict is Verdict.TP
    assert not classify(1.0, 2.0, 0.9).infeasible


def test_classify_rejects_nan():
    with pytest.raises(ValueError):
        classify(1.0, float("nan"), 0.5)


_finite = st.floats(-5, 20, allow_nan=False)


@given(_finite, st.one_of(_finite, st.just(math.inf)), _finite)
def test_classify_total_and_order_free(eps_c, eps_star, xi):
    v = classify(eps_c, eps_star, xi).verdict
    # evaluate the two inequalities in the other order
    claim_false = eps_c < eps_star
    audit_fails = xi > eps_c
    expected = {(False, False): Verdict.TP, (True, False): Verdict.FP,
                (True, True): Verdict.TN, (False, True): Verdict.FN}[(claim_false, audit_fails)]
    assert v is expected
    assert classify(eps_c, eps_star, xi) == classify(eps_c, eps_star, xi)


# -- Laplace ------------------------------------------------------------------

def test_laplace_vacuous_branch_is_unbounded():
    r = F.laplace_sniper_region(0.05, 3.0)
    assert len(r.intervals) == 1
    iv = r.intervals[0]
    assert iv.lo == pytest.approx(3.0) and math.isinf(iv.hi) and not iv.lo_closed
    assert r.notes


def test_laplace_narrow_region():
    r = F.laplace_sniper_region(0.01, 4.0)
    assert r.contains(4.005) and not r.contains(4.5) and not r.contains(3.95)
    iv = r.intervals[0]
    assert iv.hi == pytest.approx(-math.log(0.04 - 0.0004 * math.e ** 4), abs=1e-6)


def test_laplace_p1_excludes_tight_thetas():
    r = F.laplace_sniper_region(0.05, 1.0)
    assert "P1" in r.failing(1.5)
    assert r.empty


def test_laplace_power_formula_matches_oracle_sweep():
    from curator_audit.boundary_oracle import output_masses, sniper_power
    for theta in (4.2, 5.0, 7.0):
        spec = MechanismSpec.laplace(theta)
        m = output_masses(spec, canonical_pair(spec))
        assert sniper_power(m, 0.05) == pytest.approx(F.laplace_sniper_power(theta, 0.05), abs=1e-3)


# -- adapted Laplace ------------------------------------------------------------

def test_adapted_laplace_upper_branch_bound():
    r = F.adapted_laplace_sniper_params(0.01, 2.0, theta1=1.0)
    assert r.intervals[0].lo == pytest.approx(-math.log(2 * 0.01 * (math.e ** 2 - math.e)), abs=1e-6)
    assert r.intervals[0].lo == pytest.approx(F.adapted_laplace_theta2_bound(0.01, 2.0, 1.0), abs=1e-6)


def test_adapted_laplace_lower_branch_bound():
    r = F.adapted_laplace_sniper_params(0.05, 0.5, theta1=0.25)
    lo = r.intervals[0].lo
    assert 0.125 * math.exp(-0.25 * lo) == pytest.approx((math.exp(0.5) - math.exp(0.25)) * 0.05, rel=1e-6)


def test_adapted_laplace_theta1_at_claim_is_empty():
    assert F.adapted_laplace_sniper_params(0.05, 0.5, theta1=0.5).empty
    assert F.adapted_laplace_sniper_params(0.05, 0.5, theta1=0.6).empty


def test_adapted_laplace_default_theta1_is_half_claim():
    r = F.adapted_laplace_sniper_params(0.01, 1.0)
    assert r.fixed["theta1"] == 0.5
    assert math.isinf(true_epsilon(r.spec_at(r.point())).value)


# -- SVT ------------------------------------------------------------------------

@pytest.mark.parametrize("c,eps_c", [(0.01, 0.5), (0.05, 0.6), (0.01, 0.1)])
def test_svt_small_claims_have_no_benchmark_region(c, eps_c):
    assert F.svt_sniper_region(c, eps_c).empty


def test_svt_region_sits_just_above_the_floor_level():
    # R2 caps the power at -ln c, so a region needs eps_c near ln(1/(2c))
    r = F.svt_sniper_region(0.01, 4.0)
    assert not r.empty
    theta = r.point()
    assert true_epsilon(MechanismSpec.svt(theta)).value > 4.0
    assert F.svt_sniper_power(theta, 0.01) <= 4.0


def test_svt_r1_caps_out_at_ln2_for_unbounded_theta():
    # the reverse orientation alone reaches ln 2 - small, so claims below it cannot hide
    for t in (50.0, 200.0):
        assert math.log(2 - 2 * F.svt_gap_survival(1.0, t)) == pytest.approx(math.log(2), abs=1e-5)


@pytest.mark.parametrize("eps_c", [0.1, 0.5, 1.0, 2.0])
def test_adapted_svt_solution_has_g_below_c(eps_c):
    r = F.adapted_svt_sniper_params(0.01, eps_c)
    t1 = r.point()
    assert F.adapted_svt_witness_mass(t1, r.fixed["theta2"]) < 0.01
    assert r.contains(t1)


def test_adapted_svt_theta2_at_or_below_claim_is_empty():
    assert F.adapted_svt_sniper_params(0.01, 1.0, theta2=0.9).empty
    assert F.adapted_svt_sniper_params(0.01, 1.0, theta2=1.0).empty


# -- MPL -------------------------------------------------------------------------

def test_adapted_laplace_mpl_region():
    r = F.adapted_laplace_mpl_params(1e-4, 1.0)
    assert r.contains(1.0) and not r.contains(1.01)
    assert r.intervals[0].hi == 1.0


@pytest.mark.parametrize("eps_c", [0.5, 1.0, 2.0])
def test_adapted_svt_mpl_region(eps_c):
    r = F.adapted_svt_mpl_params(1e-4, eps_c)
    t1 = r.point()
    g = F.adapted_svt_witness_mass(t1, r.fixed["theta2"])
    assert g < 1e-4
    assert math.exp(r.fixed["theta2"]) * g <= math.exp(eps_c) * 1e-4


# -- RAPPOR ----------------------------------------------------------------------

def test_rappor_region_examples():
    r = F.rappor_sniper_region(0.01, 4.0, 2, 8)
    assert [round(iv.lo, 4) for iv in r.intervals] == [0.3991]
    assert r.intervals[0].hi == pytest.approx(0.537883, abs=1e-5)
    assert F.rappor_sniper_region(0.01, 3.0, 2, 12).empty


def test_rappor_theta_one_fails_r1():
    r = F.rappor_sniper_region(0.05, 0.1, 2, 8)
    assert "R1" in r.failing(1.0)


# -- Gaussian / Delta-Siege ---------------------------------------------------------

def test_gaussian_deltasiege_fp_example():
    fp, fn = F.gaussian_deltasiege_regions(0.005, 0.05, 4.8)
    assert not fp.empty
    theta = fp.point()
    eps = F.gaussian_epsilon(theta, 0.05)
    xi = F.gaussian_deltasiege_power(theta, 0.005, 0.05)
    assert classify(4.8, eps, xi).verdict is Verdict.FP


def test_gaussian_deltasiege_fn_example():
    fp, fn = F.gaussian_deltasiege_regions(0.055, 0.005, 0.3)
    assert not fn.empty
    theta = fn.point()
    v = classify(0.3, F.gaussian_epsilon(theta, 0.005), F.gaussian_deltasiege_power(theta, 0.055, 0.005))
    assert v.verdict is Verdict.FN


def test_gaussian_crossover_separates_fp_and_fn():
    roots = F.gaussian_deltasiege_crossover(0.005, 0.05)
    assert roots
    t = roots[0]
    gap = lambda s: F.gaussian_deltasiege_power(s, 0.005, 0.05) - F.gaussian_epsilon(s, 0.05)
    assert abs(gap(t)) < 1e-6
    assert gap(t * 0.9) * gap(t * 1.1) < 0


@pytest.mark.parametrize("outer", ["log", "sqrt"])
def test_gaussian_regions_invariant_under_surrogate_transform(outer):
    base = F.gaussian_deltasiege_regions(0.005, 0.05, 4.0, DEFAULT_SURROGATE, n_grid=80)
    other = F.gaussian_deltasiege_regions(0.005, 0.05, 4.0, SurrogateFn("exp", 1.0, outer=outer), n_grid=80)
    for a, b in zip(base, other):
        assert len(a.intervals) == len(b.intervals)
        for ia, ib in zip(a.intervals, b.intervals):
            assert ia.lo == pytest.approx(ib.lo, abs=1e-8)
            assert ia.hi == pytest.approx(ib.hi, abs=1e-8)


def test_gaussian_regions_reject_bad_delta():
    with pytest.raises(ValueError):
        F.gaussian_deltasiege_regions(0.005, 0.0, 1.0)


# -- DPSGD -------------------------------------------------------------------------

@pytest.mark.parametrize("c,delta_c,eps_c", [(0.02, 1e-4, 3.0), (0.02, 1e-4, 1.0), (0.05, 1e-5, 2.0)])
def test_dpsgd_region_sides(c, delta_c, eps_c):
    r = F.dpsgd_fp_region(c, delta_c, eps_c)
    theta = r.point()
    assert F.dpsgd_sniper_power(theta, c, delta_c) <= eps_c < F.gaussian_epsilon(theta, delta_c)


@pytest.mark.slow
def test_dpsgd_region_audit_upper_end_below_truth():
    r = F.dpsgd_fp_region(0.02, 1e-4, 3.0)
    theta = r.point()
    spec = MechanismSpec.dpsgd(theta)
    est = dpsgd_audit(blackbox(spec), canonical_pair(spec), delta_c=1e-4, n=10_000, min_probability=0.02, seed=0)
    assert est.ci_high < F.gaussian_epsilon(theta, 1e-4)


# -- region mechanics ---------------------------------------------------------------

def _regions():
    return [
        F.laplace_sniper_region(0.01, 4.0),
        F.laplace_sniper_region(0.05, 3.0),
        F.adapted_laplace_sniper_params(0.01, 2.0),
        F.svt_sniper_region(0.05, 2.4),
        F.adapted_svt_sniper_params(0.01, 1.0),
        F.adapted_laplace_mpl_params(1e-4, 1.0),
        F.adapted_svt_mpl_params(1e-4, 1.0),
        F.rappor_sniper_region(0.01, 4.0, 2, 8),
        F.dpsgd_fp_region(0.02, 1e-4, 3.0),
    ]


@pytest.mark.parametrize("region", _regions(), ids=lambda r: r.analysis)
def test_sampled_points_satisfy_every_condition(region):
    rng = np.random.default_rng(0)
    iv = max(region.intervals, key=lambda iv: iv.hi - iv.lo)
    margin = 0.02 if not math.isfinite(iv.hi) else min(0.02, (iv.hi - iv.lo) / (4 * iv.hi))
    for _ in range(25):
        x = region.point(margin, rng)
        assert region.contains(x), (x, region.failing(x))


@pytest.mark.parametrize("region", _regions(), ids=lambda r: r.analysis)
def test_just_outside_a_boundary_the_labeled_condition_fails(region):
    for iv in region.intervals:
        if iv.lo_label != "bracket":
            assert iv.lo_label in region.failing(iv.lo * (1 - 1e-3))
        if iv.hi_label != "bracket" and math.isfinite(iv.hi):
            assert iv.hi_label in region.failing(iv.hi * (1 + 1e-3))


def test_point_keeps_relative_margin():
    r = F.rappor_sniper_region(0.01, 4.0, 2, 8)
    iv = r.intervals[0]
    x = r.point(0.02)
    assert iv.lo * 1.02 <= x <= iv.hi * 0.98


def test_empty_region_point_raises():
    with pytest.raises(F.EmptyRegion):
        F.laplace_sniper_region(0.05, 1.0).point()


def test_csv_rows_and_dict():
    r = F.dpsgd_fp_region(0.02, 1e-4, 3.0)
    rows = r.csv_rows()
    assert rows[0]["settings"] == "c=0.02;delta_c=0.0001"
    assert rows[0]["fixed"] == "clip_norm=1"
    d = r.to_dict()
    assert d["settings"]["c"] == 0.02 and d["intervals"][0]["lo_label"] == "R2"
    assert F.laplace_sniper_region(0.05, 1.0).csv_rows()[0]["empty"] is True


@pytest.mark.parametrize("region", [F.laplace_sniper_region(0.01, 4.0), F.adapted_laplace_sniper_params(0.01, 2.0),
                                    F.adapted_svt_sniper_params(0.01, 1.0), F.rappor_sniper_region(0.01, 4.0, 2, 8),
                                    F.dpsgd_fp_region(0.02, 1e-4, 3.0)], ids=lambda r: r.analysis)
def test_boundaries_match_oracle(region):
    checks = check_boundaries(region)
    assert checks
    for chk in checks:
        assert chk.ok, chk.to_dict()


# -- attack construction ---------------------------------------------------------------

def test_attack_svt_small_claim_goes_adapted():
    m = construct_attack("svt", "dpsniper", 0.1, {"c": 0.01})
    assert m.spec.family is Family.ADAPTED_SVT
    assert m.tried == ("svt", "adapted-svt")
    assert m.spec.params[1] > 0.1


def test_attack_laplace_benchmark():
    m = construct_attack("laplace", "dpsniper", 3.0, {"c": 0.05})
    assert m.spec.family is Family.LAPLACE
    assert m.region.contains(m.spec.params[0])
    assert true_epsilon(m.spec).value > 3.0


def test_attack_laplace_mpl():
    m = construct_attack(Family.LAPLACE, "mpl", 1.0, {"tau": 1e-4})
    assert m.spec.family is Family.ADAPTED_LAPLACE
    assert m.spec.params[0] <= 1.0


def test_attack_manifest_fields():
    d = construct_attack("laplace", "dpsniper", 3.0, {"c": 0.05}).to_dict()
    for key in ("family", "params", "claim", "auditor", "analysis", "margin"):
        assert key in d


def test_attack_unsupported_combinations():
    with pytest.raises(UnsupportedCombination):
        construct_attack("rappor", "mpl", 1.0)
    with pytest.raises(UnsupportedCombination):
        construct_attack("gaussian", "dpsniper", 1.0)


def test_attack_unavailable_when_everything_is_empty():
    with pytest.raises(AttackUnavailable):
        construct_attack("laplace", "deltasiege", 1.0, {"c": 0.05})
