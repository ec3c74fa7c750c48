"""Theoretical privacy quantities: true epsilon, optimal witnesses, curves."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy.stats import norm

from .mechanisms import (
    SCALAR_FAMILIES,
    SVT_FAMILIES,
    AdjacentPair,
    DensityOracle,
    Family,
    MechanismSpec,
    generate_inputs,
    rappor_differing_bits,
)
from .witness import WitnessSet


class EpsilonStar(NamedTuple):
    value: float
    lower_bound: bool = False

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class PrivacyClaim:
    eps_c: float
    delta_c: float = 0.0

    def __post_init__(self):
        if not self.eps_c >= 0:
            raise ValueError("eps_c must be non-negative")
        if not 0.0 <= self.delta_c < 1.0:
            raise ValueError("delta_c must lie in [0, 1)")


# ---------------------------------------------------------------------------
# closed-form helpers
# ---------------------------------------------------------------------------


def svt_gap_survival(x: float, theta: float, sensitivity: float = 1.0) -> float:
    """Pr[nu - rho >= x] for benchmark SVT with one query, t̄ = 1, x >= 0."""
    if x < 0:
        raise ValueError("closed form holds for x >= 0")
    lam = theta / (4.0 * sensitivity)
    return (2.0 / 3.0) * math.exp(-lam * x) - (1.0 / 6.0) * math.exp(-2.0 * lam * x)


def svt_benchmark_epsilon(theta: float) -> float:
    """Log mass ratio of the top output for the pair ([1], [0]) at threshold 1."""
    return -math.log(2.0 * svt_gap_survival(1.0, theta))


def adapted_svt_f(theta1: float, theta2: float) -> float:
    k = theta1 * theta2
    if k <= 0:
        raise ValueError("theta1 * theta2 must be positive")
    return (math.exp(-k) - math.exp(-2.0 * k)) / k


def adapted_svt_witness_mass(theta1: float, theta2: float, sensitivity: float = 1.0) -> float:
    """Mass of the bottom output under the larger query answer (one query, t̄ = 1)."""
    return 0.5 * adapted_svt_f(theta1, theta2 / sensitivity)


def rappor_epsilon(theta: float, h: int) -> float:
    return 2 * h * (math.log1p(-theta / 2.0) - math.log(theta / 2.0))


def hockey_stick(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    """sup_S P(S) - e^eps Q(S) for discrete distributions."""
    return float(np.sum(np.maximum(0.0, p - math.exp(eps) * q)))


# ---------------------------------------------------------------------------
# canonical pairs
# ---------------------------------------------------------------------------


def canonical_pair(spec: MechanismSpec) -> AdjacentPair:
    """The adjacent pair the closed-form analyses are written for."""
    fam, d = spec.family, spec.sensitivity
    if fam in (Family.LAPLACE, Family.ADAPTED_LAPLACE, Family.GAUSSIAN):
        return AdjacentPair((0.0,), (d,), "One Above (zero based)")
    if fam == Family.DPSGD:
        return AdjacentPair((1.0,), (0.0,), "canary in/out")
    if fam == Family.SVT:
        return generate_inputs("One Below", spec.input_dim, d)
    if fam == Family.ADAPTED_SVT:
        return generate_inputs("One Below", spec.input_dim, d).swapped()
    return generate_inputs("One Below", 1, 1.0)


def _is_canonical_svt(spec: MechanismSpec, pair: AdjacentPair) -> bool:
    return (
        spec.input_dim == 1
        and spec.abort_count == 1
        and math.isclose(spec.thresholds[0], spec.sensitivity)
        and pair.q_a == (spec.sensitivity,)
        and pair.q_a_prime == (0.0,)
    )


# ---------------------------------------------------------------------------
# true epsilon
# ---------------------------------------------------------------------------


def _discrete_masses(spec: MechanismSpec, pair: AdjacentPair):
    orc = DensityOracle(spec)
    outs, pa = orc.enumerate_outputs(pair.q_a)
    _, pb = orc.enumerate_outputs(pair.q_a_prime)
    return outs, pa, pb


def _discrete_epsilon(pa: np.ndarray, pb: np.ndarray, delta_c: float) -> float:
    if delta_c <= 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(pa) - np.log(pb)
        lr = lr[(pa > 0) | (pb > 0)]
        return float(np.max(np.abs(lr)))

    def excess(e):
        return max(hockey_stick(pa, pb, e), hockey_stick(pb, pa, e)) - delta_c

    if excess(0.0) <= 0:
        return 0.0
    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e4:
            return math.inf
    return float(optimize.brentq(excess, 0.0, hi, xtol=1e-12))


def _sigma_over_delta(spec: MechanismSpec, distance: float) -> float:
    if spec.family == Family.DPSGD:
        # the canary shifts the statistic by exactly one clip norm
        return spec.theta * min(distance, 1.0) if distance else math.inf
    return spec.theta / distance


def true_epsilon(spec: MechanismSpec, delta_c: float = 0.0, pair: AdjacentPair | None = None) -> EpsilonStar:
    """Smallest epsilon with which ``spec`` is (epsilon, delta_c)-DP on the pair.

    Without an explicit pair the canonical pair of the family is used.
    """
    if not 0.0 <= delta_c < 1.0:
        raise ValueError("delta_c must lie in [0, 1)")
    fam = spec.family
    explicit = pair is not None
    pair = pair or canonical_pair(spec)

    if fam == Family.LAPLACE:
        dist = pair.max_difference()
        eps0 = spec.theta * dist / spec.sensitivity
        if delta_c == 0:
            return EpsilonStar(eps0)
        return EpsilonStar(max(0.0, eps0 + 2.0 * math.log1p(-delta_c)))
    if fam == Family.ADAPTED_LAPLACE:
        if pair.max_difference() == 0:
            return EpsilonStar(0.0)
        p_inf = _adapted_laplace_infinite_mass(spec, pair)
        if delta_c < p_inf:
            return EpsilonStar(math.inf)
        raise ValueError("AdaptedLaplace epsilon is only available for delta_c below the unbounded-ratio mass")
    if fam in (Family.GAUSSIAN, Family.DPSGD):
        dist = pair.max_difference()
        if dist == 0:
            return EpsilonStar(0.0)
        if delta_c == 0:
            return EpsilonStar(math.inf)
        s = _sigma_over_delta(spec, dist)
        return EpsilonStar(_gaussian_inverse_delta(s, delta_c))
    if fam == Family.SVT:
        if delta_c == 0 and _is_canonical_svt(spec, pair):
            return EpsilonStar(svt_benchmark_epsilon(spec.theta))
        _, pa, pb = _discrete_masses(spec, pair)
        return EpsilonStar(_discrete_epsilon(pa, pb, delta_c))
    if fam == Family.ADAPTED_SVT:
        if not explicit and delta_c == 0:
            return EpsilonStar(spec.params[1], lower_bound=True)
        _, pa, pb = _discrete_masses(spec, pair)
        return EpsilonStar(_discrete_epsilon(pa, pb, delta_c), lower_bound=True)
    if fam == Family.RAPPOR:
        if delta_c == 0:
            # each differing filter bit contributes one randomized-response ratio
            d = rappor_differing_bits(spec, pair)
            return EpsilonStar(d / 2 * rappor_epsilon(spec.theta, 1)) if spec.theta < 1 else EpsilonStar(0.0)
        _, pa, pb = _discrete_masses(spec, pair)
        return EpsilonStar(_discrete_epsilon(pa, pb, delta_c))
    raise ValueError(f"unsupported family {fam}")


def _adapted_laplace_infinite_mass(spec: MechanismSpec, pair: AdjacentPair) -> float:
    orc = DensityOracle(spec)
    lo_a, hi_a = orc.support(pair.q_a)
    lo_b, hi_b = orc.support(pair.q_a_prime)
    # mass of each input on the part of its support the other cannot reach
    m_a = orc.interval_probability(pair.q_a, lo_a, min(hi_a, lo_b)) + orc.interval_probability(pair.q_a, max(lo_a, hi_b), hi_a)
    m_b = orc.interval_probability(pair.q_a_prime, lo_b, min(hi_b, lo_a)) + orc.interval_probability(pair.q_a_prime, max(lo_b, hi_a), hi_b)
    return max(m_a, m_b)


# ---------------------------------------------------------------------------
# tradeoff and delta curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TradeoffCurve:
    family: str  # "laplace" or "gaussian"
    theta: float
    sensitivity: float = 1.0

    def beta(self, alpha):
        a = np.asarray(alpha, dtype=float)
        if self.family == "gaussian":
            out = norm.cdf(norm.isf(a) - self.sensitivity / self.theta)
        else:
            e = math.exp(-self.theta)
            out = np.where(
                a < e / 2.0,
                1.0 - a / e,
                np.where(a < 0.5, e / (4.0 * np.maximum(a, 1e-300)), e * (1.0 - a)),
            )
        return float(out) if np.ndim(out) == 0 else out


def tradeoff_curve(spec: MechanismSpec) -> TradeoffCurve:
    if spec.family == Family.LAPLACE:
        return TradeoffCurve("laplace", spec.theta, spec.sensitivity)
    if spec.family == Family.GAUSSIAN:
        return TradeoffCurve("gaussian", spec.theta, spec.sensitivity)
    if spec.family == Family.DPSGD:
        return TradeoffCurve("gaussian", spec.theta * spec.clip_norm, spec.clip_norm)
    raise ValueError(f"no closed-form tradeoff curve for {spec.family.value}")


def tradeoff(curve: TradeoffCurve, alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any((a <= 0) | (a >= 1)):
        raise ValueError("alpha must lie in (0, 1)")
    return curve.beta(alpha)


def _gaussian_delta(s: float, eps) -> np.ndarray | float:
    """Privacy profile of a Gaussian with noise/sensitivity ratio s."""
    e = np.asarray(eps, dtype=float)
    first = norm.cdf(-e * s + 1.0 / (2.0 * s))
    second = np.exp(e + norm.logcdf(-e * s - 1.0 / (2.0 * s)))
    out = np.maximum(first - second, 0.0)
    return float(out) if np.ndim(out) == 0 else out


EPS_BRACKET = 50.0


def _gaussian_inverse_delta(s: float, delta: float) -> float:
    d0 = _gaussian_delta(s, 0.0)
    if not 0 < delta <= d0:
        raise ValueError(f"delta {delta} outside the curve range (0, {d0:.6g}]")
    if _gaussian_delta(s, EPS_BRACKET) > delta:
        raise ValueError(f"delta {delta} needs epsilon beyond the search bracket [0, {EPS_BRACKET}]")
    return float(optimize.brentq(lambda e: _gaussian_delta(s, e) - delta, 0.0, EPS_BRACKET, xtol=1e-12, rtol=1e-14))


def delta_curve(spec: MechanismSpec, eps):
    """delta(eps) for Laplace / Gaussian / DPSGD on the canonical pair."""
    e = np.asarray(eps, dtype=float)
    if np.any(e < 0):
        raise ValueError("epsilon must be non-negative")
    if spec.family == Family.LAPLACE:
        out = np.maximum(0.0, -np.expm1((e - spec.theta) / 2.0))
        return float(out) if np.ndim(out) == 0 else out
    if spec.family in (Family.GAUSSIAN, Family.DPSGD):
        return _gaussian_delta(_sigma_over_delta(spec, spec.sensitivity if spec.family == Family.GAUSSIAN else 1.0), e)
    raise ValueError(f"no closed-form delta curve for {spec.family.value}")


def inverse_delta_curve(spec: MechanismSpec, delta_c: float) -> float:
    if spec.family == Family.LAPLACE:
        d0 = -math.expm1(-spec.theta / 2.0)
        if not 0 < delta_c <= d0:
            raise ValueError(f"delta {delta_c} outside the curve range (0, {d0:.6g}]")
        return max(0.0, spec.theta + 2.0 * math.log1p(-delta_c))
    if spec.family in (Family.GAUSSIAN, Family.DPSGD):
        return _gaussian_inverse_delta(_sigma_over_delta(spec, spec.sensitivity if spec.family == Family.GAUSSIAN else 1.0), delta_c)
    raise ValueError(f"no closed-form delta curve for {spec.family.value}")


def export_tradeoff_csv(curve: TradeoffCurve, path, n_points: int = 999) -> None:
    alphas = np.linspace(0, 1, n_points + 2)[1:-1]
    betas = curve.beta(alphas)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "beta"])
        for a, b in zip(alphas, betas):
            w.writerow([f"{a:.10g}", f"{b:.10g}"])


def export_delta_curve_csv(spec: MechanismSpec, path, eps_grid: Sequence[float]) -> None:
    deltas = np.atleast_1d(delta_curve(spec, np.asarray(eps_grid, dtype=float)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "delta"])
        for e, d in zip(eps_grid, deltas):
            w.writerow([f"{e:.10g}", f"{d:.10g}"])


# ---------------------------------------------------------------------------
# optimal witness
# ---------------------------------------------------------------------------


def two_branch_power(p_a: float, p_b: float, delta_c: float) -> float:
    """max of ln((P_a(S)-d)/P_b(S)) and ln((1-P_b(S)-d)/(1-P_a(S)))."""
    vals = []
    for num, den in ((p_a - delta_c, p_b), (1.0 - p_b - delta_c, 1.0 - p_a)):
        if num <= 0:
            continue
        vals.append(math.inf if den <= 0 else math.log(num / den))
    return max(vals) if vals else -math.inf


def _scalar_scale(spec: MechanismSpec) -> float:
    if spec.family == Family.DPSGD:
        return spec.theta * spec.clip_norm
    if spec.family == Family.GAUSSIAN:
        return spec.theta
    if spec.family == Family.LAPLACE:
        return spec.sensitivity / spec.theta
    t1, t2 = spec.params
    return t2 + spec.sensitivity / t1


def optimal_witness(spec: MechanismSpec, pair: AdjacentPair | None = None, delta_c: float = 0.0,
                    n_thresholds: int = 10_000) -> tuple[WitnessSet, float]:
    """Best outcome set for the pair and its two-branch power.

    Returns ``(witness, power)``; at ``delta_c = 0`` the power equals the
    pair's epsilon.
    """
    pair = pair or canonical_pair(spec)
    if spec.family in SCALAR_FAMILIES:
        return _scalar_witness(spec, pair, delta_c, n_thresholds)
    outs, pa, pb = _discrete_masses(spec, pair)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(pa) - np.log(pb)
    keep = (pa > 0) | (pb > 0)
    if delta_c == 0:
        best = np.max(lr[keep])
        sel = [o for o, v, k in zip(outs, lr, keep) if k and v >= best - 1e-12]
        return WitnessSet(float(best), 1.0, "above", elements=tuple(sel)), float(best)
    order = np.argsort(-np.where(keep, lr, -np.inf), kind="stable")
    ca, cb = np.cumsum(pa[order]), np.cumsum(pb[order])
    vals = [two_branch_power(a, b, delta_c) for a, b in zip(ca, cb)]
    i = int(np.argmax(vals))
    sel = tuple(outs[j] for j in order[: i + 1])
    return WitnessSet(float(lr[order[i]]), 1.0, "above", elements=sel), float(vals[i])


def _scalar_witness(spec, pair, delta_c, n_thresholds):
    orc = DensityOracle(spec)
    qa = orc._center_scale(pair.q_a)[0]
    qb = orc._center_scale(pair.q_a_prime)[0]
    if qa == qb:
        return WitnessSet(0.0, 1.0, "above", interval=(-math.inf, math.inf)), 0.0
    low_side = qa < qb  # a's outputs are smaller, ratio is high on the left
    if delta_c == 0:
        if spec.family == Family.LAPLACE:
            edge = min(qa, qb) if low_side else max(qa, qb)
            eps = true_epsilon(spec, 0.0, pair).value
            interval = (-math.inf, edge) if low_side else (edge, math.inf)
            return WitnessSet(eps, 1.0, "above", interval=interval), eps
        if spec.family == Family.ADAPTED_LAPLACE:
            lo_a, hi_a = orc.support(pair.q_a)
            lo_b, hi_b = orc.support(pair.q_a_prime)
            interval = (lo_a, lo_b) if low_side else (hi_b, hi_a)
            return WitnessSet(math.inf, 1.0, "above", interval=interval), math.inf
        raise ValueError("likelihood ratio is unbounded; no finite argmax set at delta_c = 0")

    scale = _scalar_scale(spec)
    lo, hi = min(qa, qb) - 40 * scale, max(qa, qb) + 40 * scale
    if spec.family == Family.ADAPTED_LAPLACE:
        lo, hi = min(orc.support(pair.q_a)[0], orc.support(pair.q_a_prime)[0]), max(orc.support(pair.q_a)[1], orc.support(pair.q_a_prime)[1])

    def power_at(t):
        if low_side:
            pa_, pb_ = orc.cdf(pair.q_a, t), orc.cdf(pair.q_a_prime, t)
        else:
            pa_, pb_ = orc.sf(pair.q_a, t), orc.sf(pair.q_a_prime, t)
        return two_branch_power(pa_, pb_, delta_c)

    grid = np.linspace(lo, hi, n_thresholds)
    vals = np.array([power_at(t) for t in grid])
    finite = np.where(np.isfinite(vals), vals, -np.inf)
    i = int(np.argmax(finite))
    if not np.isfinite(finite[i]):
        raise RuntimeError("threshold sweep found no feasible set")
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda t: -power_at(t), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10 * max(1.0, scale)})
    t_best, v_best = (res.x, -res.fun) if -res.fun >= finite[i] else (grid[i], finite[i])
    interval = (-math.inf, float(t_best)) if low_side else (float(t_best), math.inf)
    lr_t = float(orc.log_density(pair.q_a, t_best) - orc.log_density(pair.q_a_prime, t_best))
    return WitnessSet(lr_t, 1.0, "above", interval=interval), float(v_best)


def witness_probabilities(spec: MechanismSpec, pair: AdjacentPair, witness: WitnessSet) -> tuple[float, float]:
    """Exact (Pr[M(a) in S], Pr[M(a') in S]) of an explicit witness."""
    orc = DensityOracle(spec)
    if witness.interval is not None:
        lo, hi = witness.interval
        return orc.interval_probability(pair.q_a, lo, hi), orc.interval_probability(pair.q_a_prime, lo, hi)
    if witness.elements is not None:
        pa = sum(orc.probability(pair.q_a, e) for e in witness.elements)
        pb = sum(orc.probability(pair.q_a_prime, e) for e in witness.elements)
        return pa, pb
    raise ValueError("witness has no explicit representation")
