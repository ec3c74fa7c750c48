"""Blackbox auditors.

Every auditor consumes a :class:`~curator_audit.mechanisms.Sampler` (draws
only) and an :class:`~curator_audit.mechanisms.AdjacentPair`, and returns a
:class:`~curator_audit.estimators.PowerEstimate`.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, stats

from .estimators import (
    PowerEstimate,
    _row_keys,
    bayesian_interval,
    binomial_lower_bound,
    binomial_upper_bound,
    dpsgd_branches,
    fit_ratio_model,
    kde_fit,
)
from .mechanisms import AdjacentPair, Sampler
from .witness import WitnessSet

AUDITORS = ("dpsniper", "mpl", "deltasiege", "dpsgd")

MPL_BUDGET = 3_000_000
DELTASIEGE_BUDGET = 15_000
DPSGD_BUDGET = 10_000


def dpsniper_budget(c: float) -> int:
    """Per-input sample count; 10.7M at c = 0.01 and 2.05M at c = 0.05."""
    quoted = {0.01: 10_700_000, 0.05: 2_050_000}
    for key, n in quoted.items():
        if math.isclose(c, key):
            return n
    return int(round(1.05e5 / c))


def _draw(sampler: Sampler, pair: AdjacentPair, n: int, seed: int, stream: int):
    a = sampler.draw(pair.q_a, n, (seed, stream, 0))
    b = sampler.draw(pair.q_a_prime, n, (seed, stream, 1))
    return a, b


def _is_scalar(samples: np.ndarray) -> bool:
    return samples.ndim == 1 and samples.dtype.kind == "f"


# ---------------------------------------------------------------------------
# DP-Sniper
# ---------------------------------------------------------------------------


def select_threshold(scores_b: np.ndarray, c: float) -> tuple[float, float]:
    """(t, q) such that the randomized set {s > t} + q{s = t} has mass c under the scores."""
    m = len(scores_b)
    target = c * m
    s = np.sort(scores_b)[::-1]
    k = min(int(math.floor(target)), m - 1)
    t = float(s[k])
    above = int(np.sum(scores_b > t))
    ties = int(np.sum(scores_b == t))
    q = (target - above) / ties
    return t, float(min(max(q, 0.0), 1.0))


def _randomized_count(scores: np.ndarray, witness: WitnessSet, rng: np.random.Generator) -> int:
    member = witness.membership(scores)
    tie = (member > 0) & (member < 1)
    return int(np.sum(member == 1.0) + np.sum(rng.random(int(tie.sum())) < witness.tie_probability))


def dpsniper_audit(sampler: Sampler, pair: AdjacentPair, c: float = 0.01, n_train: int | None = None,
                   n_est: int | None = None, confidence: float = 0.95, seed: int = 0,
                   max_fit: int = 200_000) -> PowerEstimate:
    if not 0 < c < 0.5:
        raise ValueError("c must lie in (0, 1/2)")
    budget = dpsniper_budget(c)
    n_train = int(n_train or budget // 2)
    n_est = int(n_est or budget - budget // 2)
    A, B = _draw(sampler, pair, n_train, seed, 0)
    n_fit = min(max_fit // 2, n_train // 2)
    model = fit_ratio_model(A[:n_fit], B[:n_fit], seed=seed)
    sel_b = model.log_ratio(B[n_fit:])
    t, q = select_threshold(sel_b, c)
    witness = WitnessSet(t, q, "above", statistic="model_log_ratio")
    del A, B, sel_b

    A, B = _draw(sampler, pair, n_est, seed, 1)
    rng = np.random.default_rng([seed, 2])
    k_a = _randomized_count(model.log_ratio(A), witness, rng)
    k_b = _randomized_count(model.log_ratio(B), witness, rng)
    p_a, p_b = k_a / n_est, k_b / n_est
    xi = math.log(max(p_a, c)) - math.log(max(p_b, c))
    each = 1.0 - (1.0 - confidence) / 2.0
    lo_a = binomial_lower_bound(k_a, n_est, each)
    hi_b = binomial_upper_bound(k_b, n_est, each)
    ci_low = min(xi, math.log(max(lo_a, c)) - math.log(max(hi_b, c)))
    return PowerEstimate(
        xi, ci_low, math.inf, confidence, witness, 2 * (n_train + n_est), "dpsniper",
        {"c": c, "p_a": p_a, "p_a_prime": p_b, "count_a": k_a, "count_a_prime": k_b,
         "degenerate_model": model.degenerate, "model": model.kind},
        model=model,
    )


# ---------------------------------------------------------------------------
# MPL
# ---------------------------------------------------------------------------

_KERNEL_ROUGHNESS = 1.0 / (2.0 * math.sqrt(math.pi))


def _basic_bootstrap_low(xi: float, boot: np.ndarray, confidence: float) -> float:
    # reverse percentile: |log ratio| is biased upward, so plain percentiles overstate the bound
    if not len(boot):
        return xi
    return max(0.0, min(xi, 2 * xi - float(np.quantile(boot, confidence))))


def mpl_audit(sampler: Sampler, pair: AdjacentPair, tau: float = 1e-4, n: int = MPL_BUDGET,
              confidence: float = 0.95, n_bootstrap: int = 200, bandwidth: str | float = "undersmooth",
              seed: int = 0, max_candidates: int = 20_000) -> PowerEstimate:
    """Maximum truncated log density ratio.

    One half of the samples picks the output with the best lower-confidence
    log ratio; the other half re-estimates the ratio there, so the reported
    value is not inflated by the maximization.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    A, B = _draw(sampler, pair, int(n), seed, 0)
    half = len(A) // 2
    z = stats.norm.ppf(confidence)
    rng = np.random.default_rng([seed, 3])
    if _is_scalar(A):
        return _mpl_scalar(A, B, half, tau, z, rng, confidence, n_bootstrap, bandwidth, max_candidates)
    if A.ndim == 2:
        return _mpl_discrete(A, B, half, tau, z, rng, confidence, n_bootstrap)
    raise TypeError("unsupported output type for MPL")


def _mpl_scalar(A, B, half, tau, z, rng, confidence, n_boot, bandwidth, max_candidates):
    A1, A2, B1, B2 = A[:half], A[half:], B[:half], B[half:]
    ka, kb = kde_fit(A1, bandwidth), kde_fit(B1, bandwidth)
    pool = np.concatenate([A1, B1])
    cand = pool if len(pool) <= max_candidates else rng.choice(pool, max_candidates, replace=False)
    pa, pb = np.maximum(ka(cand), tau), np.maximum(kb(cand), tau)
    lr = np.log(pa) - np.log(pb)
    se = np.sqrt(_KERNEL_ROUGHNESS / (len(A1) * ka.bandwidth * pa) + _KERNEL_ROUGHNESS / (len(B1) * kb.bandwidth * pb))
    # many candidates compete, so the selection margin is Bonferroni-adjusted
    z_sel = stats.norm.ppf(1.0 - (1.0 - stats.norm.cdf(z)) / len(cand))
    b_hat = float(cand[int(np.argmax(np.abs(lr) - z_sel * se))])

    ea, eb = kde_fit(A2, bandwidth), kde_fit(B2, bandwidth)
    pa2, pb2 = max(ea(b_hat), tau), max(eb(b_hat), tau)
    xi = abs(math.log(pa2) - math.log(pb2))

    def local(x, h):
        near = x[np.abs(x - b_hat) < 8 * h]
        return stats.norm.pdf((b_hat - near) / h) / h

    wa, wb = local(A2, ea.bandwidth), local(B2, eb.bandwidth)
    boot = np.empty(n_boot)
    for i in range(n_boot):
        sa = np.dot(rng.poisson(1.0, len(wa)), wa) / len(A2)
        sb = np.dot(rng.poisson(1.0, len(wb)), wb) / len(B2)
        boot[i] = abs(math.log(max(sa, tau)) - math.log(max(sb, tau)))
    ci_low = _basic_bootstrap_low(xi, boot, confidence)
    witness = WitnessSet(float(np.log(pa2) - np.log(pb2)), 1.0, "above", interval=(b_hat, b_hat), statistic="point")
    return PowerEstimate(xi, ci_low, math.inf, confidence, witness, 2 * len(A), "mpl",
                         {"tau": tau, "point": b_hat, "density_a": pa2, "density_a_prime": pb2,
                          "bandwidth_a": ea.bandwidth, "bandwidth_a_prime": eb.bandwidth})


def _mpl_discrete(A, B, half, tau, z, rng, confidence, n_boot):
    keys_a, keys_b = _row_keys(A), _row_keys(B)
    classes, inv = np.unique(np.concatenate([keys_a, keys_b]), return_inverse=True)
    n_a, n_b = len(keys_a), len(keys_b)
    ia, ib = inv[:n_a], inv[n_a:]
    m = len(classes)
    c_a1 = np.bincount(ia[:half], minlength=m)
    c_b1 = np.bincount(ib[:half], minlength=m)
    c_a2 = np.bincount(ia[half:], minlength=m)
    c_b2 = np.bincount(ib[half:], minlength=m)
    n1, n2 = half, n_a - half
    pa, pb = np.maximum(c_a1 / n1, tau), np.maximum(c_b1 / n1, tau)
    lr = np.log(pa) - np.log(pb)
    se = np.sqrt((1 - np.minimum(pa, 1)) / (n1 * pa) + (1 - np.minimum(pb, 1)) / (n1 * pb))
    z_sel = stats.norm.ppf(1.0 - (1.0 - stats.norm.cdf(z)) / max(m, 1))
    j = int(np.argmax(np.abs(lr) - z_sel * se))
    qa, qb = c_a2[j] / n2, c_b2[j] / n2
    xi = abs(math.log(max(qa, tau)) - math.log(max(qb, tau)))
    sa = rng.binomial(n2, qa, n_boot) / n2
    sb = rng.binomial(n2, qb, n_boot) / n2
    boot = np.abs(np.log(np.maximum(sa, tau)) - np.log(np.maximum(sb, tau)))
    ci_low = _basic_bootstrap_low(xi, boot, confidence)
    element = A[np.flatnonzero(ia == j)[0]] if np.any(ia == j) else B[np.flatnonzero(ib == j)[0]]
    witness = WitnessSet(float(math.log(max(qa, tau)) - math.log(max(qb, tau))), 1.0, "above",
                         elements=(tuple(int(v) for v in element),), statistic="point")
    return PowerEstimate(xi, ci_low, math.inf, confidence, witness, 2 * n_a, "mpl",
                         {"tau": tau, "mass_a": qa, "mass_a_prime": qb, "classes": m})


# ---------------------------------------------------------------------------
# Delta-Siege
# ---------------------------------------------------------------------------

_OUTER = {
    None: (lambda r: r, lambda r: r),
    "log": (np.log, np.exp),
    "sqrt": (np.sqrt, np.square),
    "square": (np.square, np.sqrt),
    "cube": (lambda r: r**3, np.cbrt),
}


@dataclass(frozen=True)
class SurrogateFn:
    """Privacy surrogate rho(eps, delta), non-increasing in both arguments.

    kind
        ``"exp"``: e^{-k eps} / delta (k = 1 is the classic 1/(e^eps delta));
        ``"eps"``: sensitivity / eps (ignores delta);
        ``"table"``: bilinear interpolation of a monotone table.
    outer
        optional strictly increasing transform applied on top.
    """

    kind: str = "exp"
    k: float = 1.0
    sensitivity: float = 1.0
    outer: str | None = None
    table_eps: tuple[float, ...] = ()
    table_delta: tuple[float, ...] = ()
    table_values: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in ("exp", "eps", "table"):
            raise ValueError(f"unknown surrogate kind {self.kind!r}")
        if self.outer not in _OUTER:
            raise ValueError(f"unknown outer transform {self.outer!r}")
        if self.kind == "exp" and not self.k > 0:
            raise ValueError("k must be positive")
        self._check_monotone()

    @classmethod
    def parse(cls, text: str) -> "SurrogateFn":
        """Parse CLI names: ``inv``, ``exp:<k>``, ``eps``, optionally ``log(...)``."""
        text = text.strip()
        outer = None
        for name in ("log", "sqrt", "square", "cube"):
            if text.startswith(name + "(") and text.endswith(")"):
                outer, text = name, text[len(name) + 1 : -1]
        if text in ("inv", "1/(e^eps*delta)", "exp"):
            return cls("exp", 1.0, outer=outer)
        if text.startswith("exp:"):
            return cls("exp", float(text[4:]), outer=outer)
        m = re.fullmatch(r"exp\(-([0-9.eE+-]+)\*eps\)/delta", text)
        if m:
            return cls("exp", float(m.group(1)), outer=outer)
        m = re.fullmatch(r"([0-9.eE+-]+)/eps", text)
        if m:
            return cls("eps", sensitivity=float(m.group(1)), outer=outer)
        if text in ("eps", "delta/eps", "sensitivity/eps"):
            return cls("eps", outer=outer)
        raise ValueError(f"unknown surrogate {text!r}")

    def describe(self) -> str:
        base = {"exp": f"exp(-{self.k:g}*eps)/delta", "eps": f"{self.sensitivity:g}/eps", "table": "table"}[self.kind]
        return f"{self.outer}({base})" if self.outer else base

    # -- evaluation -------------------------------------------------------
    def base(self, eps, delta):
        eps = np.asarray(eps, dtype=float)
        delta = np.asarray(delta, dtype=float)
        if self.kind == "exp":
            with np.errstate(divide="ignore"):
                return np.exp(-self.k * eps) / delta
        if self.kind == "eps":
            with np.errstate(divide="ignore"):
                return np.where(eps > 0, self.sensitivity / np.maximum(eps, 1e-300), np.inf) + 0.0 * delta
        from scipy.interpolate import RegularGridInterpolator

        f = RegularGridInterpolator((self.table_eps, self.table_delta), np.asarray(self.table_values),
                                    bounds_error=False, fill_value=None)
        return f(np.stack(np.broadcast_arrays(eps, delta), axis=-1))

    def __call__(self, eps, delta):
        return _OUTER[self.outer][0](self.base(eps, delta))

    def _check_monotone(self):
        es = np.linspace(0.0, 10.0, 41)
        ds = np.logspace(-8, -0.01, 41)
        grid = self(es[:, None], ds[None, :])
        with np.errstate(invalid="ignore"):
            bad = np.any(np.diff(grid, axis=0) > 1e-9 * np.abs(grid[1:])) or np.any(np.diff(grid, axis=1) > 1e-9 * np.abs(grid[:, 1:]))
        if bad:
            raise ValueError("surrogate must be non-increasing in eps and delta")

    # -- optimization -----------------------------------------------------
    def line_minimum(self, alpha, power) -> np.ndarray:
        """min rho over the line delta = power - alpha e^eps, eps >= 0, delta > 0."""
        a = np.asarray(alpha, dtype=float)
        p = np.asarray(power, dtype=float)
        if self.kind == "exp":
            k = self.k
            with np.errstate(divide="ignore", invalid="ignore"):
                x = np.maximum(k * p / ((k + 1.0) * a), 1.0)
                slack = p - a * x
                val = np.where(slack > 0, 1.0 / (x**k * slack), np.inf)
        elif self.kind == "eps":
            with np.errstate(divide="ignore", invalid="ignore"):
                eps = np.log(p / a)
            val = np.where(eps > 0, self.sensitivity / np.where(eps > 0, eps, 1.0), np.inf)
        else:
            val = np.array([self._numeric_line_min(ai, pi) for ai, pi in zip(a.ravel(), p.ravel())]).reshape(a.shape)
        return _OUTER[self.outer][0](val)

    def _numeric_line_min(self, a, p):
        if p - a <= 0:
            return math.inf
        hi = math.log(p / a)
        res = optimize.minimize_scalar(lambda e: float(self.base(e, p - a * math.exp(e))),
                                       bounds=(0.0, hi * (1 - 1e-12)), method="bounded")
        return float(min(res.fun, self.base(0.0, p - a)))

    def solve_eps(self, rho_target: float, delta_c: float) -> float:
        """eps with rho(eps, delta_c) = rho_target (clamped at 0)."""
        if not math.isfinite(rho_target):
            return 0.0
        r = float(_OUTER[self.outer][1](rho_target))
        if self.kind == "exp":
            return max(0.0, -math.log(r * delta_c) / self.k)
        if self.kind == "eps":
            return max(0.0, self.sensitivity / r)
        f = lambda e: float(self.base(e, delta_c)) - r
        if f(0.0) <= 0:
            return 0.0
        hi = 1.0
        while f(hi) > 0 and hi < 1e3:
            hi *= 2
        return float(optimize.brentq(f, 0.0, hi, xtol=1e-12))


DEFAULT_SURROGATE = SurrogateFn("exp", 1.0)


def _threshold_grid(scores_a: np.ndarray, scores_b: np.ndarray, n_interp: int = 1000) -> np.ndarray:
    pooled = np.concatenate([scores_a, scores_b])
    uniq = np.unique(pooled)
    if len(uniq) > 1 and n_interp:
        uniq = np.unique(np.concatenate([uniq, np.linspace(uniq[0], uniq[-1], n_interp)]))
    return uniq


def _upper_counts(scores: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    s = np.sort(scores)
    return len(s) - np.searchsorted(s, thresholds, side="left")


def _cp_lower(k, n, conf):
    k = np.asarray(k)
    return np.where(k > 0, stats.beta.ppf(1 - conf, np.maximum(k, 1), n - k + 1), 0.0)


def _cp_upper(k, n, conf):
    k = np.asarray(k)
    return np.where(k < n, stats.beta.ppf(conf, k + 1, np.maximum(n - k, 1)), 1.0)


def deltasiege_run(sampler: Sampler, pair: AdjacentPair, rho: SurrogateFn, delta_c: float, n: int,
                   confidence: float, seed: int, train_fraction: float = 0.5) -> dict:
    A, B = _draw(sampler, pair, n, seed, 0)
    n_fit = max(1, int(n * train_fraction))
    model = fit_ratio_model(A[:n_fit], B[:n_fit], seed=seed)
    sa, sb = model.log_ratio(A[n_fit:]), model.log_ratio(B[n_fit:])
    m = len(sa)
    ts = _threshold_grid(sa, sb)
    ka, kb = _upper_counts(sa, ts), _upper_counts(sb, ts)
    alpha_hi = _cp_upper(kb, m, confidence)
    power_lo = _cp_lower(ka, m, confidence)
    vals = rho.line_minimum(alpha_hi, power_lo)
    if not np.any(np.isfinite(vals)):
        return {"xi": 0.0, "rho_star": math.inf, "attained": False, "alpha": math.nan, "beta": math.nan,
                "threshold": math.nan, "n_eval": m}
    i = int(np.argmin(vals))
    xi = rho.solve_eps(float(vals[i]), delta_c)
    return {"xi": xi, "rho_star": float(vals[i]), "attained": True, "alpha": kb[i] / m,
            "beta": 1.0 - ka[i] / m, "alpha_bound": float(alpha_hi[i]), "power_bound": float(power_lo[i]),
            "threshold": float(ts[i]), "n_eval": m}


def deltasiege_audit(sampler: Sampler, pair: AdjacentPair, rho: SurrogateFn = DEFAULT_SURROGATE,
                     delta_c: float = 1e-5, n: int = DELTASIEGE_BUDGET, confidence: float = 0.90,
                     seed: int = 0, runs: int = 5) -> PowerEstimate:
    """Surrogate-minimizing audit; the maximum over ``runs`` independent runs is reported."""
    if not 0.0 < delta_c < 1.0:
        raise ValueError("delta_c must lie in (0, 1) for the surrogate")
    results = [deltasiege_run(sampler, pair, rho, delta_c, n, confidence, seed * 1000 + r) for r in range(runs)]
    if not any(r["attained"] for r in results):
        raise RuntimeError("rho* unattained: every threshold gives an infeasible line")
    best = max(results, key=lambda r: r["xi"])
    xi = best["xi"]
    witness = WitnessSet(best["threshold"], 1.0, "above", statistic="model_log_ratio")
    return PowerEstimate(xi, xi, math.inf, confidence, witness, 2 * n * runs, "deltasiege",
                         {"delta_c": delta_c, "surrogate": rho.describe(), "alpha": best["alpha"],
                          "beta": best["beta"], "rho_star": best["rho_star"],
                          "runs": [r["xi"] for r in results], "run_alpha": [r["alpha"] for r in results]})


# ---------------------------------------------------------------------------
# DPSGD-Audit
# ---------------------------------------------------------------------------


def dpsgd_audit(sampler: Sampler, pair: AdjacentPair, delta_c: float = 0.0, n: int = DPSGD_BUDGET,
                significance: float = 0.03, min_probability: float = 0.0, seed: int = 0,
                n_interp: int = 1000) -> PowerEstimate:
    """Threshold audit with the two-branch power and a two-sided Bayesian interval.

    ``min_probability`` restricts the sweep to thresholds where both branch
    denominators are at least that large on the selection half.
    """
    if not 0.0 <= delta_c < 1.0:
        raise ValueError("delta_c must lie in [0, 1)")
    A, B = _draw(sampler, pair, int(n), seed, 0)
    half = len(A) // 2
    model = fit_ratio_model(A[:half], B[:half], seed=seed)
    s_a1, s_b1 = model.log_ratio(A[:half]), model.log_ratio(B[:half])
    ts = _threshold_grid(s_a1, s_b1, n_interp)
    pa = _upper_counts(s_a1, ts) / half
    pb = _upper_counts(s_b1, ts) / half
    with np.errstate(divide="ignore", invalid="ignore"):
        br1 = np.where((pa - delta_c > 0) & (pb > 0), np.log(pa - delta_c) - np.log(pb), np.where(pa - delta_c > 0, np.inf, -np.inf))
        br2 = np.where((1 - pb - delta_c > 0) & (1 - pa > 0), np.log(1 - pb - delta_c) - np.log(1 - pa),
                       np.where(1 - pb - delta_c > 0, np.inf, -np.inf))
    ok = (pb >= min_probability) & (1 - pa >= min_probability)
    if min_probability <= 0:
        ok &= (pb > 0) | (1 - pa > 0)
    value = np.where(ok, np.maximum(br1, br2), -np.inf)
    finite = np.where(np.isfinite(value), value, -np.inf)
    if not np.any(np.isfinite(finite)):
        raise RuntimeError("power undefined: delta_c exceeds the numerator probability at every threshold")
    i = int(np.argmax(finite))
    t = float(ts[i])

    m = len(A) - half
    k_a = int(np.sum(model.log_ratio(A[half:]) >= t))
    k_b = int(np.sum(model.log_ratio(B[half:]) >= t))
    lo, hi = bayesian_interval(k_a, k_b, m, significance, delta_c)
    point = max(dpsgd_branches(k_a / m, k_b / m, delta_c))
    point = min(max(point, lo), hi)
    witness = WitnessSet(t, 1.0, "above", statistic="model_log_ratio")
    return PowerEstimate(point, lo, hi, 1.0 - significance, witness, 2 * len(A), "dpsgd",
                         {"delta_c": delta_c, "count_a": k_a, "count_a_prime": k_b, "trials": m,
                          "p_a": k_a / m, "p_a_prime": k_b / m, "min_probability": min_probability})


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


@dataclass
class AuditRecord:
    tool: str
    pair: AdjacentPair
    estimate: PowerEstimate
    seed: int
    config: dict
    wall_time: float
    orientation: str = "forward"

    def to_dict(self) -> dict:
        return {"tool": self.tool, "pair": self.pair.to_dict(), "orientation": self.orientation,
                "seed": self.seed, "config": self.config, "wall_time": round(self.wall_time, 3),
                **{k: v for k, v in self.estimate.to_dict().items() if k != "tool"}}


def run_auditor(tool: str, sampler: Sampler, pair: AdjacentPair, config: dict | None = None,
                seed: int = 0, both_orientations: bool = True) -> AuditRecord:
    """Run one auditor; optionally audit both orderings of the pair and keep the stronger."""
    config = dict(config or {})
    fn: Callable[..., PowerEstimate] = {
        "dpsniper": dpsniper_audit,
        "mpl": mpl_audit,
        "deltasiege": deltasiege_audit,
        "dpsgd": dpsgd_audit,
    }[tool]
    kwargs = dict(config)
    if tool == "deltasiege" and isinstance(kwargs.get("rho"), str):
        kwargs["rho"] = SurrogateFn.parse(kwargs["rho"])
    start = time.perf_counter()
    best, orient = fn(sampler, pair, seed=seed, **kwargs), "forward"
    if both_orientations:
        other = fn(sampler, pair.swapped(), seed=seed + 7919, **kwargs)
        key = (lambda e: e.ci_low) if tool != "deltasiege" else (lambda e: e.xi_star)
        if key(other) > key(best):
            best, orient = other, "swapped"
    return AuditRecord(tool, pair, best, seed, {k: (v.describe() if isinstance(v, SurrogateFn) else v)
                                                for k, v in config.items()},
                       time.perf_counter() - start, orient)
