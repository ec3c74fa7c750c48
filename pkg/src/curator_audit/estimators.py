"""Estimation primitives: likelihood-ratio classifier, KDE, confidence bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import fft, optimize, signal, stats
from sklearn.linear_model import LogisticRegression

from .witness import WitnessSet

# ---------------------------------------------------------------------------
# confidence bounds
# ---------------------------------------------------------------------------


def _check_counts(successes: int, trials: int) -> None:
    if trials < 0 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")


def _check_level(level: float, name: str = "confidence") -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f"{name} must lie in (0, 1)")


def binomial_lower_bound(successes: int, trials: int, confidence: float = 0.95) -> float:
    """One-sided Clopper-Pearson lower bound."""
    _check_counts(successes, trials)
    _check_level(confidence)
    if successes == 0:
        return 0.0
    return float(stats.beta.ppf(1.0 - confidence, successes, trials - successes + 1))


def binomial_upper_bound(successes: int, trials: int, confidence: float = 0.95) -> float:
    """One-sided Clopper-Pearson upper bound."""
    _check_counts(successes, trials)
    _check_level(confidence)
    if successes == trials:
        return 1.0
    return float(stats.beta.ppf(confidence, successes + 1, trials - successes))


def _log_ratio(num: float, den: float) -> float:
    if num <= 0:
        return -math.inf
    if den <= 0:
        return math.inf
    return math.log(num) - math.log(den)


def dpsgd_branches(p_a: float, p_b: float, delta_c: float) -> tuple[float, float]:
    """The two log-ratio branches used by the two-sided DPSGD power."""
    return _log_ratio(p_a - delta_c, p_b), _log_ratio(1.0 - p_b - delta_c, 1.0 - p_a)


def bayesian_interval(successes_a: int, successes_b: int, trials: int, significance: float = 0.03,
                      delta_c: float = 0.0) -> tuple[float, float]:
    """Two-sided interval on the DPSGD power from Beta(1, 1) posteriors.

    Each membership probability gets an equal-tailed credible interval at
    level ``1 - significance / 2``; the union bound makes the joint coverage
    at least ``1 - significance``. Both branches are propagated and the
    larger one kept at each end.
    """
    _check_counts(successes_a, trials)
    _check_counts(successes_b, trials)
    _check_level(significance, "significance")
    if not 0.0 <= delta_c < 1.0:
        raise ValueError("delta_c must lie in [0, 1)")
    tail = significance / 4.0
    post_a = stats.beta(1 + successes_a, 1 + trials - successes_a)
    post_b = stats.beta(1 + successes_b, 1 + trials - successes_b)
    a_lo, a_hi = post_a.ppf(tail), post_a.isf(tail)
    b_lo, b_hi = post_b.ppf(tail), post_b.isf(tail)
    lo = max(_log_ratio(a_lo - delta_c, b_hi), _log_ratio(1.0 - b_hi - delta_c, 1.0 - a_lo))
    hi = max(_log_ratio(a_hi - delta_c, b_lo), _log_ratio(1.0 - b_lo - delta_c, 1.0 - a_hi))
    if hi == -math.inf:
        raise ValueError("delta_c exceeds the posterior mass on both branches; interval is empty")
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------


def truncate_density(p_hat, tau: float):
    if not tau > 0:
        raise ValueError("tau must be positive")
    out = np.maximum(p_hat, tau)
    return float(out) if np.ndim(out) == 0 else out


def truncate_probability(pr_hat, c: float):
    if not c > 0:
        raise ValueError("c must be positive")
    out = np.maximum(pr_hat, c)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# power estimate container
# ---------------------------------------------------------------------------


@dataclass
class PowerEstimate:
    xi_star: float
    ci_low: float
    ci_high: float = math.inf
    confidence: float = 0.95
    witness: WitnessSet | None = None
    sample_count: int = 0
    tool: str = ""
    details: dict[str, Any] = field(default_factory=dict)
    # fitted classifier, kept for diagnostics only (never serialized)
    model: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (self.ci_low <= self.xi_star <= self.ci_high):
            raise ValueError(
                f"interval [{self.ci_low}, {self.ci_high}] does not contain the estimate {self.xi_star}"
            )

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            if isinstance(v, (np.floating, np.integer)):
                return enc(v.item())
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            return v

        return {
            "tool": self.tool,
            "xi_star": enc(float(self.xi_star)),
            "ci_low": enc(float(self.ci_low)),
            "ci_high": enc(float(self.ci_high)),
            "confidence": self.confidence,
            "sample_count": int(self.sample_count),
            "witness": self.witness.to_dict() if self.witness else None,
            "details": enc(self.details),
        }


# ---------------------------------------------------------------------------
# likelihood-ratio classifier
# ---------------------------------------------------------------------------


def _row_keys(rows: np.ndarray) -> np.ndarray:
    rows = np.ascontiguousarray(rows)
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()


@dataclass
class RatioModel:
    """Monotone proxy for the likelihood ratio r(b) = p(b|a) / p(b|a').

    ``log_ratio`` is the classifier's logit; with balanced training data it
    estimates ln r(b). ``score`` is the posterior p(a|b).

    kind
        ``"scalar"``: logistic on [u, |u - 1/2|, 1] where u is the pooled
        empirical CDF of the training outputs (a rank feature).
        ``"bits"``: logistic on the raw bits plus intercept.
        ``"classes"``: logistic on one-hot output classes.
    """

    kind: str
    weights: np.ndarray
    intercept: float = 0.0
    knots: np.ndarray | None = None
    classes: list | None = None
    degenerate: bool = False
    n_train: int = 0

    # -- features ---------------------------------------------------------
    def rank_feature(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        k = self.knots
        probs = np.linspace(0.0, 1.0, len(k))
        u = np.interp(b, k, probs)
        span = k[-1] - k[0]
        lo_slope = (probs[1] - probs[0]) / max(k[1] - k[0], 1e-12 * max(span, 1.0))
        hi_slope = (probs[-1] - probs[-2]) / max(k[-1] - k[-2], 1e-12 * max(span, 1.0))
        u = np.where(b < k[0], (b - k[0]) * lo_slope, u)
        u = np.where(b > k[-1], 1.0 + (b - k[-1]) * hi_slope, u)
        return u

    def _design(self, samples) -> np.ndarray:
        if self.kind == "scalar":
            u = self.rank_feature(samples)
            return np.column_stack([u, np.abs(u - 0.5)])
        if self.kind == "bits":
            return np.asarray(samples, dtype=float).reshape(len(samples), -1)
        raise AssertionError

    def log_ratio(self, samples) -> np.ndarray:
        if self.degenerate:
            return np.zeros(len(samples))
        if self.kind == "classes":
            keys = _row_keys(np.asarray(samples).reshape(len(samples), -1))
            known = np.array(self.classes, dtype=keys.dtype)
            order = np.argsort(known)
            pos = np.clip(np.searchsorted(known[order], keys), 0, len(known) - 1)
            idx = np.where(known[order][pos] == keys, order[pos], -1)
            w = np.append(np.asarray(self.weights, dtype=float), 0.0)
            return w[idx] + self.intercept
        return self._design(samples) @ np.asarray(self.weights, dtype=float) + self.intercept

    def score(self, samples) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.log_ratio(samples)))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
            "degenerate": bool(self.degenerate),
            "n_train": int(self.n_train),
        }
        if self.knots is not None:
            d["knots"] = [float(k) for k in self.knots]
        if self.classes is not None:
            d["classes"] = [bytes(c).hex() for c in self.classes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RatioModel":
        classes = None
        if d.get("classes") is not None:
            classes = [np.void(bytes.fromhex(h)) for h in d["classes"]]
        return cls(
            kind=d["kind"],
            weights=np.asarray(d["weights"], dtype=float),
            intercept=d.get("intercept", 0.0),
            knots=np.asarray(d["knots"]) if d.get("knots") is not None else None,
            classes=classes,
            degenerate=d.get("degenerate", False),
            n_train=d.get("n_train", 0),
        )


N_KNOTS = 4097
MAX_SCALAR_FIT = 200_000


def _infer_kind(samples: np.ndarray) -> str:
    if samples.ndim == 1 and samples.dtype.kind == "f":
        return "scalar"
    if samples.dtype == np.uint8:
        return "bits"
    return "classes"


def fit_ratio_model(samples_a, samples_b, *, kind: str | None = None, seed: int = 0,
                    max_fit: int = MAX_SCALAR_FIT, regularization: float = 1e4) -> RatioModel:
    """Train a logistic discriminator between outputs of M(a) and M(a')."""
    A = np.asarray(samples_a)
    B = np.asarray(samples_b)
    if len(A) == 0 or len(B) == 0:
        raise ValueError("both sample batches must be non-empty")
    kind = kind or _infer_kind(A)
    n_total = len(A) + len(B)
    # class balancing keeps the logit an estimate of ln r(b)
    wa, wb = 0.5 / len(A), 0.5 / len(B)

    if kind == "classes":
        A2, B2 = A.reshape(len(A), -1), B.reshape(len(B), -1)
        ka, kb = _row_keys(A2), _row_keys(B2)
        classes, inv = np.unique(np.concatenate([ka, kb]), return_inverse=True)
        ca = np.bincount(inv[: len(ka)], minlength=len(classes)).astype(float)
        cb = np.bincount(inv[len(ka):], minlength=len(classes)).astype(float)
        if len(classes) == 1:
            return RatioModel("classes", np.zeros(1), 0.0, classes=list(classes), degenerate=True, n_train=n_total)
        X = np.vstack([np.eye(len(classes)), np.eye(len(classes))])
        y = np.r_[np.ones(len(classes)), np.zeros(len(classes))]
        w = np.r_[ca * wa, cb * wb] * n_total
        keep = w > 0
        clf = LogisticRegression(C=regularization / n_total, fit_intercept=False, max_iter=1000)
        clf.fit(X[keep], y[keep], sample_weight=w[keep])
        return RatioModel("classes", clf.coef_[0].copy(), 0.0, classes=list(classes), n_train=n_total)

    if kind == "bits":
        A2, B2 = A.reshape(len(A), -1).astype(np.uint8), B.reshape(len(B), -1).astype(np.uint8)
        ka, kb = _row_keys(A2), _row_keys(B2)
        uniq, first, inv = np.unique(np.concatenate([ka, kb]), return_index=True, return_inverse=True)
        rows = np.vstack([A2, B2])[first].astype(float)
        ca = np.bincount(inv[: len(ka)], minlength=len(uniq)).astype(float)
        cb = np.bincount(inv[len(ka):], minlength=len(uniq)).astype(float)
        if len(uniq) == 1:
            return RatioModel("bits", np.zeros(A2.shape[1]), 0.0, degenerate=True, n_train=n_total)
        X = np.vstack([rows, rows])
        y = np.r_[np.ones(len(uniq)), np.zeros(len(uniq))]
        w = np.r_[ca * wa, cb * wb] * n_total
        keep = w > 0
        clf = LogisticRegression(C=regularization / n_total, max_iter=1000)
        clf.fit(X[keep], y[keep], sample_weight=w[keep])
        return RatioModel("bits", clf.coef_[0].copy(), float(clf.intercept_[0]), n_train=n_total)

    A1, B1 = A.astype(float).ravel(), B.astype(float).ravel()
    pooled = np.concatenate([A1, B1])
    if np.ptp(pooled) == 0:
        knots = np.array([pooled[0] - 1.0, pooled[0] + 1.0])
        return RatioModel("scalar", np.zeros(2), 0.0, knots=knots, degenerate=True, n_train=n_total)
    rng = np.random.default_rng(seed)
    if len(A1) > max_fit // 2:
        A1 = rng.choice(A1, max_fit // 2, replace=False)
    if len(B1) > max_fit // 2:
        B1 = rng.choice(B1, max_fit // 2, replace=False)
    knots = np.quantile(pooled, np.linspace(0.0, 1.0, N_KNOTS))
    knots = np.maximum.accumulate(knots)
    model = RatioModel("scalar", np.zeros(2), 0.0, knots=knots, n_train=n_total)
    X = model._design(np.concatenate([A1, B1]))
    y = np.r_[np.ones(len(A1)), np.zeros(len(B1))]
    w = np.r_[np.full(len(A1), 0.5 / len(A1)), np.full(len(B1), 0.5 / len(B1))] * len(y)
    clf = LogisticRegression(C=regularization, max_iter=1000)
    clf.fit(X, y, sample_weight=w)
    model.weights = clf.coef_[0].copy()
    model.intercept = float(clf.intercept_[0])
    if np.allclose(model.weights, 0.0, atol=1e-12):
        model.degenerate = True
    return model


# ---------------------------------------------------------------------------
# kernel density estimation
# ---------------------------------------------------------------------------


def silverman_bandwidth(x: np.ndarray) -> float:
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    spread = min(sd, iqr / 1.349) if iqr > 0 else sd
    return 0.9 * spread * len(x) ** (-0.2)


def undersmoothed_bandwidth(x: np.ndarray) -> float:
    """Silverman's spread constant with an n^(-1/3) rate.

    Shrinking faster than the MSE-optimal n^(-1/5) trades variance for less
    smoothing bias at kinks and jumps, which is where density ratios of the
    audited mechanisms change fastest.
    """
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    spread = min(sd, iqr / 1.349) if iqr > 0 else sd
    return 0.9 * spread * len(x) ** (-1.0 / 3.0)


def scott_bandwidth(x: np.ndarray) -> float:
    return 1.059 * np.std(x, ddof=1) * len(x) ** (-0.2)


def _isj_fixed_point(t, n, i_sq, a2):
    ell = 7
    f = 0.5 * math.pi ** (2 * ell) * np.sum(i_sq**ell * a2 * np.exp(-i_sq * math.pi**2 * t))
    if f <= 0:
        return -1.0
    for s in range(ell - 1, 1, -1):
        k0 = np.prod(np.arange(1, 2 * s, 2)) / math.sqrt(2 * math.pi)
        const = (1 + 0.5 ** (s + 0.5)) / 3.0
        time = (2 * const * k0 / (n * f)) ** (2.0 / (3.0 + 2.0 * s))
        f = 0.5 * math.pi ** (2 * s) * np.sum(i_sq**s * a2 * np.exp(-i_sq * math.pi**2 * time))
    return t - (2.0 * n * math.sqrt(math.pi) * f) ** (-0.4)


def isj_bandwidth(x: np.ndarray, grid_size: int = 2**14) -> float:
    """Improved Sheather-Jones plug-in bandwidth (Botev et al. fixed point)."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    span = hi - lo
    lo, hi = lo - span / 10.0, hi + span / 10.0
    span = hi - lo
    hist, _ = np.histogram(x, bins=grid_size, range=(lo, hi))
    hist = hist / len(x)
    a = fft.dct(hist, type=2)
    i_sq = np.arange(1, grid_size, dtype=float) ** 2
    a2 = (a[1:] / 2.0) ** 2
    n = len(x)
    tol = 1e-11 + 0.01 * (max(min(n, 1050), 50) - 50) / 1000.0
    while True:
        try:
            t_star = optimize.brentq(_isj_fixed_point, 0.0, tol, args=(n, i_sq, a2))
            break
        except ValueError:
            tol *= 2.0
            if tol >= 1.0:
                raise RuntimeError("ISJ fixed point not found")
    return math.sqrt(t_star) * span


BANDWIDTH_RULES = {"undersmooth": undersmoothed_bandwidth, "isj": isj_bandwidth, "silverman": silverman_bandwidth, "scott": scott_bandwidth}


@dataclass
class DensityModel:
    """Gaussian KDE tabulated on a uniform grid (linear binning + FFT)."""

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    n: int
    rule: str
    support: tuple[float, float]

    def __call__(self, b):
        out = np.interp(np.asarray(b, dtype=float), self.grid, self.values, left=0.0, right=0.0)
        return float(out) if np.ndim(out) == 0 else out

    evaluate = __call__

    def total_mass(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def to_dict(self) -> dict:
        return {"bandwidth": self.bandwidth, "n": self.n, "rule": self.rule,
                "support": list(self.support), "grid_points": len(self.grid)}


def _linear_binning(x: np.ndarray, lo: float, dx: float, m: int) -> np.ndarray:
    pos = (x - lo) / dx
    left = np.floor(pos).astype(np.int64)
    frac = pos - left
    left = np.clip(left, 0, m - 2)
    counts = np.bincount(left, weights=1.0 - frac, minlength=m)
    counts += np.bincount(left + 1, weights=frac, minlength=m)
    return counts[:m]


def kde_fit(samples, bandwidth_rule: str | float = "undersmooth", *, grid_step: float | None = None,
            max_grid: int = 1 << 21) -> DensityModel:
    x = np.asarray(samples)
    if x.ndim != 1 or x.dtype.kind not in "fiu":
        raise TypeError("kde_fit supports scalar outputs only; use empirical masses for discrete outputs")
    x = x.astype(float)
    if len(x) < 100:
        raise ValueError("kde_fit needs at least 100 samples")
    if np.ptp(x) == 0:
        raise ValueError("samples have zero variance")
    if isinstance(bandwidth_rule, str):
        try:
            rule_fn = BANDWIDTH_RULES[bandwidth_rule]
        except KeyError:
            raise ValueError(f"unknown bandwidth rule {bandwidth_rule!r}") from None
        h = float(rule_fn(x))
        rule = bandwidth_rule
    else:
        h = float(bandwidth_rule)
        rule = "fixed"
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    lo, hi = x.min() - 6 * h, x.max() + 6 * h
    dx = grid_step or h / 8.0
    m = int(math.ceil((hi - lo) / dx)) + 1
    if m > max_grid:
        m = max_grid
        dx = (hi - lo) / (m - 1)
    grid = lo + dx * np.arange(m)
    counts = _linear_binning(x, lo, dx, m)
    half = int(math.ceil(6 * h / dx))
    kgrid = dx * np.arange(-half, half + 1)
    kernel = stats.norm.pdf(kgrid, scale=h)
    dens = signal.fftconvolve(counts, kernel, mode="same") / len(x)
    dens = np.maximum(dens, 0.0)
    return DensityModel(grid, dens, h, len(x), rule, (float(x.min()), float(x.max())))


def kde_point(samples: np.ndarray, point: float, bandwidth: float, weights: np.ndarray | None = None) -> float:
    """Exact Gaussian KDE at a single point (optionally with resampling weights)."""
    x = np.asarray(samples, dtype=float)
    k = stats.norm.pdf((point - x) / bandwidth) / bandwidth
    if weights is None:
        return float(k.mean())
    return float(np.dot(k, weights) / np.sum(weights))
