"""False-positive / false-negative analysis and curator-attack construction.

Each region solver turns a family's conditions into labeled inequalities over
one free parameter (the others fixed) and solves them on a bracket. Labels:

* ``P1``/``P2``/``P3``: the auditor is loose for this parameter (xi* < eps*);
* ``R1``: the claim is violated (eps* > eps_c);
* ``R2``: the audit passes (xi* <= eps_c);
* ``R3``/``R4``: the false-negative counterparts (eps* <= eps_c, xi* > eps_c);
* ``S``: structural side conditions under which the closed forms are exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize
from scipy.stats import norm

from .auditors import DEFAULT_SURROGATE, SurrogateFn
from .ground_truth import (
    PrivacyClaim,
    _gaussian_delta,
    _gaussian_inverse_delta,
    adapted_svt_witness_mass,
    canonical_pair,
    rappor_epsilon,
    svt_gap_survival,
)
from .mechanisms import Family, MechanismSpec, with_separating_hash


class EmptyRegion(ValueError):
    pass


class AttackUnavailable(RuntimeError):
    pass


class UnsupportedCombination(ValueError):
    pass


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


class Verdict(str, enum.Enum):
    TP = "TP"
    TN = "TN"
    FP = "FP"
    FN = "FN"


@dataclass(frozen=True)
class AuditVerdict:
    verdict: Verdict
    eps_c: float
    eps_star: float
    xi_star: float
    eps_star_lower_bound: bool = False

    @property
    def infeasible(self) -> bool:
        """The reported power exceeds the true privacy level."""
        return self.xi_star > self.eps_star and not self.eps_star_lower_bound

    @property
    def indeterminate(self) -> bool:
        """eps* is only a lower bound and the claim is not below it."""
        return self.eps_star_lower_bound and self.eps_c >= self.eps_star

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "eps_c": self.eps_c, "eps_star": _enc(self.eps_star),
                "xi_star": _enc(self.xi_star), "eps_star_lower_bound": self.eps_star_lower_bound,
                "infeasible": self.infeasible, "indeterminate": self.indeterminate}


def _enc(x: float):
    return x if math.isfinite(x) else str(x)


def classify(eps_c: float, eps_star: float, xi_star: float, eps_star_lower_bound: bool = False) -> AuditVerdict:
    """Quadrant of (eps_c, eps*, xi*): the audit passes iff xi* <= eps_c, the claim holds iff eps_c >= eps*."""
    for name, v in (("eps_c", eps_c), ("xi_star", xi_star)):
        if math.isnan(v):
            raise ValueError(f"{name} is NaN")
    if math.isnan(eps_star):
        raise ValueError("eps_star is NaN")
    passes = xi_star <= eps_c
    holds = eps_c >= eps_star
    if passes:
        v = Verdict.TP if holds else Verdict.FP
    else:
        v = Verdict.FN if holds else Verdict.TN
    return AuditVerdict(v, float(eps_c), float(eps_star), float(xi_star), eps_star_lower_bound)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    label: str
    text: str
    slack: Callable[[float], float]  # >= 0 (or > 0 when strict) means satisfied
    strict: bool = False

    def holds(self, x: float) -> bool:
        s = self.slack(x)
        return bool(s > 0) if self.strict else bool(s >= 0)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True
    lo_label: str = "bracket"
    hi_label: str = "bracket"

    def contains(self, x: float) -> bool:
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return above and below

    def shrunk(self, margin: float) -> tuple[float, float]:
        lo = self.lo + margin * abs(self.lo) if self.lo != 0 else self.lo
        hi = self.hi - margin * abs(self.hi) if math.isfinite(self.hi) else math.inf
        return lo, hi

    def to_dict(self) -> dict:
        return {"lo": _enc(self.lo), "hi": _enc(self.hi), "lo_closed": self.lo_closed,
                "hi_closed": self.hi_closed, "lo_label": self.lo_label, "hi_label": self.hi_label}


@dataclass
class ParamRegion:
    family: Family
    auditor: str
    analysis: str
    variable: str
    fixed: dict
    conditions: tuple[Condition, ...]
    intervals: tuple[Interval, ...]
    build: Callable[[float], MechanismSpec]
    claim: PrivacyClaim
    settings: dict = field(default_factory=dict)
    roots: dict = field(default_factory=dict)
    monotone: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        return all(c.holds(x) for c in self.conditions)

    def failing(self, x: float) -> list[str]:
        return [c.label for c in self.conditions if not c.holds(x)]

    def boundaries(self) -> list[tuple[float, str]]:
        out = []
        for iv in self.intervals:
            if iv.lo_label != "bracket":
                out.append((iv.lo, iv.lo_label))
            if iv.hi_label != "bracket" and math.isfinite(iv.hi):
                out.append((iv.hi, iv.hi_label))
        return out

    def point(self, margin: float = 0.02, rng: np.random.Generator | None = None) -> float:
        """A parameter at least ``margin`` (relative) inside every boundary."""
        for iv in sorted(self.intervals, key=lambda iv: -(iv.hi - iv.lo if math.isfinite(iv.hi) else math.inf)):
            lo, hi = iv.shrunk(margin)
            if math.isinf(hi):
                hi = max(lo * 3.0, lo + 1.0)
                x = lo if rng is None else rng.uniform(lo, hi)
                # prefer a comfortable distance from the lower boundary
                x = x if rng is not None else lo * (1 + 4 * margin) if lo > 0 else lo + 4 * margin
            elif hi < lo:
                continue
            else:
                x = 0.5 * (lo + hi) if rng is None else rng.uniform(lo, hi)
            if self.contains(x):
                return float(x)
        raise EmptyRegion(f"no parameter {margin:.0%} inside the {self.analysis} region")

    def sample(self, margin: float = 0.02, rng: np.random.Generator | None = None) -> dict:
        x = self.point(margin, rng)
        return {**self.fixed, self.variable: x}

    def spec_at(self, x: float) -> MechanismSpec:
        return self.build(x)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "auditor": self.auditor, "analysis": self.analysis,
                "variable": self.variable, "fixed": self.fixed, "settings": self.settings,
                "claim": {"eps_c": self.claim.eps_c, "delta_c": self.claim.delta_c},
                "conditions": [{"label": c.label, "text": c.text, "strict": c.strict} for c in self.conditions],
                "intervals": [iv.to_dict() for iv in self.intervals], "notes": list(self.notes)}

    def csv_rows(self) -> list[dict]:
        base = {"family": self.family.value, "auditor": self.auditor, "analysis": self.analysis,
                "variable": self.variable, "eps_c": self.claim.eps_c, "delta_c": self.claim.delta_c,
                "fixed": ";".join(f"{k}={v:g}" for k, v in sorted(self.fixed.items())),
                "settings": ";".join(f"{k}={v:g}" for k, v in sorted(self.settings.items()))}
        if self.empty:
            return [{**base, "lo": "", "hi": "", "lo_label": "", "hi_label": "", "empty": True}]
        return [{**base, "lo": f"{iv.lo:.10g}", "hi": f"{iv.hi:.10g}", "lo_label": iv.lo_label,
                 "hi_label": iv.hi_label, "empty": False} for iv in self.intervals]


def _sign_roots(fn, grid, vals, xtol):
    roots = []
    for i in range(len(grid) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if not (np.isfinite(v0) or np.isfinite(v1)):
            continue
        if (v0 > 0) != (v1 > 0) and not (v0 == 0 and v1 == 0):
            a, b = grid[i], grid[i + 1]
            if np.isfinite(v0) and np.isfinite(v1) and v0 != 0 and v1 != 0:
                roots.append(float(optimize.brentq(fn, a, b, xtol=xtol, rtol=1e-14)))
            else:
                # bisection on the sign when one side is infinite or exactly zero
                for _ in range(200):
                    m = 0.5 * (a + b)
                    if (fn(m) > 0) == (v0 > 0):
                        a = m
                    else:
                        b = m
                    if b - a < xtol:
                        break
                roots.append(0.5 * (a + b))
    return roots


def solve_region(conditions: Sequence[Condition], lo: float, hi: float, *, unbounded_above: bool = False,
                 n_grid: int = 600, xtol: float = 1e-10) -> tuple[tuple[Interval, ...], dict, dict]:
    """Intervals of [lo, hi] where every condition holds.

    Each slack is scanned on a grid and its sign changes refined by Brent's
    method, so non-monotone slacks are handled; ``monotone`` records which
    conditions changed sign at most once.
    """
    grid = np.geomspace(lo, hi, n_grid) if lo > 0 and hi / lo > 50 else np.linspace(lo, hi, n_grid)
    roots, monotone = {}, {}
    breaks: list[tuple[float, Condition]] = []
    for cond in conditions:
        vals = np.array([cond.slack(x) for x in grid], dtype=float)
        rs = _sign_roots(cond.slack, grid, vals, xtol)
        roots[cond.label] = rs
        monotone[cond.label] = len(rs) <= 1
        breaks += [(r, cond) for r in rs]
    breaks.sort(key=lambda t: t[0])
    pts = [lo] + [b for b, _ in breaks] + [hi]
    owners = [None] + [c for _, c in breaks] + [None]
    segs = []
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if b <= a:
            continue
        mid = 0.5 * (a + b) if not (a > 0 and b / a > 4) else math.sqrt(a * b)
        if all(c.holds(mid) for c in conditions):
            segs.append([a, b, owners[i], owners[i + 1]])
    merged = []
    for s in segs:
        if merged and merged[-1][1] == s[0]:
            merged[-1][1], merged[-1][3] = s[1], s[3]
        else:
            merged.append(s)
    out = []
    for a, b, ca, cb in merged:
        hi_v = math.inf if (cb is None and unbounded_above) else b
        lo_closed = ca is None or not ca.strict
        hi_closed = (cb is None and not unbounded_above) or (cb is not None and not cb.strict)
        if cb is None and unbounded_above:
            hi_closed = False
        out.append(Interval(a, hi_v, lo_closed, hi_closed, ca.label if ca else "bracket", cb.label if cb else "bracket"))
    return tuple(out), roots, monotone


def _const(v: float) -> Callable[[float], float]:
    return lambda _x: v


# ---------------------------------------------------------------------------
# DP-Sniper: benchmark / adapted Laplace
# ---------------------------------------------------------------------------


def laplace_sniper_power(theta: float, c: float) -> float:
    """Power of DP-Sniper on Laplace in its loose regime (theta > -ln 2c)."""
    arg = 1.0 - math.exp(-theta) / (4.0 * c)
    return math.log(arg) - math.log(c) if arg > 0 else -math.inf


def laplace_sniper_region(c: float, eps_c: float, sensitivity: float = 1.0, auditor: str = "dpsniper") -> ParamRegion:
    _check_c(c)
    conds = (
        Condition("P1", "theta > -ln(2c)", lambda t: t + math.log(2 * c), True),
        Condition("R1", "theta > eps_c", lambda t: t - eps_c, True),
        Condition("R2", "ln(1 - e^-theta/(4c)) - ln c <= eps_c", lambda t: eps_c - laplace_sniper_power(t, c)),
    )
    ivs, roots, mono = solve_region(conds, 1e-3, 80.0, unbounded_above=True)
    notes = ()
    if 4 * c - 4 * c * c * math.exp(eps_c) <= 0:
        notes = ("R2 holds for every theta: the loose-regime power never exceeds -ln c <= eps_c",)
    return ParamRegion(Family.LAPLACE, auditor, "laplace", "theta", {}, conds, ivs,
                       lambda t: MechanismSpec.laplace(t, sensitivity), PrivacyClaim(eps_c), {"c": c}, roots, mono, notes)


def laplace_deltasiege_region(c: float, eps_c: float, sensitivity: float = 1.0) -> ParamRegion:
    """Same inequalities as DP-Sniper for any surrogate depending on eps only."""
    return laplace_sniper_region(c, eps_c, sensitivity, auditor="deltasiege")


def adapted_laplace_unbounded_mass(theta1: float, theta2: float, sensitivity: float = 1.0) -> float:
    """a-mass of outputs that a' = a + sensitivity can never produce."""
    k = theta1 * theta2 / sensitivity
    if theta1 >= 1.0:
        return 0.5 * math.exp(-k + theta1 - 1.0)
    return 0.5 * theta1 * math.exp(-k)


def adapted_laplace_sniper_power(theta1: float, theta2: float, c: float, sensitivity: float = 1.0) -> float:
    p_inf = adapted_laplace_unbounded_mass(theta1, theta2, sensitivity)
    return math.log(p_inf + math.exp(theta1) * c) - math.log(c)


def adapted_laplace_sniper_params(c: float, eps_c: float, theta1: float | None = None,
                                  sensitivity: float = 1.0) -> ParamRegion:
    _check_c(c)
    if not eps_c > 0:
        raise ValueError("eps_c must be positive")
    t1 = eps_c / 2.0 if theta1 is None else float(theta1)
    branch = "theta1 >= 1" if t1 >= 1 else "theta1 < 1"
    conds = (
        Condition("B", f"theta1 < eps_c ({branch} branch)", _const(eps_c - t1), True),
        Condition("R1", "eps* = inf > eps_c", _const(math.inf), True),
        Condition("R2", "P_inf(theta1, theta2) <= (e^eps_c - e^theta1) c",
                  lambda t2: (math.exp(eps_c) - math.exp(t1)) * c - adapted_laplace_unbounded_mass(t1, t2, sensitivity)),
        Condition("S", "a'-mass of the e^theta1 ratio region >= c",
                  lambda t2: 0.5 * (math.exp(-t1) - math.exp(-t1 * t2 / sensitivity)) - c if t2 >= sensitivity else -1.0),
    )
    ivs, roots, mono = solve_region(conds, 1e-3, 1e4, unbounded_above=True)
    return ParamRegion(Family.ADAPTED_LAPLACE, "dpsniper", "adapted-laplace", "theta2", {"theta1": t1}, conds, ivs,
                       lambda t2: MechanismSpec.adapted_laplace(t1, t2, sensitivity), PrivacyClaim(eps_c), {"c": c}, roots, mono)


def adapted_laplace_theta2_bound(c: float, eps_c: float, theta1: float, sensitivity: float = 1.0) -> float:
    """Closed-form smallest theta2 satisfying R2."""
    k = (math.exp(eps_c) - math.exp(theta1)) * c
    if k <= 0:
        return math.inf
    if theta1 >= 1:
        return sensitivity / theta1 * (theta1 - 1.0 - math.log(2 * k))
    return sensitivity / theta1 * math.log(theta1 / (2 * k))


# ---------------------------------------------------------------------------
# DP-Sniper: benchmark / adapted SVT
# ---------------------------------------------------------------------------


def svt_sniper_power(theta: float, c: float) -> float:
    """Forward-orientation power when the top output is rarer than c under a'."""
    s = svt_gap_survival(1.0, theta)
    if s >= c:
        return -math.log(2 * s)
    q = (c - s) / (1 - s)
    return math.log((1 + q) / (2 * c))


def svt_sniper_region(c: float, eps_c: float) -> ParamRegion:
    _check_c(c)
    S = lambda t: svt_gap_survival(1.0, t)
    conds = (
        Condition("P1", "Pr[a' -> top] < c", lambda t: c - S(t), True),
        Condition("R1", "-ln(2 Pr[a' -> top]) > eps_c", lambda t: -math.log(2 * S(t)) - eps_c, True),
        Condition("R2", "ln((1+q)/(2c)) <= eps_c", lambda t: eps_c - svt_sniper_power(t, c)),
        Condition("R2'", "reverse orientation ln(2 - 2 Pr[a' -> top]) <= eps_c",
                  lambda t: eps_c - math.log(2 - 2 * S(t))),
    )
    ivs, roots, mono = solve_region(conds, 1e-2, 400.0, unbounded_above=True)
    return ParamRegion(Family.SVT, "dpsniper", "svt", "theta", {}, conds, ivs,
                       lambda t: MechanismSpec.svt(t), PrivacyClaim(eps_c), {"c": c}, roots, mono)


def _adapted_svt_conditions(floor: float, eps_c: float, t2: float, sensitivity: float, with_q: bool):
    g = lambda t1: adapted_svt_witness_mass(t1, t2, sensitivity)

    def forward(t1):
        gv = g(t1)
        top = math.exp(t2 / sensitivity) * gv
        if not with_q:
            return math.exp(eps_c) * floor - top
        q = (floor - gv) / (1 - gv)
        return math.exp(eps_c) * floor - (top + q * (1 - top))

    def reverse(t1):
        gv = g(t1)
        top = math.exp(t2 / sensitivity) * gv
        if top >= 1:
            return -math.inf
        return eps_c - (math.log1p(-gv) - math.log1p(-top))

    name = "c" if with_q else "tau"
    return (
        Condition("S", "theta1 >= sensitivity (both queries in the lower noise tail)", lambda t1: t1 - sensitivity),
        Condition("P1", f"g(theta1, theta2) < {name}", lambda t1: floor - g(t1), True),
        Condition("R1", "theta2 > eps_c", _const(t2 - eps_c), True),
        Condition("R2", "e^theta2 g + q (1 - e^theta2 g) <= e^eps_c c" if with_q else "e^theta2 g <= e^eps_c tau", forward),
        Condition("R2'", "reverse orientation power <= eps_c", reverse),
    )


def adapted_svt_sniper_params(c: float, eps_c: float, margin: float = 0.5, theta2: float | None = None,
                              sensitivity: float = 1.0) -> ParamRegion:
    _check_c(c)
    t2 = eps_c + margin if theta2 is None else float(theta2)
    conds = _adapted_svt_conditions(c, eps_c, t2, sensitivity, True)
    ivs, roots, mono = solve_region(conds, 1e-3, 1e3, unbounded_above=True)
    return ParamRegion(Family.ADAPTED_SVT, "dpsniper", "adapted-svt", "theta1", {"theta2": t2}, conds, ivs,
                       lambda t1: MechanismSpec.adapted_svt(t1, t2, sensitivity=sensitivity), PrivacyClaim(eps_c),
                       {"c": c}, roots, mono, ("eps* is the lower bound theta2",))


# ---------------------------------------------------------------------------
# MPL
# ---------------------------------------------------------------------------


def adapted_laplace_mpl_params(tau: float, eps_c: float, sensitivity: float = 1.0) -> ParamRegion:
    if not tau > 0:
        raise ValueError("tau must be positive")
    lo = 2 * sensitivity * tau
    conds = (
        Condition("S", "theta >= 2 sensitivity tau (core reaches density tau)", lambda t: t - lo),
        Condition("R1", "eps* = inf > eps_c", _const(math.inf), True),
        Condition("R2", "theta <= eps_c", lambda t: eps_c - t),
    )
    ivs, roots, mono = solve_region(conds, lo, max(100.0, 2 * eps_c), unbounded_above=True)
    return ParamRegion(Family.ADAPTED_LAPLACE, "mpl", "adapted-laplace-mpl", "theta", {}, conds, ivs,
                       lambda t: MechanismSpec.adapted_laplace_mpl(t, tau, sensitivity), PrivacyClaim(eps_c), {"tau": tau},
                       roots, mono)


def adapted_svt_mpl_params(tau: float, eps_c: float, margin: float = 0.5, theta2: float | None = None,
                           sensitivity: float = 1.0) -> ParamRegion:
    if not tau > 0:
        raise ValueError("tau must be positive")
    t2 = eps_c + margin if theta2 is None else float(theta2)
    conds = _adapted_svt_conditions(tau, eps_c, t2, sensitivity, False)
    ivs, roots, mono = solve_region(conds, 1e-3, 1e3, unbounded_above=True)
    return ParamRegion(Family.ADAPTED_SVT, "mpl", "adapted-svt-mpl", "theta1", {"theta2": t2}, conds, ivs,
                       lambda t1: MechanismSpec.adapted_svt(t1, t2, sensitivity=sensitivity), PrivacyClaim(eps_c),
                       {"tau": tau}, roots, mono, ("eps* is the lower bound theta2",))


# ---------------------------------------------------------------------------
# one-time RAPPOR
# ---------------------------------------------------------------------------


def rappor_sniper_power(theta: float, c: float, h: int) -> float:
    p, f = 1 - theta / 2, theta / 2
    top_b = f ** (2 * h)
    next_a = 2 * h * p ** (2 * h - 1) * f
    next_b = 2 * h * p * f ** (2 * h - 1)
    q = (c - top_b) / next_b
    return math.log(p ** (2 * h) + q * next_a) - math.log(c)


def _separated_rappor(theta: float, k: int, h: int, hash_seed: int) -> MechanismSpec:
    # the analysis assumes the canonical pair's filters differ in all 2h bits
    spec = MechanismSpec.rappor(theta, k, h, hash_seed)
    return with_separating_hash(spec, canonical_pair(spec))


def rappor_sniper_region(c: float, eps_c: float, h: int, filter_size: int | None = None, hash_seed: int = 0) -> ParamRegion:
    _check_c(c)
    k = filter_size or max(2 * h, 4 * h)
    conds = (
        Condition("P1", "(theta/2)^(2h) < c", lambda t: c - (t / 2) ** (2 * h), True),
        Condition("R1", "2h (ln(1 - theta/2) - ln(theta/2)) > eps_c", lambda t: rappor_epsilon(t, h) - eps_c, True),
        Condition("R2", "(1-theta/2)^(2h) + q h theta (1-theta/2)^(2h-1) <= e^eps_c c",
                  lambda t: eps_c - rappor_sniper_power(t, c, h)),
        Condition("S", "a'-mass of the two largest-ratio classes >= c",
                  lambda t: (t / 2) ** (2 * h) + 2 * h * (1 - t / 2) * (t / 2) ** (2 * h - 1) - c),
    )
    ivs, roots, mono = solve_region(conds, 1e-4, 1.0)
    return ParamRegion(Family.RAPPOR, "dpsniper", "rappor", "theta", {"h": h, "k": k}, conds, ivs,
                       lambda t: _separated_rappor(t, k, h, hash_seed), PrivacyClaim(eps_c), {"c": c}, roots, mono)


# ---------------------------------------------------------------------------
# Gaussian tradeoff helpers shared by Delta-Siege and DPSGD
# ---------------------------------------------------------------------------


def gaussian_beta(alpha, mu: float):
    return norm.cdf(norm.isf(alpha) - mu)


def gaussian_epsilon(theta: float, delta_c: float, sensitivity: float = 1.0) -> float:
    """T^-1(delta_c); 0 when delta_c exceeds the whole curve."""
    s = theta / sensitivity
    if delta_c >= _gaussian_delta(s, 0.0):
        return 0.0
    try:
        return _gaussian_inverse_delta(s, delta_c)
    except ValueError:
        return math.inf


def rho_star(theta: float, c: float, rho: SurrogateFn = DEFAULT_SURROGATE, sensitivity: float = 1.0,
             n_grid: int = 4000) -> tuple[float, float]:
    """(min over alpha in (c, 1) of the line minimum of rho, argmin alpha)."""
    mu = sensitivity / theta
    alphas = np.geomspace(c, 1 - 1e-9, n_grid)
    vals = rho.line_minimum(alphas, 1 - gaussian_beta(alphas, mu))
    i = int(np.argmin(vals))
    best_a, best_v = float(alphas[i]), float(vals[i])
    lo, hi = alphas[max(i - 1, 0)], alphas[min(i + 1, n_grid - 1)]
    if hi > lo:
        f = lambda la: float(rho.line_minimum(np.array([math.exp(la)]), 1 - gaussian_beta(np.array([math.exp(la)]), mu))[0])
        res = optimize.minimize_scalar(f, bounds=(math.log(lo), math.log(hi)), method="bounded",
                                       options={"xatol": 1e-12})
        if res.fun < best_v:
            best_a, best_v = math.exp(res.x), float(res.fun)
    return best_v, best_a


def gaussian_deltasiege_power(theta: float, c: float, delta_c: float, rho: SurrogateFn = DEFAULT_SURROGATE,
                              sensitivity: float = 1.0) -> float:
    r, _ = rho_star(theta, c, rho, sensitivity)
    return rho.solve_eps(r, delta_c)


def gaussian_deltasiege_regions(c: float, delta_c: float, eps_c: float, rho: SurrogateFn = DEFAULT_SURROGATE,
                                sensitivity: float = 1.0, bracket: tuple[float, float] = (0.05, 20.0),
                                n_grid: int = 300) -> tuple[ParamRegion, ParamRegion]:
    """(false-positive region, false-negative region) over the noise scale theta."""
    if not 0 < delta_c < 1:
        raise ValueError("delta_c must lie in (0, 1)")
    xi = lambda t: gaussian_deltasiege_power(t, c, delta_c, rho, sensitivity)
    eps = lambda t: gaussian_epsilon(t, delta_c, sensitivity)
    fp_conds = (
        Condition("R2", "-ln(delta_c rho*(theta)) <= eps_c", lambda t: eps_c - xi(t)),
        Condition("R1", "eps_c < T^-1(delta_c)", lambda t: eps(t) - eps_c, True),
    )
    fn_conds = (
        Condition("R4", "-ln(delta_c rho*(theta)) > eps_c", lambda t: xi(t) - eps_c, True),
        Condition("R3", "eps_c >= T^-1(delta_c)", lambda t: eps_c - eps(t)),
    )
    build = lambda t: MechanismSpec.gaussian(t, sensitivity)
    claim = PrivacyClaim(eps_c, delta_c)
    settings = {"c": c, "delta_c": delta_c}
    out = []
    for name, conds in (("gaussian-deltasiege-fp", fp_conds), ("gaussian-deltasiege-fn", fn_conds)):
        ivs, roots, mono = solve_region(conds, *bracket, n_grid=n_grid)
        out.append(ParamRegion(Family.GAUSSIAN, "deltasiege", name, "theta", {}, conds, ivs, build, claim,
                               settings, roots, mono, (f"surrogate {rho.describe()}",)))
    return out[0], out[1]


def gaussian_deltasiege_crossover(c: float, delta_c: float, rho: SurrogateFn = DEFAULT_SURROGATE,
                                  sensitivity: float = 1.0, bracket: tuple[float, float] = (0.05, 20.0)) -> list[float]:
    """Noise scales where the surrogate power equals the true epsilon (FP and FN regions meet)."""
    fn = lambda t: gaussian_deltasiege_power(t, c, delta_c, rho, sensitivity) - gaussian_epsilon(t, delta_c, sensitivity)
    grid = np.geomspace(*bracket, 200)
    vals = np.array([fn(t) for t in grid])
    return _sign_roots(fn, grid, vals, 1e-10)


def dpsgd_sniper_power(theta: float, c: float, delta_c: float) -> float:
    """ln(1 - delta_c - beta(c)) - ln c for the one-step statistic (noise = theta * clip)."""
    num = 1 - delta_c - float(gaussian_beta(c, 1.0 / theta))
    return math.log(num) - math.log(c) if num > 0 else -math.inf


def dpsgd_fp_region(c: float, delta_c: float, eps_c: float, clip_norm: float = 1.0,
                    bracket: tuple[float, float] = (0.05, 50.0)) -> ParamRegion:
    _check_c(c)
    conds = (
        Condition("R2", "ln(1 - delta_c - beta(c)) - ln c <= eps_c", lambda t: eps_c - dpsgd_sniper_power(t, c, delta_c)),
        Condition("R1", "eps_c < T^-1(delta_c)", lambda t: gaussian_epsilon(t, delta_c) - eps_c, True),
    )
    ivs, roots, mono = solve_region(conds, *bracket)
    return ParamRegion(Family.DPSGD, "dpsgd", "dpsgd", "theta", {"clip_norm": clip_norm}, conds, ivs,
                       lambda t: MechanismSpec.dpsgd(t, clip_norm), PrivacyClaim(eps_c, delta_c),
                       {"c": c, "delta_c": delta_c}, roots, mono)


def _check_c(c: float) -> None:
    if not 0 < c < 0.5:
        raise ValueError("c must lie in (0, 1/2)")


# ---------------------------------------------------------------------------
# attack construction
# ---------------------------------------------------------------------------


@dataclass
class AttackManifest:
    family: str
    params: tuple[float, ...]
    claim: PrivacyClaim
    auditor: str
    auditor_config: dict
    analysis: str
    margin: float
    spec: MechanismSpec
    region: ParamRegion
    tried: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"family": self.family, "params": list(self.params),
                "claim": {"eps_c": self.claim.eps_c, "delta_c": self.claim.delta_c},
                "auditor": self.auditor, "auditor_config": self.auditor_config, "analysis": self.analysis,
                "margin": self.margin, "spec": self.spec.to_dict(), "region": self.region.to_dict(),
                "tried": list(self.tried)}


_BENCHMARK_OF = {
    Family.ADAPTED_LAPLACE: Family.LAPLACE,
    Family.ADAPTED_SVT: Family.SVT,
}


def _candidates(family: Family, auditor: str, eps_c: float, cfg: dict) -> list[Callable[[], ParamRegion]]:
    c = cfg.get("c", 0.01)
    tau = cfg.get("tau", 1e-4)
    delta_c = cfg.get("delta_c", 0.0)
    key = (_BENCHMARK_OF.get(family, family), auditor)
    table = {
        (Family.LAPLACE, "dpsniper"): [lambda: laplace_sniper_region(c, eps_c),
                                       lambda: adapted_laplace_sniper_params(c, eps_c)],
        (Family.LAPLACE, "mpl"): [lambda: adapted_laplace_mpl_params(tau, eps_c)],
        (Family.LAPLACE, "deltasiege"): [lambda: laplace_deltasiege_region(c, eps_c)],
        (Family.SVT, "dpsniper"): [lambda: svt_sniper_region(c, eps_c),
                                   lambda: adapted_svt_sniper_params(c, eps_c, cfg.get("svt_margin", 0.5))],
        (Family.SVT, "mpl"): [lambda: adapted_svt_mpl_params(tau, eps_c, cfg.get("svt_margin", 0.5))],
        (Family.RAPPOR, "dpsniper"): [lambda: rappor_sniper_region(c, eps_c, cfg.get("h", 2), cfg.get("k"))],
        (Family.GAUSSIAN, "deltasiege"): [lambda: gaussian_deltasiege_regions(
            c, delta_c, eps_c, SurrogateFn.parse(cfg["rho"]) if isinstance(cfg.get("rho"), str) else cfg.get("rho", DEFAULT_SURROGATE))[0]],
        (Family.DPSGD, "dpsgd"): [lambda: dpsgd_fp_region(c, delta_c, eps_c)],
    }
    if key == (Family.RAPPOR, "mpl"):
        raise UnsupportedCombination("no region analysis is available for RAPPOR against MPL")
    if key not in table:
        raise UnsupportedCombination(f"no region analysis for {key[0].value} against {auditor}")
    cands = table[key]
    if family in _BENCHMARK_OF and len(cands) > 1:
        cands = cands[1:]
    return cands


def construct_attack(family, auditor: str, eps_c: float, auditor_config: dict | None = None,
                     margin: float = 0.02) -> AttackManifest:
    """Benchmark parameters inside the FP region if any, else the adapted mechanism's.

    Raises :class:`AttackUnavailable` when every candidate region is empty or
    too narrow to leave ``margin`` on each side.
    """
    family = Family.parse(family)
    cfg = dict(auditor_config or {})
    tried = []
    for make in _candidates(family, auditor, eps_c, cfg):
        region = make()
        tried.append(region.analysis)
        try:
            x = region.point(margin)
        except EmptyRegion:
            continue
        spec = region.spec_at(x)
        claim = PrivacyClaim(eps_c, cfg.get("delta_c", 0.0))
        return AttackManifest(spec.family.value, spec.params, claim, auditor, cfg, region.analysis, margin, spec,
                              region, tuple(tried))
    raise AttackUnavailable(f"every region is empty or narrower than the margin: {', '.join(tried)}")
