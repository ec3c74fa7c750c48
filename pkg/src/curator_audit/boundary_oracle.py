"""Brute-force reference values computed from exact output probabilities.

Nothing here uses the closed-form region formulas. Scalar mechanisms are
discretized into fine cells via the exact CDF; discrete ones are enumerated.
The ideal power of each auditor is then computed directly from its
definition, and region boundaries are located by root finding on those
quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .auditors import DEFAULT_SURROGATE, SurrogateFn
from .mechanisms import SCALAR_FAMILIES, AdjacentPair, DensityOracle, Family, MechanismSpec

N_CELLS = 400_001
SPAN = 40.0


@dataclass(frozen=True)
class Masses:
    """Probability of every cell/output under a and a'."""

    pa: np.ndarray
    pb: np.ndarray

    def swapped(self) -> "Masses":
        return Masses(self.pb, self.pa)


def _scalar_width(spec: MechanismSpec) -> float:
    if spec.family == Family.LAPLACE:
        return SPAN * spec.sensitivity / spec.theta
    if spec.family == Family.GAUSSIAN:
        return SPAN * spec.theta
    if spec.family == Family.DPSGD:
        return SPAN * spec.theta * spec.clip_norm
    raise ValueError("bounded family")


def output_masses(spec: MechanismSpec, pair: AdjacentPair, n_cells: int = N_CELLS) -> Masses:
    orc = DensityOracle(spec)
    if spec.family not in SCALAR_FAMILIES:
        _, pa = orc.enumerate_outputs(pair.q_a)
        _, pb = orc.enumerate_outputs(pair.q_a_prime)
        return Masses(np.asarray(pa), np.asarray(pb))
    ca, cb = orc._center_scale(pair.q_a)[0], orc._center_scale(pair.q_a_prime)[0]
    if spec.family == Family.ADAPTED_LAPLACE:
        (la, ha), (lb, hb) = orc.support(pair.q_a), orc.support(pair.q_a_prime)
        # every support endpoint is a cell edge so zero-density parts stay exact
        t2 = spec.params[1]
        knots = sorted({la, ha, lb, hb, ca, cb, ca - t2, ca + t2, cb - t2, cb + t2})
        edges = np.unique(np.concatenate([np.linspace(a, b, n_cells // 3) for a, b in zip(knots[:-1], knots[1:])]))
    else:
        w = _scalar_width(spec)
        lo, hi = min(ca, cb) - w, max(ca, cb) + w
        edges = np.unique(np.concatenate([np.linspace(lo, hi, n_cells), [ca, cb]]))
    mid = 0.5 * (ca + cb)
    return Masses(_cell_masses(orc, pair.q_a, edges, mid), _cell_masses(orc, pair.q_a_prime, edges, mid))


def _cell_masses(orc: DensityOracle, x, edges: np.ndarray, mid: float) -> np.ndarray:
    # left of the midpoint differences of the CDF, right of it differences of
    # the survival function, so neither tail loses relative precision
    left = edges[edges <= mid]
    right = edges[edges > mid]
    fl = np.atleast_1d(orc.cdf(x, left))
    sr = np.atleast_1d(orc.sf(x, right))
    parts = [[fl[0]], np.diff(fl)]
    if len(left) and len(right):
        parts.append([max(0.0, 1.0 - fl[-1] - sr[0])])
    parts += [-np.diff(sr), [sr[-1]]]
    return np.maximum(np.concatenate(parts), 0.0)


def _ratio_order(m: Masses) -> np.ndarray:
    keep = (m.pa > 0) | (m.pb > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(m.pb > 0, np.log(m.pa) - np.log(m.pb), np.inf)
    lr = np.where(keep, lr, -np.inf)
    return np.argsort(-lr, kind="stable")


def exact_epsilon(m: Masses, rel_tol: float = 1e-12) -> float:
    """max |log ratio| over outputs carrying non-negligible mass."""
    floor = rel_tol
    best = 0.0
    for x, y in ((m.pa, m.pb), (m.pb, m.pa)):
        keep = x > floor
        if np.any(keep & (y <= 0)):
            return math.inf
        keep &= y > floor
        if np.any(keep):
            best = max(best, float(np.max(np.log(x[keep]) - np.log(y[keep]))))
    return best


def ratio_class_masses(m: Masses, tol: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Distinct a/a' log ratios (descending) and the a'-mass of each class."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(m.pb > 0, np.log(m.pa) - np.log(m.pb), np.where(m.pa > 0, np.inf, -np.inf))
    keep = (m.pa > 0) | (m.pb > 0)
    lr, pb = lr[keep], m.pb[keep]
    order = np.argsort(-lr, kind="stable")
    lr, pb = lr[order], pb[order]
    levels, masses = [], []
    for v, w in zip(lr, pb):
        if levels and (v == levels[-1] or abs(v - levels[-1]) <= tol):
            masses[-1] += w
        else:
            levels.append(v)
            masses.append(w)
    return np.array(levels), np.array(masses)


def top_set_mass(m: Masses) -> float:
    """Mass under a' of the set of outputs with the largest a/a' ratio."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.where(m.pb > 0, np.log(m.pa) - np.log(m.pb), np.where(m.pa > 0, np.inf, -np.inf))
    top = np.max(lr)
    sel = lr >= top - 1e-7 if math.isfinite(top) else lr == top
    return float(m.pb[sel].sum())


def _prefix_roc(m: Masses):
    order = _ratio_order(m)
    alpha = np.concatenate([[0.0], np.cumsum(m.pb[order])])
    power = np.concatenate([[0.0], np.cumsum(m.pa[order])])
    return alpha, power


def _power_at(alpha: np.ndarray, power: np.ndarray, target: float) -> float:
    """Power of the randomized ratio set with a'-mass ``target``."""
    i = int(np.searchsorted(alpha, target, side="left"))
    if i == 0:
        return float(power[0])
    if i >= len(alpha):
        return float(power[-1])
    a0, a1 = alpha[i - 1], alpha[i]
    w = 0.0 if a1 == a0 else (target - a0) / (a1 - a0)
    return float(power[i - 1] + w * (power[i] - power[i - 1]))


def _orientations(m: Masses, orientation: str):
    return {"both": (m, m.swapped()), "forward": (m,), "reverse": (m.swapped(),)}[orientation]


def sniper_power(m: Masses, c: float, orientation: str = "both") -> float:
    """Ideal DP-Sniper power: best ratio set of a'-mass c, floored at c."""
    best = -math.inf
    for mm in _orientations(m, orientation):
        alpha, power = _prefix_roc(mm)
        pa = _power_at(alpha, power, c)
        best = max(best, math.log(max(pa, c)) - math.log(c))
    return best


def mpl_power(spec: MechanismSpec, pair: AdjacentPair, tau: float, n_points: int = N_CELLS) -> float:
    """max_b |ln max(p(b|a), tau) - ln max(p(b|a'), tau)| from exact densities or masses."""
    if spec.family not in SCALAR_FAMILIES:
        m = output_masses(spec, pair)
        return float(np.max(np.abs(np.log(np.maximum(m.pa, tau)) - np.log(np.maximum(m.pb, tau)))))
    orc = DensityOracle(spec)
    ca, cb = orc._center_scale(pair.q_a)[0], orc._center_scale(pair.q_a_prime)[0]
    if spec.family == Family.ADAPTED_LAPLACE:
        (la, ha), (lb, hb) = orc.support(pair.q_a), orc.support(pair.q_a_prime)
        lo, hi = min(la, lb), max(ha, hb)
        pts = np.unique(np.concatenate([np.linspace(lo, hi, n_points), [ca, cb]]))
    else:
        w = _scalar_width(spec)
        pts = np.unique(np.concatenate([np.linspace(min(ca, cb) - w, max(ca, cb) + w, n_points), [ca, cb]]))
    da, db = orc.density(pair.q_a, pts), orc.density(pair.q_a_prime, pts)
    return float(np.max(np.abs(np.log(np.maximum(da, tau)) - np.log(np.maximum(db, tau)))))


def deltasiege_power(m: Masses, c: float, delta_c: float, rho: SurrogateFn = DEFAULT_SURROGATE) -> float:
    """Ideal Delta-Siege power: exact ROC, alpha restricted to [c, 1)."""
    best = 0.0
    for mm in (m, m.swapped()):
        alpha, power = _prefix_roc(mm)
        keep = (alpha > c) & (alpha < 1.0)
        a = np.concatenate([[c], alpha[keep]])
        p = np.concatenate([[_power_at(alpha, power, c)], power[keep]])
        vals = rho.line_minimum(a, p)
        r = float(np.min(vals))
        if math.isfinite(r):
            best = max(best, rho.solve_eps(r, delta_c))
    return best


def dpsgd_power(m: Masses, c: float, delta_c: float) -> float:
    """Ideal two-branch power over ratio sets with alpha >= c and 1 - power >= c."""
    best = -math.inf
    for mm in (m, m.swapped()):
        alpha, power = _prefix_roc(mm)
        hi = 1.0 - c
        extra_a = [c]
        # the a-mass constraint 1 - power >= c binds at power = 1 - c
        j = int(np.searchsorted(power, hi, side="left"))
        if 0 < j < len(power):
            w = (hi - power[j - 1]) / max(power[j] - power[j - 1], 1e-300)
            extra_a.append(alpha[j - 1] + w * (alpha[j] - alpha[j - 1]))
        a = np.concatenate([alpha, extra_a])
        p = np.concatenate([power, [_power_at(alpha, power, x) for x in extra_a]])
        ok = (a >= c * (1 - 1e-12)) & (1 - p >= c * (1 - 1e-12))
        a, p = a[ok], p[ok]
        with np.errstate(divide="ignore", invalid="ignore"):
            b1 = np.where(p - delta_c > 0, np.log(p - delta_c) - np.log(a), -np.inf)
            b2 = np.where(1 - a - delta_c > 0, np.log(1 - a - delta_c) - np.log(1 - p), -np.inf)
        best = max(best, float(np.max(np.maximum(b1, b2))) if len(a) else -math.inf)
    return best


def hockey_epsilon(m: Masses, delta_c: float) -> float:
    """Smallest eps with sup_S P(S) - e^eps Q(S) <= delta_c in both directions."""
    if delta_c <= 0:
        return exact_epsilon(m)

    def excess(e):
        x = math.exp(e)
        return max(np.sum(np.maximum(0.0, m.pa - x * m.pb)), np.sum(np.maximum(0.0, m.pb - x * m.pa))) - delta_c

    if excess(0.0) <= 0:
        return 0.0
    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e3:
            return math.inf
    return float(optimize.brentq(excess, 0.0, hi, xtol=1e-12))


def find_boundary(fn: Callable[[float], float], lo: float, hi: float, n_grid: int = 200,
                  log_grid: bool = True, xtol: float = 1e-9) -> list[float]:
    """All sign changes of ``fn`` on [lo, hi], refined by Brent's method."""
    grid = np.geomspace(lo, hi, n_grid) if log_grid and lo > 0 else np.linspace(lo, hi, n_grid)
    vals = np.array([fn(x) for x in grid])
    roots = []
    for i in range(len(grid) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if not (np.isfinite(v0) and np.isfinite(v1)):
            continue
        if v0 == 0:
            roots.append(float(grid[i]))
        elif v0 * v1 < 0:
            roots.append(float(optimize.brentq(fn, grid[i], grid[i + 1], xtol=xtol)))
    return roots


# ---------------------------------------------------------------------------
# region boundary cross-checks
# ---------------------------------------------------------------------------


def _region_pair(spec: MechanismSpec):
    from .ground_truth import canonical_pair

    return canonical_pair(spec)


def oracle_slack(region, label: str) -> Callable[[float], float] | None:
    """Oracle-computed counterpart of a region condition's slack, or None for pure parameter constraints."""
    eps_c = region.claim.eps_c
    delta_c = region.claim.delta_c
    settings = region.settings
    analysis = region.analysis

    def masses(x):
        spec = region.spec_at(x)
        return output_masses(spec, _region_pair(spec))

    c = settings.get("c")
    if analysis in ("laplace", "svt", "rappor"):
        table = {
            "P1": lambda x: c - top_set_mass(masses(x)),
            "R1": lambda x: exact_epsilon(masses(x)) - eps_c,
            "R2": lambda x: eps_c - sniper_power(masses(x), c, "forward"),
            "R2'": lambda x: eps_c - sniper_power(masses(x), c, "reverse"),
            "S": lambda x: float(np.sum(ratio_class_masses(masses(x))[1][:2])) - c,
        }
        return table.get(label)
    if analysis == "adapted-laplace":
        table = {
            "R2": lambda x: eps_c - sniper_power(masses(x), c, "forward"),
            "S": lambda x: float(ratio_class_masses(masses(x))[1][1]) - c,
        }
        return table.get(label)
    if analysis == "adapted-svt":
        table = {
            "P1": lambda x: c - top_set_mass(masses(x)),
            "R2": lambda x: eps_c - sniper_power(masses(x), c, "forward"),
            "R2'": lambda x: eps_c - sniper_power(masses(x), c, "reverse"),
        }
        return table.get(label)
    tau = settings.get("tau")
    if analysis == "adapted-svt-mpl":
        table = {
            "P1": lambda x: tau - top_set_mass(masses(x)),
            "R2": lambda x: eps_c - mpl_power(region.spec_at(x), _region_pair(region.spec_at(x)), tau),
        }
        return table.get(label)
    if analysis == "adapted-laplace-mpl":
        if label == "R2":
            return lambda x: eps_c - mpl_power(region.spec_at(x), _region_pair(region.spec_at(x)), tau)
        return None
    if analysis == "dpsgd":
        table = {
            "R2": lambda x: eps_c - dpsgd_power(masses(x), c, delta_c),
            "R1": lambda x: hockey_epsilon(masses(x), delta_c) - eps_c,
        }
        return table.get(label)
    if analysis.startswith("gaussian-deltasiege"):
        rho = SurrogateFn.parse(region.notes[0].split(" ", 1)[1]) if region.notes else DEFAULT_SURROGATE
        xi = lambda x: deltasiege_power(masses(x), c, delta_c, rho)
        eps = lambda x: hockey_epsilon(masses(x), delta_c)
        table = {
            "R2": lambda x: eps_c - xi(x),
            "R4": lambda x: xi(x) - eps_c,
            "R1": lambda x: eps(x) - eps_c,
            "R3": lambda x: eps_c - eps(x),
        }
        return table.get(label)
    return None


@dataclass(frozen=True)
class BoundaryCheck:
    analysis: str
    label: str
    closed_form: float
    oracle: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.closed_form - self.oracle) <= self.tolerance

    def to_dict(self) -> dict:
        return {"analysis": self.analysis, "label": self.label, "closed_form": self.closed_form,
                "oracle": self.oracle, "difference": abs(self.closed_form - self.oracle), "ok": self.ok}


def check_boundaries(region, tolerance: float = 1e-3, window: float = 0.05) -> list[BoundaryCheck]:
    """Locate each closed-form boundary independently from oracle probabilities."""
    out = []
    for x, label in region.boundaries():
        fn = oracle_slack(region, label)
        if fn is None:
            continue
        w = max(window * abs(x), 1e-2)
        lo = x - w
        if region.variable == "theta" and region.family == Family.RAPPOR:
            lo, hi = max(x - w, 1e-6), min(x + w, 1.0)
        else:
            lo, hi = max(lo, x * 0.5), x + w
        roots = find_boundary(fn, lo, hi, n_grid=9, log_grid=False, xtol=1e-9)
        found = min(roots, key=lambda r: abs(r - x)) if roots else math.nan
        out.append(BoundaryCheck(region.analysis, label, x, found, tolerance))
    return out
