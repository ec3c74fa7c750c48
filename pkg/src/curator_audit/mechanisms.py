"""Benchmark and adapted DP mechanisms.

Each mechanism is described by a :class:`MechanismSpec`. Two separate
capabilities are derived from a spec:

* :func:`blackbox` returns a :class:`Sampler`, the only thing auditors see.
* :class:`DensityOracle` gives exact densities / output masses and is used by
  ground-truth and region-analysis code.

Batch output encodings
----------------------
scalar families (Laplace, AdaptedLaplace, Gaussian, DpsgdOneStep)
    ``float64`` array of shape ``(n,)``.
RapporOneTime
    ``uint8`` array of shape ``(n, k)``.
SVT / AdaptedSVT
    ``int8`` array of shape ``(n, N)`` with ``1`` for a top symbol, ``0`` for a
    bottom symbol and ``-1`` for positions never emitted because the mechanism
    aborted.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, stats

TOP = "⊤"
BOT = "⊥"
NOT_EMITTED = -1


class Family(str, enum.Enum):
    LAPLACE = "Laplace"
    ADAPTED_LAPLACE = "AdaptedLaplace"
    SVT = "SVT"
    ADAPTED_SVT = "AdaptedSVT"
    RAPPOR = "RapporOneTime"
    GAUSSIAN = "Gaussian"
    DPSGD = "DpsgdOneStep"

    @classmethod
    def parse(cls, name: "str | Family") -> "Family":
        if isinstance(name, Family):
            return name
        key = str(name).replace("_", "").replace("-", "").lower()
        for fam in cls:
            if fam.value.lower() == key or fam.name.replace("_", "").lower() == key:
                return fam
        aliases = {"rappor": cls.RAPPOR, "dpsgd": cls.DPSGD, "gauss": cls.GAUSSIAN}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown mechanism family {name!r}")


SCALAR_FAMILIES = frozenset(
    {Family.LAPLACE, Family.ADAPTED_LAPLACE, Family.GAUSSIAN, Family.DPSGD}
)
SVT_FAMILIES = frozenset({Family.SVT, Family.ADAPTED_SVT})


class OutputKind(str, enum.Enum):
    SCALAR = "scalar"
    BITS = "bits"
    SYMBOLS = "symbols"


# ---------------------------------------------------------------------------
# adjacent inputs
# ---------------------------------------------------------------------------

PATTERNS = (
    "One Above",
    "One Below",
    "One Below Rest Above",
    "Half Half",
    "All Above",
    "All Below",
    "X shape",
)


def _pattern_key(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


_PATTERN_LOOKUP = {_pattern_key(p): p for p in PATTERNS}


def canonical_pattern(name: str) -> str:
    try:
        return _PATTERN_LOOKUP[_pattern_key(name)]
    except KeyError:
        raise ValueError(
            f"unknown input pattern {name!r}; expected one of {', '.join(PATTERNS)}"
        ) from None


@dataclass(frozen=True)
class AdjacentPair:
    q_a: tuple[float, ...]
    q_a_prime: tuple[float, ...]
    pattern: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "q_a", tuple(float(v) for v in self.q_a))
        object.__setattr__(self, "q_a_prime", tuple(float(v) for v in self.q_a_prime))
        if len(self.q_a) != len(self.q_a_prime):
            raise ValueError("adjacent inputs must have equal length")
        if len(self.q_a) == 0:
            raise ValueError("adjacent inputs must be non-empty")

    @property
    def dimension(self) -> int:
        return len(self.q_a)

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.q_a, dtype=float)

    @property
    def a_prime(self) -> np.ndarray:
        return np.asarray(self.q_a_prime, dtype=float)

    def max_difference(self) -> float:
        return float(np.max(np.abs(self.a - self.a_prime)))

    def swapped(self) -> "AdjacentPair":
        return AdjacentPair(self.q_a_prime, self.q_a, self.pattern + " (swapped)")

    def to_dict(self) -> dict:
        return {"q_a": list(self.q_a), "q_a_prime": list(self.q_a_prime), "pattern": self.pattern}

    @classmethod
    def from_dict(cls, d: dict) -> "AdjacentPair":
        return cls(tuple(d["q_a"]), tuple(d["q_a_prime"]), d.get("pattern", "custom"))


def generate_inputs(pattern: str, dimension: int, sensitivity: float = 1.0) -> AdjacentPair:
    """Adjacent query-vector pair for one of the standard input patterns."""
    name = canonical_pattern(pattern)
    d = int(dimension)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not sensitivity > 0:
        raise ValueError("sensitivity must be positive")
    ones = np.ones(d)
    if name == "X shape":
        a = np.zeros(d)
        a[: d // 2] = 1.0
        a_prime = 1.0 - a
        return AdjacentPair(tuple(a * sensitivity), tuple(a_prime * sensitivity), name)
    offset = np.zeros(d)
    if name == "One Above":
        offset[0] = 1.0
    elif name == "One Below":
        offset[0] = -1.0
    elif name == "One Below Rest Above":
        offset[:] = 1.0
        offset[0] = -1.0
    elif name == "Half Half":
        half = (d + 1) // 2
        offset[:half] = -1.0
        offset[half:] = 1.0
    elif name == "All Above":
        offset[:] = 1.0
    elif name == "All Below":
        offset[:] = -1.0
    return AdjacentPair(tuple(ones), tuple(ones + sensitivity * offset), name)


# ---------------------------------------------------------------------------
# spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MechanismSpec:
    family: Family
    params: tuple[float, ...]
    sensitivity: float = 1.0
    thresholds: tuple[float, ...] = ()
    abort_count: int = 1
    filter_size: int = 0
    hash_count: int = 0
    hash_seed: int = 0
    clip_norm: float = 1.0
    model_dim: int = 10
    batch_size: int = 64
    task_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        self.validate()

    # -- constructors -----------------------------------------------------
    @classmethod
    def laplace(cls, theta: float, sensitivity: float = 1.0) -> "MechanismSpec":
        return cls(Family.LAPLACE, (theta,), sensitivity)

    @classmethod
    def adapted_laplace(cls, theta1: float, theta2: float, sensitivity: float = 1.0) -> "MechanismSpec":
        return cls(Family.ADAPTED_LAPLACE, (theta1, theta2), sensitivity)

    @classmethod
    def adapted_laplace_mpl(cls, theta: float, tau: float, sensitivity: float = 1.0) -> "MechanismSpec":
        """Laplace core kept where its density is at least ``tau``, flat ``tau`` tail after."""
        ratio = theta / (2.0 * sensitivity * tau)
        if ratio < 1.0:
            raise ValueError("theta must be at least 2*sensitivity*tau")
        return cls.adapted_laplace(theta, sensitivity / theta * math.log(ratio), sensitivity)

    @classmethod
    def svt(cls, theta: float, thresholds: Sequence[float] = (1.0,), abort_count: int = 1,
            sensitivity: float = 1.0) -> "MechanismSpec":
        return cls(Family.SVT, (theta,), sensitivity, tuple(thresholds), abort_count)

    @classmethod
    def adapted_svt(cls, theta1: float, theta2: float, thresholds: Sequence[float] = (1.0,),
                    abort_count: int = 1, sensitivity: float = 1.0) -> "MechanismSpec":
        return cls(Family.ADAPTED_SVT, (theta1, theta2), sensitivity, tuple(thresholds), abort_count)

    @classmethod
    def rappor(cls, theta: float, filter_size: int, hash_count: int, hash_seed: int = 0) -> "MechanismSpec":
        return cls(Family.RAPPOR, (theta,), 1.0, filter_size=filter_size,
                   hash_count=hash_count, hash_seed=hash_seed)

    @classmethod
    def gaussian(cls, theta: float, sensitivity: float = 1.0) -> "MechanismSpec":
        return cls(Family.GAUSSIAN, (theta,), sensitivity)

    @classmethod
    def dpsgd(cls, theta: float, clip_norm: float = 1.0, model_dim: int = 10,
              batch_size: int = 64, task_seed: int = 0) -> "MechanismSpec":
        return cls(Family.DPSGD, (theta,), clip_norm, clip_norm=clip_norm,
                   model_dim=model_dim, batch_size=batch_size, task_seed=task_seed)

    # -- validation -------------------------------------------------------
    def validate(self) -> None:
        fam, p = self.family, self.params
        if not (self.sensitivity > 0 and math.isfinite(self.sensitivity)):
            raise ValueError("sensitivity must be a positive finite number")
        expected = 2 if fam in (Family.ADAPTED_LAPLACE, Family.ADAPTED_SVT) else 1
        if len(p) != expected:
            raise ValueError(f"{fam.value} takes {expected} parameter(s), got {len(p)}")
        if not all(math.isfinite(v) for v in p):
            raise ValueError("parameters must be finite")
        if fam in (Family.LAPLACE, Family.SVT, Family.GAUSSIAN, Family.DPSGD) and not p[0] > 0:
            raise ValueError(f"{fam.value} requires theta > 0")
        if fam == Family.ADAPTED_LAPLACE and not (p[0] > 0 and p[1] >= 0):
            raise ValueError("AdaptedLaplace requires theta1 > 0 and theta2 >= 0")
        if fam == Family.ADAPTED_SVT and not (p[0] > 0 and p[1] > 0):
            raise ValueError("AdaptedSVT requires theta1 > 0 and theta2 > 0")
        if fam in SVT_FAMILIES:
            if len(self.thresholds) < 1:
                raise ValueError("SVT needs at least one threshold")
            if self.abort_count < 1:
                raise ValueError("abort count must be >= 1")
        if fam == Family.RAPPOR:
            if not 0 < p[0] <= 1:
                raise ValueError("RAPPOR requires 0 < theta <= 1")
            if self.hash_count < 1 or self.filter_size < 2 * self.hash_count:
                raise ValueError("RAPPOR requires h >= 1 and k >= 2h")
        if fam == Family.DPSGD:
            if not math.isclose(self.sensitivity, self.clip_norm):
                raise ValueError("DpsgdOneStep sensitivity must equal the clip norm")
            if self.model_dim < 1 or self.batch_size < 1:
                raise ValueError("model dimension and batch size must be positive")

    # -- structure --------------------------------------------------------
    @property
    def input_dim(self) -> int:
        return len(self.thresholds) if self.family in SVT_FAMILIES else 1

    @property
    def output_kind(self) -> OutputKind:
        if self.family in SCALAR_FAMILIES:
            return OutputKind.SCALAR
        if self.family == Family.RAPPOR:
            return OutputKind.BITS
        return OutputKind.SYMBOLS

    @property
    def theta(self) -> float:
        return self.params[0]

    def with_params(self, *params: float) -> "MechanismSpec":
        return replace(self, params=tuple(params))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        d["params"] = list(self.params)
        d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MechanismSpec":
        d = dict(d)
        d["params"] = tuple(d["params"])
        d["thresholds"] = tuple(d.get("thresholds", ()))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MechanismSpec":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def input_digest(x: Sequence[float]) -> str:
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    return hashlib.sha256(arr.tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------


def make_rng(*keys: int) -> np.random.Generator:
    """Counter-based generator keyed by an arbitrary tuple of non-negative ints."""
    words = [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys] or [0]
    key = np.random.SeedSequence(words).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _as_input(spec: MechanismSpec, x) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.shape[0] != spec.input_dim:
        raise ValueError(
            f"{spec.family.value} expects an input vector of length {spec.input_dim}, got shape {arr.shape}"
        )
    return arr


def _seed_words(seed) -> tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


# ---------------------------------------------------------------------------
# family helpers
# ---------------------------------------------------------------------------


def _adapted_laplace_magnitude(u: np.ndarray, t1: float, t2: float, delta: float) -> np.ndarray:
    scale = delta / t1
    core = 1.0 - math.exp(-t1 * t2 / delta)
    tail = 1.0 - core
    out = np.empty_like(u)
    in_core = u < core
    out[in_core] = -scale * np.log1p(-u[in_core])
    if tail > 0:
        out[~in_core] = t2 + (u[~in_core] - core) / tail * scale
    else:
        out[~in_core] = t2
    return out


def adapted_laplace_noise_cdf(v, t1: float, t2: float, delta: float):
    v = np.asarray(v, dtype=float)
    m = np.abs(v)
    scale = delta / t1
    k = t1 * t2 / delta
    g_core = -np.expm1(-np.minimum(m, t2) / scale)
    g_tail = np.clip(m - t2, 0.0, scale) / scale * math.exp(-k)
    g = g_core + g_tail
    return 0.5 + np.sign(v) * 0.5 * g


def adapted_laplace_noise_pdf(v, t1: float, t2: float, delta: float):
    v = np.asarray(v, dtype=float)
    m = np.abs(v)
    peak = t1 / (2.0 * delta)
    core = peak * np.exp(-t1 * m / delta)
    flat = peak * math.exp(-t1 * t2 / delta)
    return np.where(m <= t2, core, np.where(m <= t2 + delta / t1, flat, 0.0))


def _svt_noise(spec: MechanismSpec):
    """(rho distribution, nu scale) for the SVT variants."""
    delta, tbar = spec.sensitivity, spec.abort_count
    if spec.family == Family.SVT:
        half = spec.theta / 2.0
        return stats.laplace(scale=delta / half), 2.0 * tbar * delta / half
    t1, t2 = spec.params
    return stats.uniform(loc=-2.0 * t1, scale=t1), tbar * delta / t2


def _laplace_cdf(u, scale):
    u = np.asarray(u, dtype=float)
    return np.where(u < 0, 0.5 * np.exp(np.minimum(u, 0) / scale), 1.0 - 0.5 * np.exp(-np.maximum(u, 0) / scale))


def _laplace_cdf_antiderivative(u: float, scale: float) -> float:
    if u < 0:
        return 0.5 * scale * math.exp(u / scale)
    return u + 0.5 * scale * math.exp(-u / scale)


# RAPPOR hashing -----------------------------------------------------------

_MERSENNE61 = (1 << 61) - 1


def rappor_hash_coefficients(hash_seed: int, hash_count: int) -> list[tuple[int, int]]:
    rng = make_rng(0x5241, hash_seed)
    coeffs = []
    for _ in range(hash_count):
        a = int(rng.integers(1, _MERSENNE61))
        b = int(rng.integers(0, _MERSENNE61))
        coeffs.append((a, b))
    return coeffs


def bloom_bits(spec: MechanismSpec, item) -> np.ndarray:
    """Bloom-filter encoding B(item) as a 0/1 vector of length k."""
    x = int(round(float(np.atleast_1d(item)[0])))
    bits = np.zeros(spec.filter_size, dtype=np.uint8)
    for a, b in rappor_hash_coefficients(spec.hash_seed, spec.hash_count):
        bits[((a * x + b) % _MERSENNE61) % spec.filter_size] = 1
    return bits


def rappor_differing_bits(spec: MechanismSpec, pair: AdjacentPair) -> int:
    return int(np.sum(bloom_bits(spec, pair.q_a) != bloom_bits(spec, pair.q_a_prime)))


def with_separating_hash(spec: MechanismSpec, pair: AdjacentPair, max_tries: int = 10_000) -> MechanismSpec:
    """Resample the hash seed until the pair's filters differ in exactly 2h bits."""
    if spec.family != Family.RAPPOR:
        return spec
    target = 2 * spec.hash_count
    for offset in range(max_tries):
        cand = replace(spec, hash_seed=spec.hash_seed + offset)
        a, ap = bloom_bits(cand, pair.q_a), bloom_bits(cand, pair.q_a_prime)
        if a.sum() == spec.hash_count and ap.sum() == spec.hash_count and int(np.sum(a != ap)) == target:
            return cand
    raise RuntimeError("could not find a hash seed separating the pair")


# DPSGD toy task -----------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _dpsgd_task(clip: float, dim: int, batch: int, task_seed: int):
    rng = make_rng(0xD95D, task_seed)
    X = rng.standard_normal((batch, dim))
    w_true = rng.standard_normal(dim)
    y = (X @ w_true > 0).astype(float)
    w0 = np.zeros(dim)
    p = 1.0 / (1.0 + np.exp(-(X @ w0)))
    grads = (p - y)[:, None] * X
    norms = np.linalg.norm(grads, axis=1, keepdims=True)
    grads = grads * np.minimum(1.0, clip / np.maximum(norms, 1e-300))
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    # canary record far along `direction` with label 0: its raw gradient norm is
    # 2*clip, so after clipping it contributes exactly clip*direction
    canary_x = 4.0 * clip * direction
    canary_grad = (0.5 - 0.0) * canary_x
    canary_grad = canary_grad * min(1.0, clip / np.linalg.norm(canary_grad))
    return grads.sum(axis=0), canary_grad, direction


def dpsgd_statistic_mean(spec: MechanismSpec, x) -> float:
    """Noise-free projected gradient sum for canary flag x in {0, 1}."""
    flag = float(np.atleast_1d(x)[0])
    if flag not in (0.0, 1.0):
        raise ValueError("DpsgdOneStep input must be [0] (canary absent) or [1] (canary present)")
    base, canary, u = _dpsgd_task(spec.clip_norm, spec.model_dim, spec.batch_size, spec.task_seed)
    return float(base @ u + flag * (canary @ u))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_batch(spec: MechanismSpec, x, n: int, seed) -> np.ndarray:
    """``n`` independent draws of M(x), fully determined by ``seed``."""
    x = _as_input(spec, x)
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = make_rng(*_seed_words(seed))
    fam = spec.family
    delta = spec.sensitivity
    if fam == Family.LAPLACE:
        return x[0] + rng.laplace(0.0, delta / spec.theta, size=n)
    if fam == Family.ADAPTED_LAPLACE:
        t1, t2 = spec.params
        u = rng.random(n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return x[0] + sign * _adapted_laplace_magnitude(u, t1, t2, delta)
    if fam == Family.GAUSSIAN:
        return x[0] + spec.theta * rng.standard_normal(n)
    if fam == Family.DPSGD:
        _, _, u = _dpsgd_task(spec.clip_norm, spec.model_dim, spec.batch_size, spec.task_seed)
        noise = rng.standard_normal((n, spec.model_dim)) @ u
        return dpsgd_statistic_mean(spec, x) + spec.theta * spec.clip_norm * noise
    if fam == Family.RAPPOR:
        theta = spec.theta
        bits = bloom_bits(spec, x)
        r = rng.random((n, spec.filter_size))
        out = np.where(r < theta / 2.0, 1, np.where(r < theta, 0, bits[None, :]))
        return out.astype(np.uint8)
    # SVT variants
    rho_dist, nu_scale = _svt_noise(spec)
    rho = rho_dist.ppf(rng.random(n)) if fam == Family.ADAPTED_SVT else rng.laplace(0.0, rho_dist.kwds["scale"], size=n)
    N = spec.input_dim
    out = np.full((n, N), NOT_EMITTED, dtype=np.int8)
    count = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    T = np.asarray(spec.thresholds)
    for i in range(N):
        nu = rng.laplace(0.0, nu_scale, size=n)
        top = x[i] + nu >= T[i] + rho
        out[active, i] = top[active].astype(np.int8)
        count += (top & active)
        active &= count < spec.abort_count
        if not active.any():
            break
    return out


def sample(spec: MechanismSpec, x, seed):
    """A single draw: float, tuple of bits, or tuple of SVT symbols."""
    row = sample_batch(spec, x, 1, seed)[0]
    if spec.output_kind == OutputKind.SCALAR:
        return float(row)
    if spec.output_kind == OutputKind.BITS:
        return tuple(int(b) for b in row)
    return symbols_from_row(row)


def symbols_from_row(row) -> tuple[str, ...]:
    return tuple(TOP if v == 1 else BOT for v in row if v != NOT_EMITTED)


def row_from_symbols(symbols: Sequence[str], length: int) -> np.ndarray:
    row = np.full(length, NOT_EMITTED, dtype=np.int8)
    for i, s in enumerate(symbols):
        if s not in (TOP, BOT):
            raise ValueError(f"unknown SVT symbol {s!r}")
        row[i] = 1 if s == TOP else 0
    return row


class Sampler:
    """Blackbox sampling handle: draws only, no access to the mechanism design."""

    __slots__ = ("_draw", "_input_dim", "label")

    def __init__(self, draw: Callable[[np.ndarray, int, object], np.ndarray], input_dim: int, label: str = ""):
        self._draw = draw
        self._input_dim = input_dim
        self.label = label

    @property
    def input_dim(self) -> int:
        return self._input_dim

    def draw(self, x, n: int, seed) -> np.ndarray:
        return self._draw(x, n, seed)


def blackbox(spec: MechanismSpec) -> Sampler:
    frozen = MechanismSpec.from_dict(spec.to_dict())

    def _draw(x, n, seed):
        return sample_batch(frozen, x, n, seed)

    return Sampler(_draw, frozen.input_dim, label=frozen.digest())


# ---------------------------------------------------------------------------
# exact oracle
# ---------------------------------------------------------------------------


class DensityOracle:
    """Exact densities (continuous families) or output masses (discrete families)."""

    QUAD_EPSABS = 1e-11

    def __init__(self, spec: MechanismSpec):
        self.spec = spec

    @property
    def discrete(self) -> bool:
        return self.spec.output_kind != OutputKind.SCALAR

    # -- scalar families --------------------------------------------------
    def _center_scale(self, x):
        spec = self.spec
        x = _as_input(spec, x)
        if spec.family == Family.DPSGD:
            return dpsgd_statistic_mean(spec, x), spec.theta * spec.clip_norm
        return float(x[0]), None

    def density(self, x, b) -> np.ndarray | float:
        spec = self.spec
        if self.discrete:
            return self.probability(x, b)
        center, sd = self._center_scale(x)
        b_arr = np.asarray(b, dtype=float)
        v = b_arr - center
        if spec.family == Family.LAPLACE:
            out = stats.laplace.pdf(v, scale=spec.sensitivity / spec.theta)
        elif spec.family == Family.ADAPTED_LAPLACE:
            out = adapted_laplace_noise_pdf(v, *spec.params, spec.sensitivity)
        elif spec.family == Family.GAUSSIAN:
            out = stats.norm.pdf(v, scale=spec.theta)
        else:
            out = stats.norm.pdf(v, scale=sd)
        return float(out) if np.ndim(out) == 0 else out

    def log_density(self, x, b):
        with np.errstate(divide="ignore"):
            return np.log(self.density(x, b))

    def cdf(self, x, t):
        spec = self.spec
        if self.discrete:
            raise TypeError("cdf is only defined for scalar outputs")
        center, sd = self._center_scale(x)
        v = np.asarray(t, dtype=float) - center
        if spec.family == Family.LAPLACE:
            out = stats.laplace.cdf(v, scale=spec.sensitivity / spec.theta)
        elif spec.family == Family.ADAPTED_LAPLACE:
            out = adapted_laplace_noise_cdf(v, *spec.params, spec.sensitivity)
        elif spec.family == Family.GAUSSIAN:
            out = stats.norm.cdf(v, scale=spec.theta)
        else:
            out = stats.norm.cdf(v, scale=sd)
        return float(out) if np.ndim(out) == 0 else out

    def sf(self, x, t):
        spec = self.spec
        center, sd = self._center_scale(x)
        v = np.asarray(t, dtype=float) - center
        if spec.family == Family.LAPLACE:
            out = stats.laplace.sf(v, scale=spec.sensitivity / spec.theta)
        elif spec.family == Family.GAUSSIAN:
            out = stats.norm.sf(v, scale=spec.theta)
        elif spec.family == Family.DPSGD:
            out = stats.norm.sf(v, scale=sd)
        else:
            out = 1.0 - adapted_laplace_noise_cdf(v, *spec.params, spec.sensitivity)
        return float(out) if np.ndim(out) == 0 else out

    def interval_probability(self, x, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        return float(self.cdf(x, hi) - self.cdf(x, lo))

    def support(self, x) -> tuple[float, float]:
        spec = self.spec
        center, sd = self._center_scale(x)
        if spec.family == Family.ADAPTED_LAPLACE:
            t1, t2 = spec.params
            w = t2 + spec.sensitivity / t1
            return center - w, center + w
        return -math.inf, math.inf

    # -- discrete families ------------------------------------------------
    def enumerate_outputs(self, x) -> tuple[list, np.ndarray]:
        """All outputs with positive mass (as tuples) and their masses."""
        spec = self.spec
        if spec.family == Family.RAPPOR:
            k = spec.filter_size
            if k > 20:
                raise ValueError("output enumeration limited to k <= 20")
            outs = list(itertools.product((0, 1), repeat=k))
            return outs, np.array([self.probability(x, o) for o in outs])
        if spec.family in SVT_FAMILIES:
            outs = list(self._svt_sequences())
            return outs, np.array([self.probability(x, o) for o in outs])
        raise TypeError("only discrete families can be enumerated")

    def _svt_sequences(self) -> Iterable[tuple[str, ...]]:
        N, tbar = self.spec.input_dim, self.spec.abort_count

        def rec(prefix, tops):
            if tops >= tbar or len(prefix) == N:
                yield tuple(prefix)
                return
            yield from rec(prefix + [BOT], tops)
            yield from rec(prefix + [TOP], tops + 1)

        yield from rec([], 0)

    def probability(self, x, output) -> float:
        spec = self.spec
        x = _as_input(spec, x)
        if spec.family == Family.RAPPOR:
            bits = np.asarray(output, dtype=int)
            if bits.shape != (spec.filter_size,):
                raise ValueError("RAPPOR outputs must have exactly k bits")
            theta = spec.theta
            p_one = theta / 2.0 + (1.0 - theta) * bloom_bits(spec, x)
            return float(np.prod(np.where(bits == 1, p_one, 1.0 - p_one)))
        if spec.family in SVT_FAMILIES:
            if isinstance(output, np.ndarray) and output.dtype != object and output.dtype.kind in "iu":
                output = symbols_from_row(output)
            return self._svt_mass(x, tuple(output))
        raise TypeError("probability() is for discrete families; use density()")

    def _svt_mass(self, x: np.ndarray, symbols: tuple[str, ...]) -> float:
        spec = self.spec
        N, tbar = spec.input_dim, spec.abort_count
        tops = sum(1 for s in symbols if s == TOP)
        if len(symbols) > N or tops > tbar:
            return 0.0
        if tops == tbar and symbols and symbols[-1] != TOP:
            return 0.0
        if tops < tbar and len(symbols) != N:
            return 0.0
        if any(s == TOP for s in symbols[:-1]) and tbar == 1:
            return 0.0
        rho_dist, nu_scale = _svt_noise(spec)
        T = np.asarray(spec.thresholds)
        offs = T[: len(symbols)] - x[: len(symbols)]
        is_top = np.array([s == TOP for s in symbols])

        if spec.family == Family.ADAPTED_SVT and len(symbols) == 1:
            t1 = spec.params[0]
            lo, hi = offs[0] - 2.0 * t1, offs[0] - t1
            p_bot = (_laplace_cdf_antiderivative(hi, nu_scale) - _laplace_cdf_antiderivative(lo, nu_scale)) / t1
            p_bot = min(max(p_bot, 0.0), 1.0)
            return 1.0 - p_bot if is_top[0] else p_bot

        def integrand(z):
            c = _laplace_cdf(offs + z, nu_scale)
            return float(rho_dist.pdf(z) * np.prod(np.where(is_top, 1.0 - c, c)))

        kinks = sorted(set([float(-o) for o in offs]))
        if spec.family == Family.SVT:
            scale = rho_dist.kwds["scale"]
            kinks = sorted(set(kinks + [0.0]))
            lo_lim = min(kinks) - 60.0 * max(scale, nu_scale)
            hi_lim = max(kinks) + 60.0 * max(scale, nu_scale)
        else:
            t1 = spec.params[0]
            lo_lim, hi_lim = -2.0 * t1, -t1
            kinks = [k for k in kinks if lo_lim < k < hi_lim]
        edges = [lo_lim] + [k for k in kinks if lo_lim < k < hi_lim] + [hi_lim]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, a, b, epsabs=self.QUAD_EPSABS, epsrel=1e-10, limit=200)
            total += val
        return min(max(total, 0.0), 1.0)


def oracle(spec: MechanismSpec) -> DensityOracle:
    return DensityOracle(spec)


def svt_class_index(rows: np.ndarray) -> np.ndarray:
    """Map SVT rows (t̄ = 1) to b^j indices: position of the top symbol, or N."""
    rows = np.asarray(rows)
    N = rows.shape[1]
    is_top = rows == 1
    return np.where(is_top.any(axis=1), is_top.argmax(axis=1), N)
