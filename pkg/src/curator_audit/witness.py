"""Outcome-set representation shared by auditors and ground-truth code."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class WitnessSet:
    """Randomized outcome set defined by a threshold on an ordering statistic.

    An output with statistic ``s`` is included with probability 1 when it lies
    strictly on the ``orientation`` side of ``ratio_threshold``, with
    probability ``tie_probability`` when ``s == ratio_threshold``, and 0
    otherwise. ``interval`` / ``elements`` optionally describe the same set
    explicitly in output space.
    """

    ratio_threshold: float
    tie_probability: float = 0.0
    orientation: str = "above"
    interval: tuple[float, float] | None = None
    elements: tuple[Any, ...] | None = None
    statistic: str = "log_ratio"

    def __post_init__(self):
        if not 0.0 <= self.tie_probability <= 1.0:
            raise ValueError("tie probability must lie in [0, 1]")
        if self.orientation not in ("above", "below"):
            raise ValueError("orientation must be 'above' or 'below'")

    def membership(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        t = self.ratio_threshold
        strict = v > t if self.orientation == "above" else v < t
        return np.where(strict, 1.0, np.where(v == t, self.tie_probability, 0.0))

    def to_dict(self) -> dict:
        def enc(x):
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            return x

        d = {
            "ratio_threshold": enc(float(self.ratio_threshold)),
            "tie_probability": float(self.tie_probability),
            "orientation": self.orientation,
            "statistic": self.statistic,
        }
        if self.interval is not None:
            d["interval"] = [enc(float(self.interval[0])), enc(float(self.interval[1]))]
        if self.elements is not None:
            d["elements"] = [list(e) if isinstance(e, tuple) else e for e in self.elements]
        return d
