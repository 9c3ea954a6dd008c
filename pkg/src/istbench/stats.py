"""How many runs it takes to tell two click distributions apart."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass(frozen=True)
class DistinguishabilityReport:
    hypothesis_a: str
    hypothesis_b: str
    runs_required: Optional[int]
    confidence: float
    chernoff_information: float
    total_variation: float
    statistic: str = "likelihood-ratio"

    @property
    def indistinguishable(self) -> bool:
        return self.runs_required is None

    def to_dict(self) -> dict:
        return {
            "hypothesis_a": self.hypothesis_a,
            "hypothesis_b": self.hypothesis_b,
            "statistic": self.statistic,
            "confidence": self.confidence,
            "runs_required": "indistinguishable" if self.runs_required is None else self.runs_required,
            "chernoff_information": self.chernoff_information,
            "total_variation": self.total_variation,
        }


def _check_dist(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("expected a normalized probability vector")
    return np.clip(p, 0.0, None)


def chernoff_information(p, q) -> float:
    """``-min_l log sum_x p^l q^(1-l)`` over ``l`` in [0, 1]; ``inf`` for disjoint supports."""
    p, q = _check_dist(p), _check_dist(q)
    both = (p > 0) & (q > 0)
    if not both.any():
        return math.inf
    lp, lq = np.log(p[both]), np.log(q[both])

    # log-sum-exp keeps tiny overlaps finite
    def log_coeff(lam):
        z = lam * lp + (1.0 - lam) * lq
        zmax = z.max()
        return zmax + math.log(np.exp(z - zmax).sum())

    res = minimize_scalar(log_coeff, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    # the endpoints are the supports' overlap masses; the optimizer can miss them
    best = min(res.fun, log_coeff(0.0), log_coeff(1.0))
    return max(0.0, -best)


def distinguish(dist_qm, dist_ist, confidence: float = 0.95,
                labels: tuple[str, str] = ("standard-qm", "ist")) -> DistinguishabilityReport:
    """Runs needed for a likelihood-ratio test to separate the two hypotheses.

    The Bayes error of the optimal test after ``n`` i.i.d. runs is bounded by
    ``exp(-n C)`` with ``C`` the Chernoff information, so
    ``n = ceil(log(1 / (1 - confidence)) / C)``.  Identical distributions get
    ``runs_required = None``.
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    p, q = _check_dist(dist_qm), _check_dist(dist_ist)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    tv = 0.5 * float(np.abs(p - q).sum())
    c = chernoff_information(p, q)
    if c <= 1e-15 or tv <= 1e-15:
        runs = None
    elif math.isinf(c):
        runs = 1
    else:
        runs = max(1, math.ceil(math.log(1.0 / (1.0 - confidence)) / c - 1e-12))
    return DistinguishabilityReport(labels[0], labels[1], runs, confidence, c, tv)


def binomial_stderr(p_hat, n: int):
    return np.sqrt(np.clip(p_hat * (1.0 - p_hat), 0.0, None) / n)
