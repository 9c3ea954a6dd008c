"""Operational consequences of a finite Bloch-sphere discretization.

``N`` (points per angular direction) is only ever handled through its base-2
logarithm: the interesting regime has ``N`` far beyond float range.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from .quantum import AnyPhotonDensity, dephase

MODELS = ("hard-cutoff", "partial")

# 2**52 is the largest grid count whose spacing a double still resolves
_EXACT_GRID_LOG2 = 52


class GridResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IstParams:
    log2_N: float
    model: str = "hard-cutoff"
    gamma: Optional[float] = None

    def __post_init__(self):
        if not self.log2_N > 0:
            raise ValueError(f"log2_N must be positive, got {self.log2_N}")
        if self.model not in MODELS:
            raise ValueError(f"unknown decoherence model {self.model!r}; expected one of {MODELS}")
        if self.model == "partial":
            if self.gamma is None or not 0.0 <= self.gamma <= 1.0:
                raise ValueError(f"partial model needs gamma in [0, 1], got {self.gamma}")
        elif self.gamma is not None:
            raise ValueError("gamma only applies to the partial model")
        object.__setattr__(self, "log2_N", float(self.log2_N))

    @classmethod
    def from_N(cls, N: float, model: str = "hard-cutoff", gamma: Optional[float] = None) -> "IstParams":
        return cls(math.log2(N), model, gamma)

    @classmethod
    def from_dict(cls, d: dict) -> "IstParams":
        unknown = set(d) - {"log2_N", "model", "gamma"}
        if unknown:
            raise ValueError(f"unknown ist field(s): {sorted(unknown)}")
        if "log2_N" not in d:
            raise ValueError("ist block needs log2_N")
        return cls(float(d["log2_N"]), d.get("model", "hard-cutoff"),
                   None if d.get("gamma") is None else float(d["gamma"]))

    def to_dict(self) -> dict:
        out = {"log2_N": self.log2_N, "model": self.model}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        return out

    @property
    def label(self) -> str:
        if self.model == "partial":
            return f"partial(gamma={self.gamma:g})"
        return self.model


def max_entangled_qubits(params: IstParams) -> int:
    return math.floor(params.log2_N)


def max_iterations(params: IstParams) -> int:
    """Beamsplitter iterations before the generated W state exceeds the cutoff."""
    if params.log2_N < 1:
        raise ValueError(f"max_iterations needs log2_N >= 1, got {params.log2_N}")
    return math.floor(math.log2(params.log2_N))


def min_N_for_qubits(M: int) -> float:
    """Smallest ``log2 N`` that admits ``M`` maximally entangled qubits."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return float(M)


def _log2_pow2(M: int) -> int:
    if M < 1 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    return M.bit_length() - 1


def survival_probability(p: float, M: int, certify: bool = False) -> float:
    """Chance a path qubit of an ``M``-mode W state survives per-element loss ``p``.

    Each path crosses ``log2 M`` beamsplitters during generation and as many
    again during certification.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"loss probability {p} outside [0, 1)")
    crossings = _log2_pow2(M) * (2 if certify else 1)
    return (1.0 - p) ** crossings


def coherence_factor(params: IstParams, entangled_width: int) -> float:
    """Multiplier applied to every coherence of a state of the given width."""
    if entangled_width <= max_entangled_qubits(params):
        return 1.0
    if params.model == "hard-cutoff":
        return 0.0
    i_max = max_iterations(params) if params.log2_N >= 1 else 0
    excess = math.log2(entangled_width) - i_max
    return params.gamma ** excess


def ist_decoherence(rho: AnyPhotonDensity, params: IstParams,
                    entangled_width: Optional[int] = None) -> AnyPhotonDensity:
    """Dephase ``rho`` according to the width-dependent IST model.

    ``entangled_width`` defaults to the number of path modes.  Below the cutoff
    the state is returned unchanged.
    """
    width = rho.mode_count if entangled_width is None else entangled_width
    f = coherence_factor(params, width)
    if f == 1.0:
        return rho
    return dephase(rho, f)


def discretize_bloch(theta: float, phi: float, params: IstParams) -> tuple[float, float]:
    """Snap both angles to the nearest multiple of ``2 pi / N``."""
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise ValueError("angles must be finite")
    if params.log2_N > _EXACT_GRID_LOG2:
        warnings.warn("grid finer than float resolution; angles passed through",
                      GridResolutionWarning, stacklevel=2)
        return theta, phi
    n = round(2.0 ** params.log2_N)
    step = 2.0 * math.pi / n
    return round(theta / step) * step, round(phi / step) * step
