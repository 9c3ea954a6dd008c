"""Two-photon ring-aperture experiment (double W state).

Each photon of a down-converted pair lands in one of ``M`` sectors on its half
of the ring, anti-correlated with its partner.  Pairwise merging of adjacent
apertures on each half, followed by position detection, tests whether the
two halves still correlate.

Sector ``k`` of the upper half is paired with sector ``antipode(k) = k`` of
the lower half: both halves are indexed from the same end of the diameter
that splits the ring, so geometrically opposite apertures share an index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .optics import certification_network

PHASE_MODELS = ("shared", "independent", "equal")


def antipode(k, M: int):
    return k


@dataclass(frozen=True, eq=False)
class DoubleWState:
    """Joint amplitudes over (upper sector, lower sector).

    ``upper_phases`` and ``lower_phases`` are the per-photon phases that
    produced ``joint_amplitudes``; the joint amplitude of pair ``k`` carries
    their sum.
    """

    sector_count: int
    joint_amplitudes: np.ndarray
    phase_seed: Optional[int]
    upper_phases: np.ndarray
    lower_phases: np.ndarray
    phase_model: str = "shared"

    def __post_init__(self):
        a = np.asarray(self.joint_amplitudes, dtype=complex)
        if a.shape != (self.sector_count, self.sector_count):
            raise ValueError(f"joint amplitudes must be {self.sector_count}x{self.sector_count}")
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"joint amplitudes have squared norm {norm}")
        a.setflags(write=False)
        object.__setattr__(self, "joint_amplitudes", a)

    def marginal_upper(self) -> np.ndarray:
        return np.sum(np.abs(self.joint_amplitudes) ** 2, axis=1)

    def marginal_lower(self) -> np.ndarray:
        return np.sum(np.abs(self.joint_amplitudes) ** 2, axis=0)


def draw_phases(M: int, model: str, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-photon sector phases for one emitted pair.

    ``shared``: each aperture pair gets one uniform random phase, seen by the
    upper photon and conjugated on its lower partner, so the pair phase is
    fixed while each photon's phase relative to other sectors is random.
    ``independent``: the two photons draw unrelated phases (the control that
    breaks the correlation).  ``equal``: all phases zero.
    """
    if model == "equal":
        return np.zeros(M), np.zeros(M)
    if model == "shared":
        theta = rng.uniform(0.0, 2.0 * np.pi, M)
        return theta, -theta
    if model == "independent":
        return rng.uniform(0.0, 2.0 * np.pi, M), rng.uniform(0.0, 2.0 * np.pi, M)
    raise ValueError(f"unknown phase model {model!r}; expected one of {PHASE_MODELS}")


def make_double_w(M: int, phase_seed: Optional[int] = 0, phase_model: str = "shared",
                  rng: Optional[np.random.Generator] = None) -> DoubleWState:
    """Anti-correlated pair spread evenly over ``M`` sectors per half.

    Phases come from ``rng`` if given, otherwise from a generator seeded with
    ``phase_seed``.
    """
    if M < 2 or M & (M - 1):
        raise ValueError(f"sector count must be a power of two >= 2, got {M}")
    if rng is None:
        rng = np.random.default_rng(phase_seed)
    up, low = draw_phases(M, phase_model, rng)
    k = np.arange(M)
    a = np.zeros((M, M), dtype=complex)
    a[k, antipode(k, M)] = np.exp(1j * (up + low)) / np.sqrt(M)
    return DoubleWState(M, a, phase_seed, up, low, phase_model)


def combine_apertures(state: DoubleWState, rounds: int) -> tuple[DoubleWState, np.ndarray]:
    """Merge adjacent apertures ``rounds`` times on each half independently.

    Round ``r`` mixes sectors that differ in bit ``r`` (pairs of neighbours
    first, then neighbouring pairs, ...) with real 50:50 beamsplitters.
    Returns the evolved state and the joint click distribution over
    (upper detector, lower detector).
    """
    M = state.sector_count
    n_bits = M.bit_length() - 1
    if not 0 <= rounds <= n_bits:
        raise ValueError(f"rounds must be in 0..{n_bits}, got {rounds}")
    u = _merge_unitary(M, rounds)
    a = u @ state.joint_amplitudes @ u.T
    out = DoubleWState(M, a, state.phase_seed, state.upper_phases, state.lower_phases, state.phase_model)
    joint = np.abs(a) ** 2
    return out, joint / joint.sum()


def _merge_unitary(M: int, rounds: int) -> np.ndarray:
    u = np.eye(M, dtype=complex)
    for L in certification_network(M).layers[:rounds]:
        ua, ub = u[L.a, :], u[L.b, :]
        u[L.a, :] = L.m[:, 0, 0, None] * ua + L.m[:, 0, 1, None] * ub
        u[L.b, :] = L.m[:, 1, 0, None] * ua + L.m[:, 1, 1, None] * ub
    return u


def correlation_score(joint: np.ndarray, pairing: Optional[np.ndarray] = None) -> float:
    """Probability mass on the correlated detector pairs.

    ``pairing[k]`` is the lower detector expected with upper detector ``k``;
    the default is the antipodal pairing, which the merge network preserves.
    """
    p = np.asarray(joint, dtype=float)
    M = p.shape[0]
    if p.shape != (M, M):
        raise ValueError("joint distribution must be square")
    k = np.arange(M)
    target = antipode(k, M) if pairing is None else np.asarray(pairing)
    return float(np.clip(p[k, target].sum() / p.sum(), 0.0, 1.0))
