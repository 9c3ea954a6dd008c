"""Gravitationally induced spin entanglement between two test masses.

Each mass carries a spin whose up/down components are split into left/right
positions for a time ``tau``.  Mutual gravity imprints branch-dependent phases;
recombination restores the position state, so only the 4x4 spin state is
kept.  The spin basis order is up-up, up-down, down-up, down-down.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .quantum import SpinDensity

G_SI = 6.67430e-11
HBAR_SI = 1.054571817e-34

HYPOTHESES = ("coherent-gravity", "decoherent-no-collapse", "decoherent-collapse")

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_PLUS = np.array([1.0, 1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class BmvParams:
    """Experiment geometry in SI units.  Defaults are illustrative, not measured."""

    m1_kg: float = 2e-14
    m2_kg: float = 2e-14
    d_m: float = 250e-6
    delta_x_m: float = 100e-6
    tau_s: float = 8.0
    G: float = G_SI
    hbar: float = HBAR_SI

    def __post_init__(self):
        for name, val in asdict(self).items():
            if name == "tau_s":
                if not val >= 0:
                    raise ValueError(f"tau_s must be non-negative, got {val}")
            elif not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")
        if self.delta_x_m >= self.d_m:
            raise ValueError(f"delta_x_m ({self.delta_x_m}) must be smaller than d_m ({self.d_m})")

    @classmethod
    def from_dict(cls, d: dict) -> "BmvParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown bmv field(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)

    def with_tau(self, tau_s: float) -> "BmvParams":
        return replace(self, tau_s=tau_s)


@dataclass(frozen=True)
class BmvPhases:
    phi: float
    phi_LR: float
    phi_RL: float
    delta_phi_LR: float
    delta_phi_RL: float


def bmv_phases(params: BmvParams) -> BmvPhases:
    """Gravitational phases for the three branch separations.

    ``phi_RL`` belongs to the close pair (separation ``d - dx``), ``phi_LR``
    to the far pair (``d + dx``) and ``phi`` to the two equal-separation
    branches.
    """
    k = params.G * params.m1_kg * params.m2_kg * params.tau_s / params.hbar
    phi = k / params.d_m
    phi_rl = k / (params.d_m - params.delta_x_m)
    phi_lr = k / (params.d_m + params.delta_x_m)
    return BmvPhases(phi, phi_lr, phi_rl, phi_lr - phi, phi_rl - phi)


def coherent_spin_state(phases: BmvPhases) -> np.ndarray:
    return 0.5 * np.array([1.0, np.exp(1j * phases.delta_phi_LR),
                           np.exp(1j * phases.delta_phi_RL), 1.0])


def evolve_bmv(params: BmvParams, hypothesis: str) -> SpinDensity:
    """Final spin state under one of the three gravity hypotheses."""
    if hypothesis == "coherent-gravity":
        return SpinDensity.from_pure(coherent_spin_state(bmv_phases(params)))
    if hypothesis == "decoherent-no-collapse":
        return SpinDensity.from_pure(np.kron(_PLUS, _PLUS))
    if hypothesis == "decoherent-collapse":
        return SpinDensity(np.eye(4) / 4.0)
    raise ValueError(f"unknown hypothesis {hypothesis!r}; expected one of {HYPOTHESES}")


def pauli_correlator(rho: SpinDensity, axis1: str, axis2: str) -> float:
    op = np.kron(PAULI[axis1], PAULI[axis2])
    return float(np.trace(rho.matrix @ op).real)


def entanglement_witness(rho: SpinDensity) -> float:
    """``|<X (x) Z> - <Y (x) Z>|``; the protocol reads values above 1 as entanglement."""
    return abs(pauli_correlator(rho, "x", "z") - pauli_correlator(rho, "y", "z"))


def _eigenbasis(axis: str) -> np.ndarray:
    # columns are the +1 and -1 eigenvectors
    w, v = np.linalg.eigh(PAULI[axis])
    return v[:, ::-1]


def outcome_probabilities(rho: SpinDensity, axis1: str, axis2: str) -> np.ndarray:
    """Born probabilities of (++, +-, -+, --) for a local measurement setting."""
    b = np.kron(_eigenbasis(axis1), _eigenbasis(axis2))
    p = np.einsum("ik,ij,jk->k", b.conj(), rho.matrix, b).real
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def sample_correlator(rho: SpinDensity, axis1: str, axis2: str, runs: int,
                      rng: np.random.Generator) -> tuple[float, float]:
    """Plug-in correlator estimate from ``runs`` shots, with its standard error."""
    counts = rng.multinomial(runs, outcome_probabilities(rho, axis1, axis2))
    est = (counts[0] - counts[1] - counts[2] + counts[3]) / runs
    return float(est), float(np.sqrt(max(1.0 - est * est, 0.0) / runs))


def sample_witness(rho: SpinDensity, runs_per_setting: int, seed: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None) -> tuple[float, float]:
    """Monte Carlo witness from the (x, z) and (y, z) settings.

    Returns the estimate and its standard error (the two settings are
    independent, so their binomial variances add).
    """
    if runs_per_setting < 1:
        raise ValueError("runs_per_setting must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    xz, se_xz = sample_correlator(rho, "x", "z", runs_per_setting, rng)
    yz, se_yz = sample_correlator(rho, "y", "z", runs_per_setting, rng)
    return abs(xz - yz), float(np.hypot(se_xz, se_yz))


def witness_sweep(params: BmvParams, taus) -> np.ndarray:
    """Coherent-hypothesis witness along a grid of interaction times."""
    return np.array([entanglement_witness(evolve_bmv(params.with_tau(float(t)), "coherent-gravity"))
                     for t in taus])
