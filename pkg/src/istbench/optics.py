"""Beamsplitter networks acting on a single photon.

A lossy network maps the path amplitudes linearly (beamsplitters interleaved
with ``sqrt(1 - p)`` attenuation) and dumps the missing weight into the vacuum
mode.  All propagation below uses that transfer map directly; the element-by-
element Kraus picture is only used as a test oracle.

Networks are stored as flat numpy arrays rather than element objects, so the
20-iteration generation network (a million beamsplitters) stays cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import yaml

from .ist import IstParams, ist_decoherence
from .quantum import (DENSE_MODE_LIMIT, AnyPhotonDensity, CompressedPhotonDensity,
                      DimensionError, PhotonDensity, PurePathState, _symmetrize,
                      apply_unitary, dephase)

CONVENTIONS = ("real-hadamard", "symmetric-phase")

MAX_ITERATIONS = 24

# sign patterns of the four 4-mode certification states, in the order W1..W4
W4_SIGN_PATTERNS = {
    "W1": (1, 1, 1, 1),
    "W2": (1, -1, -1, 1),
    "W3": (1, 1, -1, -1),
    "W4": (1, -1, 1, -1),
}


def _pow2_exponent(M: int) -> int:
    if M < 1 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    return M.bit_length() - 1


@dataclass(frozen=True)
class BeamsplitterElement:
    mode_a: int
    mode_b: int
    reflectivity: float = 0.5
    convention: str = "real-hadamard"

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ValueError("beamsplitter needs two distinct modes")
        if min(self.mode_a, self.mode_b) < 0:
            raise ValueError("mode indices must be non-negative")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity {self.reflectivity} outside [0, 1]")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")

    def matrix(self) -> np.ndarray:
        """2x2 map from (a, b) input amplitudes to (a, b) output amplitudes."""
        return _bs_matrix(self.reflectivity, self.convention == "symmetric-phase")


def _bs_matrix(reflectivity, symmetric):
    t = np.sqrt(1.0 - reflectivity)
    r = np.sqrt(reflectivity)
    if symmetric:
        return np.array([[t, 1j * r], [1j * r, t]])
    return np.array([[t, r], [r, -t]], dtype=complex)


@dataclass(frozen=True, eq=False)
class _Layer:
    a: np.ndarray
    b: np.ndarray
    m: np.ndarray  # (k, 2, 2)

    def adjoint(self) -> "_Layer":
        return _Layer(self.a, self.b, np.conj(np.swapaxes(self.m, 1, 2)))


@dataclass(frozen=True, eq=False)
class OpticalNetwork:
    """Ordered beamsplitters over ``mode_count`` paths with uniform loss.

    ``loss_per_element`` is applied to both output modes of every element.
    ``path_unique`` marks networks in which each input/output pair is linked
    by at most one optical path; on those, incoherent populations propagate
    classically, which is what the wide-network representation relies on.
    """

    mode_a: np.ndarray
    mode_b: np.ndarray
    reflectivity: np.ndarray
    symmetric: np.ndarray
    mode_count: int
    loss_per_element: float = 0.0
    path_unique: bool = False
    layer_starts: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        a = np.asarray(self.mode_a, dtype=np.int64)
        b = np.asarray(self.mode_b, dtype=np.int64)
        refl = np.asarray(self.reflectivity, dtype=float)
        sym = np.asarray(self.symmetric, dtype=bool)
        if not (a.shape == b.shape == refl.shape == sym.shape) or a.ndim != 1:
            raise ValueError("element arrays must be one-dimensional and equal length")
        if self.mode_count < 1:
            raise ValueError("mode_count must be >= 1")
        if a.size:
            if np.any(a == b):
                raise ValueError("beamsplitter needs two distinct modes")
            if min(a.min(), b.min()) < 0 or max(a.max(), b.max()) >= self.mode_count:
                raise ValueError(f"element mode index outside 0..{self.mode_count - 1}")
            if np.any((refl < 0) | (refl > 1)):
                raise ValueError("reflectivity outside [0, 1]")
        if not 0.0 <= self.loss_per_element < 1.0:
            raise ValueError(f"loss_per_element {self.loss_per_element} outside [0, 1)")
        for name, arr in (("mode_a", a), ("mode_b", b), ("reflectivity", refl), ("symmetric", sym)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "loss_per_element", float(self.loss_per_element))

    @classmethod
    def from_elements(cls, elements: Iterable[BeamsplitterElement], mode_count: int,
                      loss_per_element: float = 0.0) -> "OpticalNetwork":
        els = list(elements)
        return cls(np.array([e.mode_a for e in els], dtype=np.int64),
                   np.array([e.mode_b for e in els], dtype=np.int64),
                   np.array([e.reflectivity for e in els], dtype=float),
                   np.array([e.convention == "symmetric-phase" for e in els], dtype=bool),
                   mode_count, loss_per_element)

    def __len__(self) -> int:
        return int(self.mode_a.size)

    @property
    def elements(self) -> list[BeamsplitterElement]:
        return [BeamsplitterElement(int(a), int(b), float(r),
                                    "symmetric-phase" if s else "real-hadamard")
                for a, b, r, s in zip(self.mode_a, self.mode_b, self.reflectivity, self.symmetric)]

    def with_loss(self, loss_per_element: float) -> "OpticalNetwork":
        return OpticalNetwork(self.mode_a, self.mode_b, self.reflectivity, self.symmetric,
                              self.mode_count, loss_per_element, self.path_unique, self.layer_starts)

    @cached_property
    def layers(self) -> list[_Layer]:
        """Consecutive runs of elements on disjoint modes, in network order."""
        starts = self.layer_starts
        if starts is None:
            starts, used = [], set()
            for i, (a, b) in enumerate(zip(self.mode_a.tolist(), self.mode_b.tolist())):
                if not starts or a in used or b in used:
                    starts.append(i)
                    used = set()
                used.update((a, b))
        bounds = list(starts) + [len(self)]
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            refl = self.reflectivity[lo:hi]
            sym = self.symmetric[lo:hi]
            t = np.sqrt(1.0 - refl)
            r = np.sqrt(refl)
            m = np.empty((hi - lo, 2, 2), dtype=complex)
            m[:, 0, 0] = t
            m[:, 1, 1] = np.where(sym, t, -t)
            m[:, 0, 1] = np.where(sym, 1j * r, r)
            m[:, 1, 0] = m[:, 0, 1]
            out.append(_Layer(self.mode_a[lo:hi], self.mode_b[lo:hi], m))
        return out

    def unitary(self) -> np.ndarray:
        """Lossless transfer matrix on the path modes (small networks only)."""
        if self.mode_count > DENSE_MODE_LIMIT:
            raise MemoryError(f"{self.mode_count} modes exceeds the dense limit")
        return transfer_matrix(self.with_loss(0.0))

    def to_dict(self) -> dict:
        return {
            "mode_count": int(self.mode_count),
            "loss_per_element": self.loss_per_element,
            "elements": [
                {"mode_a": e.mode_a, "mode_b": e.mode_b,
                 "reflectivity": e.reflectivity, "convention": e.convention}
                for e in self.elements
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalNetwork":
        try:
            els = [BeamsplitterElement(int(e["mode_a"]), int(e["mode_b"]),
                                       float(e.get("reflectivity", 0.5)),
                                       e.get("convention", "real-hadamard"))
                   for e in d.get("elements", [])]
            return cls.from_elements(els, int(d["mode_count"]), float(d.get("loss_per_element", 0.0)))
        except KeyError as exc:
            raise ValueError(f"network description missing field {exc}") from None


def dump_network(network: OpticalNetwork, path: Union[str, Path]) -> None:
    Path(path).write_text(yaml.safe_dump(network.to_dict(), sort_keys=False))


def load_network(path: Union[str, Path]) -> OpticalNetwork:
    return OpticalNetwork.from_dict(yaml.safe_load(Path(path).read_text()))


def build_w_network(iterations: int, loss_per_element: float = 0.0,
                    convention: str = "real-hadamard") -> OpticalNetwork:
    """Binary-tree cascade that spreads a photon in mode 0 over ``2**I`` paths.

    Iteration ``i`` splits each occupied mode ``j < 2**i`` with the empty mode
    ``j + 2**i``, giving ``2**I - 1`` elements.
    """
    if not 0 <= iterations <= MAX_ITERATIONS:
        raise ValueError(f"iterations must be in 0..{MAX_ITERATIONS}, got {iterations}")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    M = 1 << iterations
    a = np.concatenate([np.arange(1 << i) for i in range(iterations)] or [np.empty(0, np.int64)])
    b = np.concatenate([np.arange(1 << i) + (1 << i) for i in range(iterations)]
                       or [np.empty(0, np.int64)])
    starts = np.array([(1 << i) - 1 for i in range(iterations)], dtype=np.int64)
    n = a.size
    return OpticalNetwork(a, b, np.full(n, 0.5), np.full(n, convention == "symmetric-phase"),
                          M, loss_per_element, path_unique=True, layer_starts=starts)


def certification_network(M: int, loss_per_element: float = 0.0,
                          convention: str = "real-hadamard") -> OpticalNetwork:
    """Butterfly network realizing the Walsh-Hadamard mode transform.

    Layer ``k`` pairs every mode with bit ``k`` clear with its partner that has
    bit ``k`` set, so each path crosses exactly ``log2 M`` elements.
    """
    n_bits = _pow2_exponent(M)
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    idx = np.arange(M)
    a_parts, b_parts = [], []
    for k in range(n_bits):
        lo = idx[(idx >> k) & 1 == 0]
        a_parts.append(lo)
        b_parts.append(lo | (1 << k))
    a = np.concatenate(a_parts) if a_parts else np.empty(0, np.int64)
    b = np.concatenate(b_parts) if b_parts else np.empty(0, np.int64)
    starts = np.arange(n_bits, dtype=np.int64) * (M // 2)
    return OpticalNetwork(a, b, np.full(a.size, 0.5), np.full(a.size, convention == "symmetric-phase"),
                          M, loss_per_element, path_unique=True, layer_starts=starts)


def _layers(network: OpticalNetwork, adjoint: bool):
    if adjoint:
        return [layer.adjoint() for layer in reversed(network.layers)]
    return network.layers


def transfer_vector(network: OpticalNetwork, vec: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Apply the (lossy) path transfer map to an amplitude vector."""
    v = np.array(vec, dtype=complex)
    if v.shape != (network.mode_count,):
        raise DimensionError(f"vector length {v.shape} does not match {network.mode_count} modes")
    s = np.sqrt(1.0 - network.loss_per_element)
    for L in _layers(network, adjoint):
        xa, xb = v[L.a], v[L.b]
        v[L.a] = L.m[:, 0, 0] * xa + L.m[:, 0, 1] * xb
        v[L.b] = L.m[:, 1, 0] * xa + L.m[:, 1, 1] * xb
        if s != 1.0:
            v[L.a] *= s
            v[L.b] *= s
    return v


def transfer_matrix(network: OpticalNetwork, adjoint: bool = False) -> np.ndarray:
    M = network.mode_count
    out = np.empty((M, M), dtype=complex)
    for j in range(M):
        e = np.zeros(M, dtype=complex)
        e[j] = 1.0
        out[:, j] = transfer_vector(network, e, adjoint)
    return out


def _propagate_populations(network: OpticalNetwork, pops: np.ndarray, adjoint: bool) -> np.ndarray:
    q = np.array(pops, dtype=float)
    keep = 1.0 - network.loss_per_element
    for L in _layers(network, adjoint):
        w = np.abs(L.m) ** 2
        pa, pb = q[L.a], q[L.b]
        q[L.a] = keep * (w[:, 0, 0] * pa + w[:, 0, 1] * pb)
        q[L.b] = keep * (w[:, 1, 0] * pa + w[:, 1, 1] * pb)
    return q


def propagate(rho: AnyPhotonDensity, network: OpticalNetwork, adjoint: bool = False) -> AnyPhotonDensity:
    """Send a state through ``network`` (or its adjoint, for the return trip)."""
    if rho.mode_count != network.mode_count:
        raise DimensionError(f"state has {rho.mode_count} modes, network {network.mode_count}")
    if isinstance(rho, CompressedPhotonDensity):
        u = transfer_vector(network, rho.coherent, adjoint)
        d = rho.diagonal
        if d.any():
            if not network.path_unique:
                raise ValueError("incoherent populations on a wide network need a path-unique network")
            d = np.clip(_propagate_populations(network, d, adjoint), 0.0, None)
        lost = rho.photon_trace() - float(np.vdot(u, u).real + d.sum())
        return CompressedPhotonDensity(u, d, rho.vacuum + lost)

    m = np.array(rho.matrix)
    before = np.trace(m[:-1, :-1]).real
    s = np.sqrt(1.0 - network.loss_per_element)
    for L in _layers(network, adjoint):
        ra, rb = m[L.a, :], m[L.b, :]
        m00, m01 = L.m[:, 0, 0, None], L.m[:, 0, 1, None]
        m10, m11 = L.m[:, 1, 0, None], L.m[:, 1, 1, None]
        m[L.a, :] = m00 * ra + m01 * rb
        m[L.b, :] = m10 * ra + m11 * rb
        ca, cb = m[:, L.a], m[:, L.b]
        m[:, L.a] = ca * m00.conj().T + cb * m01.conj().T
        m[:, L.b] = ca * m10.conj().T + cb * m11.conj().T
        if s != 1.0:
            touched = np.concatenate([L.a, L.b])
            m[touched, :] *= s
            m[:, touched] *= s
    after = np.trace(m[:-1, :-1]).real
    m[-1, -1] += before - after
    return PhotonDensity(_symmetrize(m), validate=False)


def _from_coherent(u: np.ndarray) -> AnyPhotonDensity:
    vac = max(0.0, 1.0 - float(np.vdot(u, u).real))
    if u.size > DENSE_MODE_LIMIT:
        return CompressedPhotonDensity(u, np.zeros(u.size), vac)
    amps = np.append(u, 0.0)
    m = np.outer(amps, amps.conj())
    m[-1, -1] = vac
    return PhotonDensity(_symmetrize(m), validate=False)


def run_network(network: OpticalNetwork, input_mode: int = 0,
                ist: Optional[IstParams] = None) -> AnyPhotonDensity:
    """Inject one photon at ``input_mode`` and return the output state.

    Dense up to ``DENSE_MODE_LIMIT`` modes, compressed beyond.  With ``ist``
    the width-dependent decoherence model is applied to the finished state.
    """
    if not 0 <= input_mode < network.mode_count:
        raise ValueError(f"input_mode {input_mode} outside 0..{network.mode_count - 1}")
    e = np.zeros(network.mode_count, dtype=complex)
    e[input_mode] = 1.0
    rho = _from_coherent(transfer_vector(network, e))
    if ist is not None:
        rho = ist_decoherence(rho, ist, network.mode_count)
    return rho


Channel = Union[str, float, IstParams]


def apply_channel(rho: AnyPhotonDensity, channel: Channel) -> AnyPhotonDensity:
    """Midpoint channel: ``"identity"``, ``"full-dephase"``, a dephasing
    factor in [0, 1], or an :class:`IstParams` decoherence model."""
    if isinstance(channel, IstParams):
        return ist_decoherence(rho, channel, rho.mode_count)
    if isinstance(channel, str):
        if channel == "identity":
            return rho
        if channel == "full-dephase":
            return dephase(rho, 0.0)
        raise ValueError(f"unknown channel descriptor {channel!r}")
    if isinstance(channel, (int, float)) and not isinstance(channel, bool):
        return dephase(rho, float(channel))
    raise ValueError(f"unknown channel descriptor {channel!r}")


def return_probability(network: OpticalNetwork, input_mode: int, midpoint_channel: Channel) -> float:
    """Mirror test: forward pass, midpoint channel, reverse pass, read ``input_mode``."""
    fwd = run_network(network, input_mode)
    mid = apply_channel(fwd, midpoint_channel)
    back = propagate(mid, network, adjoint=True)
    return float(min(1.0, back.populations()[input_mode]))


def certification_transform(M: int, convention: str = "real-hadamard") -> np.ndarray:
    """Walsh-Hadamard mode unitary, built as a tensor power of the 2x2 element.

    With the real convention row ``r`` is the sign pattern
    ``(-1)**popcount(r & j) / sqrt(M)``, so the W state with Walsh pattern
    ``r`` lands on detector ``r``.
    """
    n_bits = _pow2_exponent(M)
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    h = _bs_matrix(0.5, convention == "symmetric-phase")
    u = np.ones((1, 1), dtype=complex)
    for _ in range(n_bits):
        u = np.kron(h, u)
    return u


def walsh_pattern(r: int, M: int) -> np.ndarray:
    j = np.arange(M)
    parity = np.array([bin(x).count("1") & 1 for x in (j & r)])
    return np.where(parity, -1.0, 1.0)


def phase_permutation_state(pattern: Union[int, Sequence[float]], M: Optional[int] = None) -> PurePathState:
    """W state carrying a sign pattern: an explicit sequence or a Walsh row index."""
    if isinstance(pattern, (int, np.integer)):
        if M is None:
            raise ValueError("Walsh row index needs M")
        signs = walsh_pattern(int(pattern), M)
    else:
        signs = np.asarray(pattern, dtype=complex)
    return PurePathState.from_paths(signs / np.sqrt(signs.size))


def detector_for_pattern(pattern: Sequence[float], convention: str = "real-hadamard") -> int:
    """Detector that a sign-pattern W state fires through the certification transform."""
    state = phase_permutation_state(pattern)
    out = certification_transform(state.mode_count, convention) @ state.amplitudes[:-1]
    return int(np.argmax(np.abs(out)))


def w4_detector_labels(convention: str = "real-hadamard") -> dict[str, int]:
    """Detector assigned to each of the four 4-mode certification states."""
    return {name: detector_for_pattern(p, convention) for name, p in W4_SIGN_PATTERNS.items()}


def detector_distribution(rho: AnyPhotonDensity, transform: Union[np.ndarray, OpticalNetwork]) -> np.ndarray:
    """Click probabilities per path detector, with no-click (vacuum) last."""
    if isinstance(transform, OpticalNetwork):
        out = propagate(rho, transform)
    else:
        u = np.asarray(transform, dtype=complex)
        if u.shape != (rho.mode_count, rho.mode_count):
            raise DimensionError(f"transform shape {u.shape} does not match {rho.mode_count} modes")
        if isinstance(rho, CompressedPhotonDensity):
            ph = np.abs(u @ rho.coherent) ** 2 + (np.abs(u) ** 2) @ rho.diagonal
            return _normalize(np.append(ph, rho.vacuum))
        out = apply_unitary(rho, u)
    return _normalize(out.populations())


def _normalize(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    return p / p.sum()
