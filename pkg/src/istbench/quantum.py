"""Single-excitation photonic states and two-qubit spin states.

A single photon spread over ``M`` path modes lives in an ``M + 1`` dimensional
space: indices ``0..M-1`` are the paths and index ``M`` is the vacuum, which
collects amplitude lost to the environment.  Everything here is dense numpy
linear algebra except :class:`CompressedPhotonDensity`, which stores the
"coherent vector plus diagonal" states that arise for very wide networks.
"""
from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from typing import Union

import numpy as np

PURE_TOL = 1e-12
CHANNEL_TOL = 1e-10
NEG_EIG_TOL = 1e-10

# eigen-decomposition beyond this size costs more than the rest of a run
EIGEN_CHECK_LIMIT = 512

# dense matrices are used up to this many photon modes
DENSE_MODE_LIMIT = 4096


class NormalizationError(ValueError):
    pass


class InvalidDensityError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


def _symmetrize(m: np.ndarray) -> np.ndarray:
    m += m.conj().T
    m *= 0.5
    return m


def _psd_clip(m: np.ndarray) -> np.ndarray:
    """Clip roundoff-level negative eigenvalues and renormalize."""
    w, v = np.linalg.eigh(m)
    if w.min() < -NEG_EIG_TOL:
        raise InvalidDensityError(f"eigenvalue {w.min():.3e} below -{NEG_EIG_TOL}")
    if w.min() < 0:
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        m = (v * w) @ v.conj().T
        m = _symmetrize(m)
    return m


def _check_density(m: np.ndarray, check_psd: bool) -> np.ndarray:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"density must be square, got shape {m.shape}")
    herm_err = np.abs(m - m.conj().T).max() if m.size else 0.0
    if herm_err > PURE_TOL:
        raise InvalidDensityError(f"not Hermitian (max deviation {herm_err:.3e})")
    m = _symmetrize(m)
    tr = np.trace(m).real
    if abs(tr - 1.0) > PURE_TOL:
        raise InvalidDensityError(f"trace {tr!r} differs from 1")
    if check_psd and m.shape[0] <= EIGEN_CHECK_LIMIT + 1:
        m = _psd_clip(m)
    return m


@dataclass(frozen=True)
class PurePathState:
    """Normalized amplitudes over ``mode_count`` paths plus the vacuum."""

    amplitudes: np.ndarray
    mode_count: int = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size < 2:
            raise DimensionError("need at least one path mode and the vacuum")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > PURE_TOL:
            raise NormalizationError(f"squared norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "mode_count", amps.size - 1)

    @classmethod
    def from_paths(cls, path_amplitudes, normalize: bool = False) -> "PurePathState":
        """Build from the path amplitudes only; the vacuum amplitude is 0."""
        amps = np.append(np.asarray(path_amplitudes, dtype=complex), 0.0)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(amps)

    @classmethod
    def basis(cls, mode: int, mode_count: int) -> "PurePathState":
        amps = np.zeros(mode_count + 1, dtype=complex)
        amps[mode] = 1.0
        return cls(amps)

    @classmethod
    def vacuum(cls, mode_count: int) -> "PurePathState":
        return cls.basis(mode_count, mode_count)


def w_state(M: int) -> PurePathState:
    """Equal-weight, all-positive W state over ``M`` path modes."""
    return PurePathState.from_paths(np.full(M, 1.0 / np.sqrt(M)))


@dataclass(frozen=True)
class PhotonDensity:
    """Dense density operator over ``mode_count`` paths plus the vacuum.

    Construction checks Hermiticity and unit trace within 1e-12 and, for
    matrices up to ``EIGEN_CHECK_LIMIT`` modes, positivity.  Internal code
    that already guarantees these passes ``validate=False``.
    """

    matrix: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        m = np.array(self.matrix, dtype=complex, copy=True) if validate else self.matrix
        if validate:
            m = _check_density(m, check_psd=True)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def mode_count(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def populations(self) -> np.ndarray:
        return np.clip(np.diagonal(self.matrix).real, 0.0, None)

    def photon_trace(self) -> float:
        return float(np.trace(self.matrix[:-1, :-1]).real)

    def vacuum_population(self) -> float:
        return float(self.matrix[-1, -1].real)

    def to_dense(self) -> "PhotonDensity":
        return self


@dataclass(frozen=True)
class CompressedPhotonDensity:
    """``|u><u| + diag(d)`` on the paths, plus a vacuum population.

    ``coherent`` is an unnormalized path vector and ``diagonal`` a
    non-negative path vector; there are no path/vacuum coherences.  This is
    closed under loss, dephasing and the path-unique networks built by
    :mod:`istbench.optics`, which is all the wide-network experiments need.
    """

    coherent: np.ndarray
    diagonal: np.ndarray
    vacuum: float

    def __post_init__(self):
        u = np.asarray(self.coherent, dtype=complex)
        d = np.asarray(self.diagonal, dtype=float)
        if u.shape != d.shape:
            raise DimensionError("coherent and diagonal parts differ in length")
        if d.size and d.min() < -NEG_EIG_TOL:
            raise InvalidDensityError("negative diagonal weight")
        tr = float(np.vdot(u, u).real + d.sum() + self.vacuum)
        if abs(tr - 1.0) > CHANNEL_TOL:
            raise InvalidDensityError(f"trace {tr!r} differs from 1")
        u.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "coherent", u)
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "vacuum", float(self.vacuum))

    @property
    def mode_count(self) -> int:
        return self.coherent.size

    @property
    def dim(self) -> int:
        return self.coherent.size + 1

    def populations(self) -> np.ndarray:
        ph = np.abs(self.coherent) ** 2 + self.diagonal
        return np.append(ph, self.vacuum)

    def photon_trace(self) -> float:
        return float(np.vdot(self.coherent, self.coherent).real + self.diagonal.sum())

    def vacuum_population(self) -> float:
        return self.vacuum

    def to_dense(self) -> PhotonDensity:
        if self.mode_count > DENSE_MODE_LIMIT:
            raise MemoryError(f"{self.mode_count} modes exceeds the dense limit {DENSE_MODE_LIMIT}")
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[:-1, :-1] = np.outer(self.coherent, self.coherent.conj())
        m[np.arange(self.mode_count), np.arange(self.mode_count)] += self.diagonal
        m[-1, -1] = self.vacuum
        return PhotonDensity(m, validate=False)


AnyPhotonDensity = Union[PhotonDensity, CompressedPhotonDensity]


@dataclass(frozen=True)
class SpinDensity:
    """Two-qubit density matrix over the basis up-up, up-down, down-up, down-down."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        if m.shape != (4, 4):
            raise DimensionError(f"spin density must be 4x4, got {m.shape}")
        m = _check_density(m, check_psd=True)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pure(cls, psi) -> "SpinDensity":
        psi = np.asarray(psi, dtype=complex)
        nrm = np.vdot(psi, psi).real
        if abs(nrm - 1.0) > PURE_TOL:
            raise NormalizationError(f"squared norm {nrm!r} differs from 1")
        return cls(np.outer(psi, psi.conj()))


def density_from_pure(state: PurePathState) -> PhotonDensity:
    a = state.amplitudes
    m = np.outer(a, a.conj())
    return PhotonDensity(_symmetrize(m), validate=False)


def basis_density(mode: int, mode_count: int) -> PhotonDensity:
    m = np.zeros((mode_count + 1, mode_count + 1), dtype=complex)
    m[mode, mode] = 1.0
    return PhotonDensity(m, validate=False)


def maximally_mixed(mode_count: int, populated: int | None = None) -> PhotonDensity:
    """Uniform mixture over the first ``populated`` path modes (default all)."""
    k = mode_count if populated is None else populated
    m = np.zeros((mode_count + 1, mode_count + 1), dtype=complex)
    m[np.arange(k), np.arange(k)] = 1.0 / k
    return PhotonDensity(m, validate=False)


def is_unitary(u: np.ndarray, tol: float = CHANNEL_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() <= tol)


def apply_unitary(rho: PhotonDensity, u: np.ndarray) -> PhotonDensity:
    """``rho -> U rho U^dagger`` with ``U`` acting on the paths only."""
    u = np.asarray(u, dtype=complex)
    M = rho.mode_count
    if u.shape != (M, M):
        raise DimensionError(f"unitary shape {u.shape} does not match {M} path modes")
    if not is_unitary(u):
        raise NotUnitaryError("matrix is not unitary within 1e-10")
    m = np.array(rho.matrix)
    m[:-1, :] = u @ m[:-1, :]
    m[:, :-1] = m[:, :-1] @ u.conj().T
    return PhotonDensity(_symmetrize(m), validate=False)


def amplitude_damping(rho: PhotonDensity, mode: int, p: float) -> PhotonDensity:
    """Lose the photon from ``mode`` to the vacuum with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"loss probability {p} outside [0, 1]")
    m = np.array(rho.matrix)
    pop = m[mode, mode].real
    s = np.sqrt(1.0 - p)
    m[mode, :] *= s
    m[:, mode] *= s
    m[-1, -1] += p * pop
    return PhotonDensity(_symmetrize(m), validate=False)


def dephase(rho: AnyPhotonDensity, factor: float) -> AnyPhotonDensity:
    """Scale every off-diagonal element in the mode basis by ``factor``.

    ``factor = 0`` is complete dephasing and ``1`` the identity; anything in
    between is a convex mix of the two, so the result stays a valid state.
    """
    if not 0.0 <= factor <= 1.0:
        raise ValueError(f"dephasing factor {factor} outside [0, 1]")
    if isinstance(rho, CompressedPhotonDensity):
        u = rho.coherent
        return CompressedPhotonDensity(np.sqrt(factor) * u,
                                       rho.diagonal + (1.0 - factor) * np.abs(u) ** 2,
                                       rho.vacuum)
    diag = np.diagonal(rho.matrix).copy()
    m = factor * rho.matrix
    idx = np.arange(rho.dim)
    m[idx, idx] = diag
    return PhotonDensity(m, validate=False)


def purity(rho) -> float:
    if isinstance(rho, CompressedPhotonDensity):
        w = np.abs(rho.coherent) ** 2
        nu = w.sum()
        val = nu * nu + 2.0 * np.dot(w, rho.diagonal) + np.dot(rho.diagonal, rho.diagonal)
        return float(val + rho.vacuum ** 2)
    m = rho.matrix
    # tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.vdot(m, m).real)


def fidelity_with_pure(rho: AnyPhotonDensity, target: PurePathState) -> float:
    """``<target| rho |target>``."""
    t = target.amplitudes
    if t.size != rho.dim:
        raise DimensionError(f"target has dimension {t.size}, density {rho.dim}")
    if isinstance(rho, CompressedPhotonDensity):
        tp = t[:-1]
        val = abs(np.vdot(tp, rho.coherent)) ** 2
        val += np.dot(np.abs(tp) ** 2, rho.diagonal) + abs(t[-1]) ** 2 * rho.vacuum
        return float(min(max(val, 0.0), 1.0))
    val = np.vdot(t, rho.matrix @ t).real
    return float(min(max(val, 0.0), 1.0))
