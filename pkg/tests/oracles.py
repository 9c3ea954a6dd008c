"""Independent reference computations used to freeze expected values.

Nothing here imports the code paths it checks: networks are rebuilt as full
(M+1)-dimensional matrices with explicit Kraus operators, the BMV state is
built with explicit position registers, and so on.
"""
import itertools

import numpy as np

SQ2 = np.sqrt(2.0)


def naive_element_unitary(dim, a, b, symmetric=False):
    u = np.eye(dim, dtype=complex)
    if symmetric:
        blk = np.array([[1, 1j], [1j, 1]]) / SQ2
    else:
        blk = np.array([[1, 1], [1, -1]]) / SQ2
    u[np.ix_([a, b], [a, b])] = blk
    return u


def naive_loss_kraus(dim, mode, p):
    k0 = np.eye(dim, dtype=complex)
    k0[mode, mode] = np.sqrt(1 - p)
    k1 = np.zeros((dim, dim), dtype=complex)
    k1[dim - 1, mode] = np.sqrt(p)
    return [k0, k1]


def naive_tree_elements(I):
    """Element list of the binary-tree generation cascade, written out directly."""
    out = []
    for it in range(I):
        for j in range(2 ** it):
            out.append((j, j + 2 ** it))
    return out


def naive_run(elements, M, p, input_mode=0, symmetric=False, rho=None):
    """Explicit product of full-size matrices: rho -> U rho U^+, then loss Kraus sums."""
    dim = M + 1
    if rho is None:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[input_mode, input_mode] = 1
    for a, b in elements:
        u = naive_element_unitary(dim, a, b, symmetric)
        rho = u @ rho @ u.conj().T
        for mode in (a, b):
            rho = sum(k @ rho @ k.conj().T for k in naive_loss_kraus(dim, mode, p))
    return rho


def sylvester_hadamard(M):
    """Walsh matrix by the recursive Sylvester block rule, normalized."""
    h = np.array([[1.0]])
    while h.shape[0] < M:
        h = np.block([[h, h], [h, -h]])
    return h / np.sqrt(M)


def bmv_spin_state_with_positions(m1, m2, d, dx, tau, G, hbar):
    """Two-mass state with explicit position registers (C, L, R).

    Follows the stage-by-stage evolution: split, gravitational phase per
    branch pair from its separation, recombine, trace the positions out.
    """
    C, L, R = 0, 1, 2
    up, dn = 0, 1
    # one mass: index = spin * 3 + pos
    def idx(s, x):
        return s * 3 + x
    psi = np.zeros((6, 6), dtype=complex)
    for s1, s2 in itertools.product((up, dn), repeat=2):
        psi[idx(s1, C), idx(s2, C)] = 0.5
    # Stern-Gerlach: up -> L, down -> R
    split = {up: L, dn: R}
    psi2 = np.zeros_like(psi)
    for s1, s2 in itertools.product((up, dn), repeat=2):
        psi2[idx(s1, split[s1]), idx(s2, split[s2])] = psi[idx(s1, C), idx(s2, C)]
    # separations: mass 1 at -d/2 (+/- dx/2), mass 2 at +d/2 (+/- dx/2)
    x1 = {L: -d / 2 - dx / 2, R: -d / 2 + dx / 2}
    x2 = {L: d / 2 - dx / 2, R: d / 2 + dx / 2}
    for s1, s2 in itertools.product((up, dn), repeat=2):
        p1, p2 = split[s1], split[s2]
        sep = abs(x2[p2] - x1[p1])
        psi2[idx(s1, p1), idx(s2, p2)] *= np.exp(1j * G * m1 * m2 * tau / (hbar * sep))
    # inverse Stern-Gerlach back to C
    psi3 = np.zeros_like(psi)
    for s1, s2 in itertools.product((up, dn), repeat=2):
        psi3[idx(s1, C), idx(s2, C)] = psi2[idx(s1, split[s1]), idx(s2, split[s2])]
    full = psi3.reshape(36)
    rho = np.outer(full, full.conj()).reshape(2, 3, 2, 3, 2, 3, 2, 3)
    # trace positions: indices (s1,x1,s2,x2 ; s1',x1',s2',x2')
    spin = np.einsum("aibjcidj->abcd", rho)
    return spin.reshape(4, 4)


PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def brute_correlator(rho, a1, a2):
    """Sum over all 16 matrix elements of rho times the explicit Kronecker operator."""
    op = np.zeros((4, 4), dtype=complex)
    for i, j, k, l in itertools.product(range(2), repeat=4):
        op[2 * i + j, 2 * k + l] = PAULI[a1][i, k] * PAULI[a2][j, l]
    return sum(rho[r, c] * op[c, r] for r in range(4) for c in range(4)).real


def double_w_by_hand(phases, M):
    """Expand sum_k e^{i th_k} |k>|k> through per-half Walsh merges term by term."""
    h = sylvester_hadamard(M)
    joint = np.zeros((M, M), dtype=complex)
    for k in range(M):
        for m in range(M):
            for n in range(M):
                joint[m, n] += np.exp(1j * phases[k]) / np.sqrt(M) * h[m, k] * h[n, k]
    return np.abs(joint) ** 2
