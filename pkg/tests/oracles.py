"""Independent reference implementations built from explicit second-quantised
operator matrices (Jordan-Wigner on the full Fock space).

Nothing here imports the package internals except the Hamiltonian container
and the wavefunction layout needed to embed a CI vector in Fock space.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp


def mode(p: int, spin: int, d: int) -> int:
    """Alpha modes first (0..d-1), beta modes after (d..2d-1)."""
    return p + spin * d


@lru_cache(maxsize=None)
def annihilators(n_modes: int):
    dim = 1 << n_modes
    states = np.arange(dim)
    ops = []
    for m in range(n_modes):
        occ = (states >> m) & 1 == 1
        src = states[occ]
        below = src & ((1 << m) - 1)
        sign = (-1.0) ** np.array([bin(x).count("1") for x in below])
        ops.append(sp.csr_matrix((sign, (src ^ (1 << m), src)), shape=(dim, dim)))
    return tuple(ops)


def number_ops(n_modes: int):
    return [a.T @ a for a in annihilators(n_modes)]


def fock_hamiltonian(h) -> sp.csr_matrix:
    d = h.d
    a = annihilators(2 * d)
    c = [x.T.tocsr() for x in a]
    dim = 1 << (2 * d)
    out = sp.identity(dim, format="csr") * h.e_core
    for s in (0, 1):
        for p, q in product(range(d), repeat=2):
            if h.h1[p, q] != 0.0:
                out = out + h.h1[p, q] * (c[mode(p, s, d)] @ a[mode(q, s, d)])
    for s, t in product((0, 1), repeat=2):
        for p, q, r, u in product(range(d), repeat=4):
            v = h.eri[p, q, r, u]
            if v == 0.0:
                continue
            out = out + 0.5 * v * (c[mode(p, s, d)] @ c[mode(r, t, d)]
                                   @ a[mode(u, t, d)] @ a[mode(q, s, d)])
    return out.tocsr()


def sector_states(d: int, n_alpha: int, n_beta: int) -> np.ndarray:
    states = np.arange(1 << (2 * d))
    lo = states & ((1 << d) - 1)
    hi = states >> d
    na = np.array([bin(x).count("1") for x in lo])
    nb = np.array([bin(x).count("1") for x in hi])
    return states[(na == n_alpha) & (nb == n_beta)]


def dense_ground_state(h):
    """Exact ground state by dense diagonalisation inside the sector.

    Returns ``(energy, fock_vector, all_sector_eigenvalues)``.
    """
    ham = fock_hamiltonian(h)
    idx = sector_states(h.d, h.n_alpha, h.n_beta)
    block = ham[idx][:, idx].toarray()
    w, v = np.linalg.eigh(block)
    vec = np.zeros(ham.shape[0])
    vec[idx] = v[:, 0]
    return w[0], vec, w


def determinant_vector(d: int, alpha: int, beta: int) -> np.ndarray:
    """``a+_{a1} a+_{a2} ... a+_{b1} a+_{b2} ... |0>`` with both strings
    ascending, leftmost operator applied last."""
    a = annihilators(2 * d)
    ops = [mode(p, 0, d) for p in range(d) if alpha >> p & 1]
    ops += [mode(p, 1, d) for p in range(d) if beta >> p & 1]
    vec = np.zeros(1 << (2 * d))
    vec[0] = 1.0
    for m in reversed(ops):
        vec = a[m].T @ vec
    return vec


def embed(psi) -> np.ndarray:
    """CI vector (package layout) as a Fock-space vector."""
    d = psi.space.d
    out = np.zeros(1 << (2 * d))
    for (alpha, beta), c in zip(psi.space.strings, psi.coeffs):
        if c != 0.0:
            out += c * determinant_vector(d, alpha, beta)
    return out


def expect(vec, op) -> float:
    return float(vec @ (op @ vec))


def rdm1_oracle(vec, d: int):
    a = annihilators(2 * d)
    out = []
    for s in (0, 1):
        g = np.empty((d, d))
        for p, q in product(range(d), repeat=2):
            g[p, q] = expect(vec, a[mode(p, s, d)].T @ a[mode(q, s, d)])
        out.append(g)
    return tuple(out)


def rdm_os_oracle(vec, d: int) -> np.ndarray:
    """``G[p, q, r, s] = <a+_{p up} a+_{q dn} a_{s dn} a_{r up}>``."""
    a = annihilators(2 * d)
    g = np.empty((d,) * 4)
    for p, q, r, s in product(range(d), repeat=4):
        op = a[mode(p, 0, d)].T @ a[mode(q, 1, d)].T @ a[mode(s, 1, d)] @ a[mode(r, 0, d)]
        g[p, q, r, s] = expect(vec, op)
    return g


def _local_creator(d: int, orbitals, state: int):
    """Product of creators building local basis state ``state`` on top of the
    local vacuum. Per orbital the digit is ``n_up + 2 n_dn``; the first
    orbital is the most significant digit; operators are ordered orbital by
    orbital, up before down."""
    a = annihilators(2 * d)
    k = len(orbitals)
    dim = 1 << (2 * d)
    op = sp.identity(dim, format="csr")
    for pos, orb in enumerate(orbitals):
        digit = (state // 4 ** (k - 1 - pos)) % 4
        if digit & 1:
            op = op @ a[mode(orb, 0, d)].T
        if digit & 2:
            op = op @ a[mode(orb, 1, d)].T
    return op


def subsystem_rdm_oracle(vec, d: int, orbitals) -> np.ndarray:
    """``rho[x, y] = <psi| C_y P0 C_x^+ |psi>`` with ``P0`` the projector on
    the local vacuum of the chosen orbitals."""
    a = annihilators(2 * d)
    dim = 1 << (2 * d)
    p0 = sp.identity(dim, format="csr")
    for orb in orbitals:
        for s in (0, 1):
            n = a[mode(orb, s, d)].T @ a[mode(orb, s, d)]
            p0 = p0 @ (sp.identity(dim, format="csr") - n)
    k = 4 ** len(orbitals)
    creators = [_local_creator(d, orbitals, x) for x in range(k)]
    rho = np.empty((k, k))
    for x in range(k):
        for y in range(k):
            rho[x, y] = expect(vec, creators[y] @ p0 @ creators[x].T)
    return rho


def entropy_of(rho) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-(w * np.log(w)).sum())


def hamiltonian_matrix(h, space) -> np.ndarray:
    """Dense CI matrix ``<D_I|H|D_J>`` in the package's determinant order."""
    ham = fock_hamiltonian(h)
    basis = np.array([determinant_vector(h.d, a, b) for a, b in space.strings])
    return basis @ (ham @ basis.T)


def rotation_from_angle(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])
