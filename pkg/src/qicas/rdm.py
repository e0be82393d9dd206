"""Reduced density matrices of a CI wavefunction.

Only the pieces needed for orbital entropies are formed: both spin blocks
of the 1-RDM and the opposite-spin 2-RDM block
``gamma_os[p, q, r, s] = <a+_{p,up} a+_{q,dn} a_{s,dn} a_{r,up}>``.
Few-orbital reduced states are taken straight from the CI vector by a
fermionic partial trace.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from . import _kernels
from .errors import CapacityError, PositivityError
from .fci import Wavefunction

__all__ = [
    "SpinTracedRDMs",
    "OrbitalSpectrum",
    "compute_1rdm",
    "compute_os_2rdm",
    "compute_rdms",
    "orbital_spectrum",
    "orbital_spectra",
    "two_orbital_rdm",
    "subsystem_rdm",
    "subsystem_entropy",
    "write_profile_csv",
]

POSITIVITY_TOL = 1e-8
MAX_SUBSET = 8
MAX_OS_ENTRIES = 50_000_000


@dataclass(frozen=True, eq=False)
class SpinTracedRDMs:
    gamma_a: np.ndarray
    gamma_b: np.ndarray
    gamma_os: np.ndarray

    @property
    def d(self) -> int:
        return self.gamma_a.shape[0]

    def diagonal(self):
        """Per-orbital ``(n_up, n_dn, n_double)``."""
        idx = np.arange(self.d)
        return (np.diag(self.gamma_a).copy(), np.diag(self.gamma_b).copy(),
                self.gamma_os[idx, idx, idx, idx].copy())

    def occupancies(self) -> np.ndarray:
        return np.diag(self.gamma_a) + np.diag(self.gamma_b)

    def copy(self) -> "SpinTracedRDMs":
        return SpinTracedRDMs(self.gamma_a.copy(), self.gamma_b.copy(), self.gamma_os.copy())


@dataclass(frozen=True)
class OrbitalSpectrum:
    """Eigenvalues of a one-orbital reduced state, ordered as the occupation
    basis ``|0>, |up>, |dn>, |up dn>``."""

    lambdas: np.ndarray

    @property
    def occupancy(self) -> float:
        l0, l1, l2, l3 = self.lambdas
        return float(l1 + l2 + 2 * l3)


def compute_1rdm(psi: Wavefunction):
    """Spin blocks ``(gamma_a, gamma_b)`` with ``gamma[i, j] = <a+_i a_j>``."""
    sp = psi.space
    c = np.ascontiguousarray(psi.matrix)
    a, b = sp.alpha, sp.beta
    ga = _kernels.rdm1(c, a.ex_pq, a.ex_j, a.ex_s, sp.d)
    gb = _kernels.rdm1(np.ascontiguousarray(c.T), b.ex_pq, b.ex_j, b.ex_s, sp.d)
    return 0.5 * (ga + ga.T), 0.5 * (gb + gb.T)


def compute_os_2rdm(psi: Wavefunction) -> np.ndarray:
    d = psi.space.d
    if d ** 4 > MAX_OS_ENTRIES:
        raise CapacityError(f"opposite-spin 2-RDM with d={d} exceeds {MAX_OS_ENTRIES} entries")
    sp = psi.space
    a, b = sp.alpha, sp.beta
    g = _kernels.rdm_os(np.ascontiguousarray(psi.matrix), a.ex_pq, a.ex_j, a.ex_s,
                        b.ex_pq, b.ex_j, b.ex_s, d)
    g = g.reshape(d, d, d, d).transpose(0, 2, 1, 3)   # [p, r, q, s] -> [p, q, r, s]
    return np.ascontiguousarray(0.5 * (g + g.transpose(2, 3, 0, 1)))


def compute_rdms(psi: Wavefunction) -> SpinTracedRDMs:
    ga, gb = compute_1rdm(psi)
    return SpinTracedRDMs(ga, gb, compute_os_2rdm(psi))


def _clamp(lam: np.ndarray, where: str) -> np.ndarray:
    if lam.min() < -POSITIVITY_TOL:
        raise PositivityError(f"negative eigenvalue {lam.min():.3e} in {where}")
    return np.clip(lam, 0.0, None)


def orbital_spectra(rdms: SpinTracedRDMs) -> np.ndarray:
    """``(d, 4)`` array of one-orbital eigenvalues for every orbital."""
    na, nb, dbl = rdms.diagonal()
    lam = np.stack([1.0 - na - nb + dbl, na - dbl, nb - dbl, dbl], axis=1)
    return _clamp(lam, "orbital spectra")


def orbital_spectrum(rdms: SpinTracedRDMs, i: int) -> OrbitalSpectrum:
    if not 0 <= i < rdms.d:
        raise IndexError(f"orbital {i} outside 0..{rdms.d - 1}")
    na, nb = rdms.gamma_a[i, i], rdms.gamma_b[i, i]
    dbl = rdms.gamma_os[i, i, i, i]
    lam = np.array([1.0 - na - nb + dbl, na - dbl, nb - dbl, dbl])
    return OrbitalSpectrum(_clamp(lam, f"orbital {i}"))


# ------------------------------------------------------ fermionic partial trace

def _inversions(strings: np.ndarray, rank: np.ndarray, d: int) -> np.ndarray:
    occ = (strings[:, None] >> np.arange(d)) & 1
    later = rank[:, None] > rank[None, :]          # p precedes q in storage, follows in target
    upper = np.triu(np.ones((d, d), dtype=bool), 1)
    return np.einsum("ap,pq,aq->a", occ, (later & upper).astype(np.int64), occ)


def _schmidt_matrix(psi: Wavefunction, subset: Sequence[int]):
    """Coefficient matrix ``M[subsystem config, environment config]``.

    Target mode order puts the subset orbitals first (in the given order,
    up before down for each orbital) followed by the rest in index order;
    the sign of every determinant is the parity of reordering its creation
    string from the stored all-up-then-all-down order.
    """
    sp = psi.space
    d = sp.d
    subset = [int(i) for i in subset]
    if len(set(subset)) != len(subset):
        raise ValueError(f"repeated orbital in subset {subset}")
    if any(not 0 <= i < d for i in subset):
        raise IndexError(f"subset {subset} outside 0..{d - 1}")
    order = subset + [i for i in range(d) if i not in subset]
    rank = np.empty(d, dtype=np.int64)
    rank[order] = np.arange(d)

    sa, sb = sp.alpha.strings, sp.beta.strings
    occ_a = (sa[:, None] >> np.arange(d)) & 1
    occ_b = (sb[:, None] >> np.arange(d)) & 1
    cross = occ_a @ (rank[:, None] > rank[None, :]).astype(np.int64) @ occ_b.T
    parity = (_inversions(sa, rank, d)[:, None] + _inversions(sb, rank, d)[None, :] + cross) & 1
    coeff = np.where(parity, -psi.matrix, psi.matrix)

    k = len(subset)
    weights = 4 ** np.arange(k - 1, -1, -1)
    loc_a = (occ_a[:, subset] * weights).sum(1)
    loc_b = (occ_b[:, subset] * 2 * weights).sum(1)
    sub_idx = (loc_a[:, None] + loc_b[None, :]).ravel()
    sub_mask = sum(1 << i for i in subset)
    env_key = ((sa & ~sub_mask)[:, None] << d | (sb & ~sub_mask)[None, :]).ravel()
    _, env_idx = np.unique(env_key, return_inverse=True)
    return sub_idx, env_idx.ravel(), coeff.ravel(), k


def subsystem_rdm(psi: Wavefunction, subset: Sequence[int]) -> np.ndarray:
    """Dense ``4**k`` reduced density matrix of the orbitals in ``subset``.

    The local basis per orbital is ``|0>, |up>, |dn>, |up dn>`` and the first
    listed orbital is the most significant factor of the tensor product.
    """
    if len(subset) > MAX_SUBSET:
        raise CapacityError(f"subsystem of {len(subset)} orbitals exceeds {MAX_SUBSET}")
    sub_idx, env_idx, coeff, k = _schmidt_matrix(psi, subset)
    m = np.zeros((4 ** k, env_idx.max() + 1 if env_idx.size else 1))
    np.add.at(m, (sub_idx, env_idx), coeff)
    rho = m @ m.T
    return 0.5 * (rho + rho.T)


def two_orbital_rdm(psi: Wavefunction, i: int, j: int) -> np.ndarray:
    if i == j:
        raise ValueError("two_orbital_rdm needs two distinct orbitals")
    return subsystem_rdm(psi, [i, j])


def von_neumann(eigenvalues: np.ndarray) -> float:
    lam = _clamp(np.asarray(eigenvalues, dtype=float), "density matrix")
    nz = lam[lam > 0.0]
    return float(-(nz * np.log(nz)).sum())


def subsystem_entropy(psi: Wavefunction, subset: Sequence[int]) -> float:
    """Von Neumann entropy of the subset, from the Schmidt coefficients
    (no ``4**k`` matrix is formed, so there is no size cap)."""
    if len(subset) == 0:
        return 0.0
    sub_idx, env_idx, coeff, _ = _schmidt_matrix(psi, subset)
    rows, sub_c = np.unique(sub_idx, return_inverse=True)
    m = np.zeros((rows.size, env_idx.max() + 1))
    np.add.at(m, (sub_c.ravel(), env_idx), coeff)
    s = np.linalg.svd(m, compute_uv=False)
    return von_neumann(s ** 2)


def write_profile_csv(rdms: SpinTracedRDMs, sink: IO[str], precision: int = 9) -> None:
    """Columns: orbital_index, lambda0..lambda3, occupancy, entropy."""
    lam = orbital_spectra(rdms)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["orbital_index", "lambda0", "lambda1", "lambda2", "lambda3",
                     "occupancy", "entropy"])
    for i, row in enumerate(lam):
        occ = row[1] + row[2] + 2 * row[3]
        writer.writerow([i] + [f"{x:.{precision}f}" for x in (*row, occ, von_neumann(row))])
