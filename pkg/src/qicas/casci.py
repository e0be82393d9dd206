"""CASCI energies in arbitrary orbital bases via frozen-core folding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PartitionError
from .fci import SolverOptions, Wavefunction, ground_state
from .hamiltonian import MolecularHamiltonian, transform_integrals
from .partition import CasPartition
from .rdm import compute_1rdm

__all__ = ["CasciResult", "fold_core", "casci_energy", "natural_occupations"]


@dataclass(frozen=True, eq=False)
class CasciResult:
    e_total: float
    e_core_eff: float
    active_psi: Wavefunction | None


def fold_core(h: MolecularHamiltonian, part: CasPartition):
    """Fold doubly occupied closed orbitals into a scalar and a one-body term.

    Returns ``(e_core_eff, h_active)``; ``h_active`` lives on the active
    orbitals only (ascending index order) and is ``None`` when no active
    electrons remain.
    """
    part.check(h.d, h.n_elec)
    c = list(part.closed)
    act = list(part.active)
    eri = h.eri
    e = h.e_core
    if c:
        e += 2.0 * np.trace(h.h1[np.ix_(c, c)])
        jj = eri[np.ix_(c, c, c, c)]
        e += 2.0 * np.einsum("iijj->", jj) - np.einsum("ijji->", jj)
    if part.n_cas == 0 or not act:
        return float(e), None
    h1 = h.h1[np.ix_(act, act)].copy()
    if c:
        h1 += 2.0 * np.einsum("pqii->pq", eri[np.ix_(act, act, c, c)])
        h1 -= np.einsum("piiq->pq", eri[np.ix_(act, c, c, act)])
    h_act = MolecularHamiltonian(d=len(act), n_elec=part.n_cas, ms2=h.ms2, e_core=0.0,
                                 h1=h1, eri=eri[np.ix_(act, act, act, act)])
    return float(e), h_act


def casci_energy(h: MolecularHamiltonian, u, part: CasPartition,
                 opts: SolverOptions | None = None) -> CasciResult:
    """Rotate the integrals by ``u``, fold the closed shell, solve the
    active space exactly."""
    if u is not None:
        h = transform_integrals(h, u)
    if abs(h.ms2) > part.n_cas:
        raise PartitionError(f"ms2={h.ms2} cannot be carried by {part.n_cas} active electrons")
    e_core_eff, h_act = fold_core(h, part)
    if h_act is None:
        return CasciResult(e_core_eff, e_core_eff, None)
    e_act, psi = ground_state(h_act, opts=opts)
    return CasciResult(e_core_eff + e_act, e_core_eff, psi)


def natural_occupations(psi: Wavefunction) -> np.ndarray:
    """Spin-summed natural occupations, descending."""
    ga, gb = compute_1rdm(psi)
    return np.sort(np.linalg.eigvalsh(ga + gb))[::-1]
