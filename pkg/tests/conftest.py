import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from qicas import build_hubbard, compute_rdms, ground_state  # noqa: E402
from qicas.hamiltonian import MolecularHamiltonian  # noqa: E402

DATA = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA, name)


def random_hamiltonian(d: int, n_elec: int, ms2: int = 0, seed: int = 0,
                       scale: float = 1.0) -> MolecularHamiltonian:
    """Dense random integrals with the full real 8-fold symmetry."""
    rng = np.random.default_rng(seed)
    h1 = rng.standard_normal((d, d)) * scale
    a = rng.standard_normal((d * d, d * d)) * 0.3 * scale
    eri = (a @ a.T).reshape(d, d, d, d)  # positive semidefinite (pq|rs)
    return MolecularHamiltonian(d=d, n_elec=n_elec, ms2=ms2, e_core=float(rng.normal()),
                                h1=h1, eri=eri)


@pytest.fixture(scope="session")
def dimer():
    h = build_hubbard(2, 1.0, 4.0)
    e, psi = ground_state(h)
    return h, e, psi, compute_rdms(psi)


@pytest.fixture(scope="session")
def hubbard4():
    h = build_hubbard(4, 1.0, 4.0)
    e, psi = ground_state(h)
    return h, e, psi, compute_rdms(psi)


@pytest.fixture(scope="session")
def hubbard6():
    h = build_hubbard(6, 1.0, 4.0)
    e, psi = ground_state(h)
    return h, e, psi, compute_rdms(psi)


def dimer_pairs_hamiltonian(coupling: float = 1e-3) -> MolecularHamiltonian:
    """Two Hubbard dimers (t=1, u=4) on orbitals 0-1 and 2-3, two deep
    orbitals (4, 5) and two high ones (6, 7), every idle orbital hopping to
    every dimer site with amplitude ``coupling``; 8 electrons. The four
    dimer orbitals are the only correlated ones by construction."""
    d = 8
    h1 = np.zeros((d, d))
    eri = np.zeros((d,) * 4)
    for a, b in ((0, 1), (2, 3)):
        h1[a, b] = h1[b, a] = -1.0
    for i in range(4):
        eri[i, i, i, i] = 4.0
    h1[4, 4] = h1[5, 5] = -10.0
    h1[6, 6] = h1[7, 7] = 10.0
    for idle in range(4, 8):
        for site in range(4):
            h1[idle, site] = h1[site, idle] = coupling
    h1[1, 2] = h1[2, 1] = coupling
    return MolecularHamiltonian(d=d, n_elec=8, ms2=0, e_core=0.0, h1=h1, eri=eri)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.LINES):
        terminalreporter.write_line(acceptance_log.LINES[n])
