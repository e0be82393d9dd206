import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_hamiltonian
from qicas import build_hubbard, compute_rdms, ground_state, orbital_spectrum, subsystem_entropy, subsystem_rdm
from qicas.errors import CapacityError, PositivityError
from qicas.fci import Wavefunction, enumerate_determinants
from qicas.rdm import SpinTracedRDMs, orbital_spectra, two_orbital_rdm, von_neumann, write_profile_csv


def random_state(d, na, nb, seed):
    space = enumerate_determinants(d, na, nb)
    c = np.random.default_rng(seed).standard_normal(space.size)
    return Wavefunction(space, c / np.linalg.norm(c))


def test_dimer_one_rdm(dimer):
    _, _, _, r = dimer
    g = 1.0 / (2.0 * np.sqrt(2.0))
    assert np.allclose(r.gamma_a, [[0.5, g], [g, 0.5]], atol=1e-12)
    assert np.allclose(r.gamma_b, r.gamma_a, atol=1e-12)


def test_dimer_spectrum(dimer):
    _, _, _, r = dimer
    x = (2.0 - np.sqrt(2.0)) / 8.0
    lam = orbital_spectrum(r, 0).lambdas
    assert np.allclose(lam, [x, 0.5 - x, 0.5 - x, x], atol=1e-12)
    assert orbital_spectrum(r, 0).occupancy == pytest.approx(1.0)


@pytest.mark.parametrize("d, na, nb, seed", [(3, 2, 1, 0), (4, 2, 2, 1), (4, 1, 3, 2), (3, 3, 0, 3)])
def test_rdms_match_operator_oracle_random_states(d, na, nb, seed):
    psi = random_state(d, na, nb, seed)
    vec = oracles.embed(psi)
    r = compute_rdms(psi)
    ga, gb = oracles.rdm1_oracle(vec, d)
    assert np.allclose(r.gamma_a, ga, atol=1e-12)
    assert np.allclose(r.gamma_b, gb, atol=1e-12)
    assert np.allclose(r.gamma_os, oracles.rdm_os_oracle(vec, d), atol=1e-12)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1), st.data())
@settings(max_examples=30, deadline=None)
def test_rdm_invariants(d, seed, data):
    na = data.draw(st.integers(0, d))
    nb = data.draw(st.integers(0, d))
    r = compute_rdms(random_state(d, na, nb, seed))
    assert np.trace(r.gamma_a) == pytest.approx(na, abs=1e-10)
    assert np.trace(r.gamma_b) == pytest.approx(nb, abs=1e-10)
    assert np.allclose(r.gamma_a, r.gamma_a.T, atol=1e-12)
    w = np.linalg.eigvalsh(r.gamma_a)
    assert w.min() > -1e-10 and w.max() < 1 + 1e-10
    # sum_q G[p, q, r, q] = n_beta * gamma_a[p, r]
    assert np.allclose(np.einsum("pqrq->pr", r.gamma_os), nb * r.gamma_a, atol=1e-10)
    assert np.allclose(np.einsum("pqpr->qr", r.gamma_os), na * r.gamma_b, atol=1e-10)
    lam = orbital_spectra(r)
    assert np.allclose(lam.sum(1), 1.0, atol=1e-10)
    assert lam.min() >= 0.0


@given(st.integers(2, 4), st.integers(0, 2**31 - 1), st.data())
@settings(max_examples=20, deadline=None)
def test_spectrum_equals_partial_trace(d, seed, data):
    na = data.draw(st.integers(0, d))
    nb = data.draw(st.integers(0, d))
    psi = random_state(d, na, nb, seed)
    r = compute_rdms(psi)
    i = data.draw(st.integers(0, d - 1))
    rho = subsystem_rdm(psi, [i])
    assert np.allclose(rho, np.diag(np.diag(rho)), atol=1e-12)
    assert np.allclose(np.diag(rho), orbital_spectrum(r, i).lambdas, atol=1e-10)


@pytest.mark.parametrize("subset", [[0], [2], [0, 1], [1, 3], [3, 0], [2, 0, 3]])
def test_subsystem_rdm_matches_operator_oracle(subset):
    psi = random_state(4, 2, 2, 17)
    vec = oracles.embed(psi)
    assert np.allclose(subsystem_rdm(psi, subset), oracles.subsystem_rdm_oracle(vec, 4, subset), atol=1e-12)


def test_subsystem_rdm_properties(hubbard4):
    _, _, psi, _ = hubbard4
    rho = two_orbital_rdm(psi, 1, 2)
    assert rho.shape == (16, 16)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_subsystem_entropy_matches_dense(hubbard4):
    _, _, psi, _ = hubbard4
    for subset in ([0], [0, 1], [1, 2], [0, 2, 3]):
        ref = oracles.entropy_of(subsystem_rdm(psi, subset))
        assert subsystem_entropy(psi, subset) == pytest.approx(ref, abs=1e-10)


def test_pure_state_complement_entropy(hubbard4):
    _, _, psi, _ = hubbard4
    assert subsystem_entropy(psi, [0, 1]) == pytest.approx(subsystem_entropy(psi, [2, 3]), abs=1e-10)
    assert subsystem_entropy(psi, [0, 1, 2, 3]) == pytest.approx(0.0, abs=1e-10)
    assert subsystem_entropy(psi, []) == 0.0


def test_dimer_entropies(dimer):
    _, _, psi, _ = dimer
    assert subsystem_entropy(psi, [0]) == pytest.approx(1.1096427112596328, abs=1e-12)
    assert subsystem_entropy(psi, [0, 1]) == pytest.approx(0.0, abs=1e-12)


def test_subset_errors(hubbard4):
    _, _, psi, _ = hubbard4
    with pytest.raises(ValueError):
        subsystem_rdm(psi, [1, 1])
    with pytest.raises(IndexError):
        subsystem_rdm(psi, [4])
    with pytest.raises(ValueError):
        two_orbital_rdm(psi, 2, 2)
    big = Wavefunction(enumerate_determinants(9, 1, 0), np.eye(9)[0])
    with pytest.raises(CapacityError):
        subsystem_rdm(big, list(range(9)))


def test_positivity_error():
    d = 2
    bad = SpinTracedRDMs(np.eye(d) * 0.5, np.eye(d) * 0.5, np.zeros((d,) * 4))
    bad.gamma_os[0, 0, 0, 0] = -0.1
    with pytest.raises(PositivityError):
        orbital_spectra(bad)
    with pytest.raises(PositivityError):
        von_neumann(np.array([1.1, -0.1]))


def test_tiny_negative_clamped():
    d = 1
    r = SpinTracedRDMs(np.ones((1, 1)), np.ones((1, 1)), np.full((1,) * 4, 1.0 + 1e-12))
    lam = orbital_spectrum(r, 0).lambdas
    assert lam.min() >= 0.0 and lam.max() == pytest.approx(1.0)


def test_profile_csv(dimer):
    buf = io.StringIO()
    write_profile_csv(dimer[3], buf, precision=6)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "orbital_index,lambda0,lambda1,lambda2,lambda3,occupancy,entropy"
    assert lines[1].startswith("0,0.073223,0.426777,0.426777,0.073223,1.000000,1.109643")


def test_rotated_hamiltonian_consistency():
    h = random_hamiltonian(3, 3, 1, 12)
    _, psi = ground_state(h)
    r = compute_rdms(psi)
    # energy from RDMs equals the eigenvalue for a one-body-only Hamiltonian
    h1 = h.replace(eri=np.zeros((3,) * 4), e_core=0.0)
    e1, psi1 = ground_state(h1)
    r1 = compute_rdms(psi1)
    assert e1 == pytest.approx(np.sum(h1.h1 * (r1.gamma_a + r1.gamma_b)), abs=1e-10)
    assert r.d == 3
