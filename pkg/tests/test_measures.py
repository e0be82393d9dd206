import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qicas import (
    CasPartition,
    build_hubbard,
    compute_rdms,
    decompose_correlation,
    entropy,
    f_qi,
    f_qi_all,
    ground_state,
    mutual_information,
    mutual_information_matrix,
    orbital_entropies,
    subsystem_entropy,
    subsystem_rdm,
    suggest_cas_size,
    threshold_diagram,
    transform_integrals,
)
from qicas.errors import DegenerateProfileError, NoPlateauError
from qicas.fci import Wavefunction, enumerate_determinants
from qicas.measures import LN4, binary_entropy, inverse_binary_entropy, write_diagram_csv, write_mi_csv
from qicas.rotation import random_orthogonal

SITE_ENTROPY = 1.1096427112596328


def bonding_dimer(u=0.0):
    h = transform_integrals(build_hubbard(2, 1.0, u), oracles.rotation_from_angle(np.pi / 4))
    return ground_state(h)


def random_state(d, na, nb, seed):
    space = enumerate_determinants(d, na, nb)
    c = np.random.default_rng(seed).standard_normal(space.size)
    return Wavefunction(space, c / np.linalg.norm(c))


def test_entropy_values():
    assert entropy([1, 0, 0, 0]) == 0.0
    assert entropy([0.25] * 4) == pytest.approx(np.log(4.0), abs=1e-12)
    x = (2 - np.sqrt(2)) / 8
    assert entropy([x, 0.5 - x, 0.5 - x, x]) == pytest.approx(SITE_ENTROPY, abs=1e-12)


def test_dimer_f_qi(dimer):
    _, _, psi, r = dimer
    part = CasPartition.from_active(2, 2, 2, [0])
    assert f_qi(r, part) == pytest.approx(SITE_ENTROPY, abs=1e-12)
    assert f_qi_all(r) == pytest.approx(2 * SITE_ENTROPY, abs=1e-12)
    assert f_qi(r, CasPartition.from_sizes(2, 2, 2, 2)) == 0.0


def test_single_determinant_zero():
    _, psi = bonding_dimer(0.0)
    r = compute_rdms(psi)
    assert np.abs(orbital_entropies(r)).max() < 1e-12
    assert f_qi_all(r) < 1e-12
    assert mutual_information(psi, 0, 1) == pytest.approx(0.0, abs=1e-10)


def test_dimer_mutual_information(dimer):
    _, _, psi, _ = dimer
    assert mutual_information(psi, 0, 1) == pytest.approx(2 * SITE_ENTROPY, abs=1e-10)
    assert mutual_information(psi, 0, 1) == mutual_information(psi, 1, 0)
    with pytest.raises(ValueError):
        mutual_information(psi, 1, 1)


def test_mutual_information_matches_operator_oracle():
    psi = random_state(4, 2, 2, 5)
    vec = oracles.embed(psi)
    for i, j in [(0, 1), (1, 3), (2, 3)]:
        rho_ij = oracles.subsystem_rdm_oracle(vec, 4, [i, j])
        ref = (oracles.entropy_of(oracles.subsystem_rdm_oracle(vec, 4, [i]))
               + oracles.entropy_of(oracles.subsystem_rdm_oracle(vec, 4, [j]))
               - oracles.entropy_of(rho_ij))
        assert mutual_information(psi, i, j) == pytest.approx(ref, abs=1e-10)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=15, deadline=None)
def test_mutual_information_bounds(seed):
    psi = random_state(4, 2, 1, seed)
    mi = mutual_information_matrix(psi)
    assert np.array_equal(mi, mi.T)
    assert mi.min() >= -1e-9 and mi.max() <= 2 * LN4 + 1e-9


@given(st.integers(0, 2**31 - 1), st.data())
@settings(max_examples=15, deadline=None)
def test_entropy_consistent_with_partial_trace(seed, data):
    psi = random_state(4, 2, 2, seed)
    r = compute_rdms(psi)
    i = data.draw(st.integers(0, 3))
    assert orbital_entropies(r)[i] == pytest.approx(oracles.entropy_of(subsystem_rdm(psi, [i])), abs=1e-9)


@given(st.permutations([0, 1, 2, 3, 4, 5]))
@settings(max_examples=10, deadline=None)
def test_f_qi_label_permutation_invariance(perm):
    h = build_hubbard(6)
    _, psi = ground_state(h)
    r = compute_rdms(psi)
    part = CasPartition(active=(1, 2, 3, 4), closed=(0,), virtual=(5,), n_cas=4)
    s = orbital_entropies(r)
    ref = sum(s[i] for i in part.nonactive)
    assert f_qi(r, part) == ref
    # the sum over non-active labels ignores their order
    shuffled = [i for i in perm if i in part.nonactive]
    assert sum(s[i] for i in sorted(shuffled)) == ref


def test_f_qi_all_dominates(hubbard4):
    _, _, _, r = hubbard4
    for part in (CasPartition.from_sizes(4, 4, 2, 2), CasPartition.from_sizes(4, 4, 4, 3)):
        assert f_qi_all(r) >= f_qi(r, part)


def test_decompose_correlation_dimer(dimer):
    _, _, psi, r = dimer
    rep = decompose_correlation(psi, CasPartition.from_active(2, 2, 2, [0]), r)
    assert rep.e_an == pytest.approx(SITE_ENTROPY, abs=1e-10)
    assert rep.i_n == pytest.approx(0.0, abs=1e-10)
    rep = decompose_correlation(psi, CasPartition.from_sizes(2, 2, 2, 2))
    assert (rep.f_qi, rep.i_n, rep.e_an) == (0.0, 0.0, 0.0)


def test_decompose_pure_state_symmetry(hubbard4):
    _, _, psi, r = hubbard4
    part = CasPartition.from_sizes(4, 4, 2, 2)
    rep = decompose_correlation(psi, part, r)
    assert rep.e_an == pytest.approx(subsystem_entropy(psi, part.active), abs=1e-9)
    assert rep.f_qi == pytest.approx(rep.i_n + rep.e_an, abs=1e-12)
    assert rep.i_n >= -1e-9


def test_binary_entropy():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(np.log(2), abs=1e-15)
    assert binary_entropy(0.3) == pytest.approx(binary_entropy(0.7), abs=1e-15)
    with pytest.raises(ValueError):
        binary_entropy(1.5)


@given(st.floats(0.0, 0.5))
def test_inverse_binary_entropy(x):
    y = binary_entropy(x)
    assert inverse_binary_entropy(y) == pytest.approx(x, abs=1e-9)


def test_threshold_diagram_examples():
    prof = [1.0, 1.0, 0.1, 0.1]
    assert threshold_diagram(prof, [0.2]) == [(0.2, 2)]
    assert threshold_diagram(prof, [0.05]) == [(0.05, 4)]
    counts = [c for _, c in threshold_diagram(prof)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    with pytest.raises(DegenerateProfileError):
        threshold_diagram([0.0, 0.0])


def test_suggest_size_examples():
    taus = [round(0.01 * k, 2) for k in range(1, 51)]
    counts = [10] * 4 + [8] * 6 + [7] * 40
    assert suggest_cas_size(list(zip(taus, counts)), d=10) == (8, (0.05, 0.10))
    with pytest.raises(NoPlateauError):
        suggest_cas_size(list(zip(taus[:6], [6, 5, 4, 3, 2, 1])))
    two = [6] * 5 + [4] * 10 + [2] * 35
    assert suggest_cas_size(list(zip(taus, two)), d=8)[0] == 6
    assert suggest_cas_size(list(zip(taus, two)), d=6)[0] == 4


def test_csv_writers():
    buf = io.StringIO()
    write_diagram_csv([(0.01, 3), (0.02, 2)], buf)
    assert buf.getvalue() == "threshold,count\n0.01,3\n0.02,2\n"
    buf = io.StringIO()
    write_mi_csv(np.array([[0, 0.5], [0.5, 0]]), buf, 3)
    assert buf.getvalue() == "i,j,value\n0,1,0.500\n"


def test_f_qi_rotated_matches_resolve():
    h = build_hubbard(4)
    u = random_orthogonal(4, 21)
    from qicas import rotate_rdms
    _, psi = ground_state(h)
    r_rot = rotate_rdms(compute_rdms(psi), u)
    _, psi2 = ground_state(transform_integrals(h, u))
    part = CasPartition.from_sizes(4, 4, 2, 2)
    assert f_qi(r_rot, part) == pytest.approx(f_qi(compute_rdms(psi2), part), abs=1e-8)
