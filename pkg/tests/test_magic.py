import numpy as np
import pytest

from tesh.fixtures import load_fixture
from tesh.magic import (find_pauli_stabilizers, haar_magic_stats, magic_bound,
                        pauli_expectations, pauli_label, stabilizer_renyi)
from tesh.qcore import (basis_state, cycle_graph, graph_state, haar_random_state,
                        pauli_expectation, phi4_state)
from tesh.tesearch import search_te

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
S = np.diag([1, 1j])


def random_local_clifford(rng, n):
    U = np.array([[1.0]])
    for _ in range(n):
        g = np.eye(2)
        for _ in range(rng.integers(1, 12)):
            g = (H if rng.random() < 0.5 else S) @ g
        U = np.kron(U, g)
    return U


def test_expectations_match_direct_evaluation():
    psi = haar_random_state(3, 0)
    E = pauli_expectations(psi)
    for x in range(8):
        for z in range(8):
            assert E[x, z] == pytest.approx(pauli_expectation(psi, pauli_label(x, z, 3)), abs=1e-12)


def test_labels():
    assert pauli_label(0b10, 0b11, 2) == "YZ"
    assert pauli_label(0, 0, 3) == "III"


def test_examples():
    assert stabilizer_renyi(basis_state("000")).entropy == 0
    t = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)
    assert abs(stabilizer_renyi(t).entropy - np.log2(4 / 3)) <= 1e-9
    assert abs(stabilizer_renyi(phi4_state()).entropy - 1.17) <= 0.01


def test_stabilizer_fixtures_have_zero_magic():
    for psi in (graph_state(cycle_graph(5)), load_fixture("wheel6"), load_fixture("zero4")):
        for alpha in (0.5, 2.0, 3.0):
            assert abs(stabilizer_renyi(psi, alpha).entropy) <= 1e-10


def test_alpha_guards():
    with pytest.raises(ValueError):
        stabilizer_renyi(phi4_state(), 1.0)
    with pytest.raises(ValueError):
        stabilizer_renyi(phi4_state(), 0.0)
    with pytest.raises(ValueError):
        stabilizer_renyi(haar_random_state(9, 0))


def test_magic_bound_values():
    assert magic_bound(4) == pytest.approx(3.0875, abs=1e-4)
    assert magic_bound(7) == pytest.approx(6.0112, abs=1e-4)
    assert magic_bound(1) == pytest.approx(np.log2(3) - 1)
    with pytest.raises(ValueError):
        magic_bound(0)


@pytest.mark.parametrize("seed", range(5))
def test_local_clifford_invariance(seed):
    rng = np.random.default_rng(seed)
    psi = haar_random_state(4, seed)
    U = random_local_clifford(rng, 4)
    assert stabilizer_renyi(U @ psi).entropy == pytest.approx(stabilizer_renyi(psi).entropy,
                                                              abs=1e-9)


def test_report_fields():
    r = stabilizer_renyi(haar_random_state(3, 1))
    assert 0 < r.moment_sum <= 8
    assert 0 <= r.entropy <= r.bound + 1e-9
    assert r.to_dict()["n"] == 3


def test_stabilizers():
    found = {(str(p), s) for p, s in find_pauli_stabilizers(phi4_state(), 1e-9)}
    assert found == {("XXXX", 1), ("YYYY", 1), ("ZZZZ", 1)}
    found = {(str(p), s) for p, s in find_pauli_stabilizers(basis_state("00"))}
    assert found == {("ZI", 1), ("IZ", 1), ("ZZ", 1)}
    assert find_pauli_stabilizers(haar_random_state(4, 3)) == []
    signs = dict((str(p), s) for p, s in find_pauli_stabilizers(basis_state("10")))
    assert signs["ZI"] == -1 and signs["IZ"] == 1


def test_haar_statistics():
    mean, std = haar_magic_stats(4, 1000, seed=0)
    assert abs(mean - 2.25) <= 0.05 and std > 0
    assert haar_magic_stats(4, 10, seed=1) == haar_magic_stats(4, 10, seed=1)
    mean, _ = haar_magic_stats(1, 50, seed=0)
    assert 0 <= mean <= np.log2(3) - 1


@pytest.mark.slow
def test_haar_statistics_n7():
    mean, _ = haar_magic_stats(7, 100, seed=0)
    assert abs(mean - 5.03) <= 0.1


def test_te_search_sample_within_bounds():
    summary = search_te(4, 10, master_seed=1)
    for r in summary.results:
        if r.verified:
            s = stabilizer_renyi(r.state).entropy
            assert 0 <= s <= magic_bound(4) + 1e-9
