import itertools

import numpy as np
import pytest

from qrac.bloch import PAULI, pauli_string
from qrac.errors import InvalidDimensionError
from qrac.mub import BasisSet, export_bases, import_bases, mub_construct, pauli_partition, verify_mub


def _max_bias(bs):
    V = bs.vectors
    worst = 0.0
    for h, g in itertools.combinations(range(len(V)), 2):
        worst = max(worst, np.abs(np.abs(V[h].conj() @ V[g].T) ** 2 - 1 / bs.dim).max())
    return worst


@pytest.mark.parametrize("q", [2, 3, 4, 5, 7, 8, 9, 16])
def test_constructed_sets_are_mub(q):
    bs = mub_construct(q)
    assert len(bs) == q + 1
    rep = verify_mub(bs, 1e-10)
    assert rep.ok and rep.worst_deviation < 1e-10
    assert _max_bias(bs) < 1e-10
    assert np.allclose(bs.vectors[0], np.eye(q))


def test_qubit_triple_is_z_x_y():
    bs = mub_construct(2)
    for h, P in zip(range(3), (PAULI[3], PAULI[1], PAULI[2])):
        for v in bs.vectors[h]:
            w = P @ v
            assert np.isclose(abs(np.vdot(v, w)), 1.0)


def test_q4_bases_are_pauli_eigenbases():
    bs = mub_construct(4)
    for h, cls in enumerate(pauli_partition(2)):
        U = bs.unitary(h)
        for k in cls:
            D = U.conj().T @ pauli_string(k, 2) @ U
            assert np.allclose(D, np.diag(np.diag(D)), atol=1e-10)


def test_duplicate_basis_fails():
    q = 3
    bs = BasisSet(q, np.array([np.eye(q), np.eye(q)], dtype=complex))
    rep = verify_mub(bs)
    assert not rep.ok
    assert np.isclose(rep.worst_deviation, 1 - 1 / q)


@pytest.mark.parametrize("q", [6, 10, 128])
def test_unsupported_dimension(q):
    with pytest.raises(InvalidDimensionError):
        mub_construct(q)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_pauli_partition_classes_commute(m):
    classes = pauli_partition(m)
    assert len(classes) == 2 ** m + 1
    assert all(len(c) == 2 ** m - 1 for c in classes)
    assert sorted(k for c in classes for k in c) == list(range(1, 4 ** m))
    for c in classes:
        for a, b in itertools.combinations(c, 2):
            A, B = pauli_string(a, m), pauli_string(b, m)
            assert np.allclose(A @ B, B @ A)


def test_pauli_partition_m1_singletons():
    assert sorted(pauli_partition(1)) == [(1,), (2,), (3,)]


def test_pauli_partition_m2_contains_diagonal_class():
    diag = tuple(sorted(k for k in range(1, 16) if np.allclose(pauli_string(k, 2), np.diag(np.diag(pauli_string(k, 2))))))
    assert diag in pauli_partition(2)


def test_export_import_round_trip(tmp_path):
    bs = mub_construct(4)
    export_bases(bs, tmp_path)
    back = import_bases(tmp_path)
    assert back.dim == 4
    assert np.array_equal(back.vectors, bs.vectors)
