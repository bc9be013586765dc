import numpy as np
import pytest

from qrac.errors import InvalidDimensionError
from qrac.orthoarray import m4_fixture, oa_construct, read_oa_csv, verify_oa, write_oa_csv

M4_EXPECTED = np.array(
    [
        [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3],
        [0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3],
        [0, 1, 2, 3, 2, 3, 0, 1, 3, 2, 1, 0, 1, 0, 3, 2],
        [0, 1, 2, 3, 3, 2, 1, 0, 1, 0, 3, 2, 2, 3, 0, 1],
        [0, 1, 2, 3, 1, 0, 3, 2, 2, 3, 0, 1, 3, 2, 1, 0],
    ]
)


def _pair_counts_balanced(M, d):
    # oracle: explicit dictionary counting over every row pair
    rows, cols = M.shape
    m = round(np.log(cols) / np.log(d))
    for r1 in range(rows):
        for r2 in range(r1 + 1, rows):
            counts = {}
            for c in range(cols):
                counts[(M[r1, c], M[r2, c])] = counts.get((M[r1, c], M[r2, c]), 0) + 1
            if len(counts) != d * d or set(counts.values()) != {d ** (m - 2)}:
                return False
    return True


def test_m4_fixture_passes():
    M = m4_fixture()
    assert M.shape == (5, 16)
    assert verify_oa(M, 4).ok
    assert _pair_counts_balanced(M, 4)


def test_m4_fixture_is_the_reference_array():
    assert np.array_equal(m4_fixture(), M4_EXPECTED)


def test_altered_m4_fails():
    M = m4_fixture().copy()
    M[2, 5] = (M[2, 5] + 1) % 4
    rep = verify_oa(M, 4)
    assert not rep.ok and rep.worst_pair_count_deviation >= 1


def test_d2_m2():
    M = oa_construct(2, 2)
    assert M.shape == (3, 4)
    assert sorted(map(tuple, M)) == [(0, 0, 1, 1), (0, 1, 0, 1), (0, 1, 1, 0)]


def test_d3_m1():
    assert np.array_equal(oa_construct(3, 1), [[0, 1, 2]])


def test_d4_m2_equivalent_to_m4():
    M = oa_construct(4, 2)
    assert M.shape == (5, 16)
    assert verify_oa(M, 4).ok


@pytest.mark.parametrize(
    "d,m",
    [(d, m) for d in (2, 3, 4, 5, 7, 8, 9, 16) for m in range(1, 9) if d ** m <= 256],
)
def test_constructed_arrays_verify(d, m):
    M = oa_construct(d, m)
    assert M.shape == ((d ** m - 1) // (d - 1), d ** m)
    assert verify_oa(M, d).ok
    if m >= 2 and M.shape[0] <= 13:
        assert _pair_counts_balanced(M, d)


def test_csv_round_trip(tmp_path):
    M = oa_construct(3, 2)
    write_oa_csv(tmp_path / "a.csv", M)
    assert np.array_equal(read_oa_csv(tmp_path / "a.csv"), M)


def test_errors():
    with pytest.raises(InvalidDimensionError):
        oa_construct(6, 2)
    with pytest.raises(InvalidDimensionError):
        oa_construct(2, 9)
