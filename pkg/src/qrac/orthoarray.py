"""Strength-2 orthogonal arrays over GF(d) via projective points.

Columns are indexed by the vectors ``v`` of GF(d)^m (column c has digit
``v_i = (c // d**i) % d``), rows by projective points ``u`` whose first
nonzero coordinate is 1, and ``M[u, v] = <u, v>``.  Any two rows are
linearly independent functionals, so every ordered symbol pair appears
``d^(m-2)`` times.
"""
import csv
import itertools
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import InvalidDimensionError
from .field import field_of_order, prime_power

MAX_COLUMNS = 256


@dataclass(frozen=True)
class OAReport:
    ok: bool
    worst_pair_count_deviation: int


def projective_points(d, m):
    """Canonical representatives (first nonzero coordinate = 1), lexicographic."""
    pts = []
    for u in itertools.product(range(d), repeat=m):
        nz = next((c for c in u if c), None)
        if nz == 1:
            pts.append(u)
    return pts


def oa_construct(d, m):
    """``(d^m - 1)/(d - 1)`` x ``d^m`` orthogonal array over the symbols 0..d-1."""
    if prime_power(d) is None:
        raise InvalidDimensionError(f"orthogonal arrays need a prime-power alphabet, got d={d!r}")
    if int(m) != m or m < 1:
        raise InvalidDimensionError(f"m must be a positive integer, got {m!r}")
    if d ** m > MAX_COLUMNS:
        raise InvalidDimensionError(f"d^m = {d ** m} exceeds {MAX_COLUMNS}")
    F = field_of_order(d)
    add, mul = F.add_table(), F.mul_table()
    cols = np.array(list(itertools.product(range(d), repeat=m)))[:, ::-1]  # v_i = digit i
    rows = projective_points(d, m)
    out = np.zeros((len(rows), d ** m), dtype=np.int64)
    for r, u in enumerate(rows):
        acc = np.zeros(d ** m, dtype=np.int64)
        for i, ui in enumerate(u):
            acc = add[acc, mul[ui, cols[:, i]]]
        out[r] = acc
    return out


def verify_oa(M, d=None):
    """Exact strength-2 check by integer counting."""
    M = np.asarray(M, dtype=np.int64)
    rows, cols = M.shape
    if d is None:
        d = int(M.max()) + 1
    if M.min() < 0 or M.max() >= d:
        return OAReport(False, cols)
    m = round(np.log(cols) / np.log(d))
    if d ** m != cols:
        return OAReport(False, cols)
    worst = 0
    for row in M:
        counts = np.bincount(row, minlength=d)
        worst = max(worst, int(np.abs(counts - d ** (m - 1)).max()))
    if m >= 2:
        expected = d ** (m - 2)
        for r1 in range(rows):
            for r2 in range(r1 + 1, rows):
                counts = np.bincount(M[r1] * d + M[r2], minlength=d * d)
                worst = max(worst, int(np.abs(counts - expected).max()))
    elif rows > 1:
        # m = 1 leaves no room for two independent rows.
        worst = max(worst, 1)
    return OAReport(worst == 0, worst)


def write_oa_csv(path, M):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(np.asarray(M, dtype=np.int64).tolist())


def read_oa_csv(path):
    with open(path, newline="") as fh:
        return np.array([[int(x) for x in row] for row in csv.reader(fh) if row], dtype=np.int64)


def m4_fixture():
    """The 5 x 16 array for d = 4, m = 2 shipped with the package."""
    with resources.files("qrac.data").joinpath("M4.csv").open() as fh:
        return np.array([[int(x) for x in row] for row in csv.reader(fh) if row], dtype=np.int64)
