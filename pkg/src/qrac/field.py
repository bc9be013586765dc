"""Arithmetic in GF(p^k) for the small fields used by the MUB and OA builders.

Elements are plain ints: ``x = sum_i c_i p^i`` where ``c_i`` are the
polynomial coefficients (constant term first).  This is the fixed bijection
GF(q) <-> {0, ..., q-1} used as the orthogonal-array alphabet.
"""
import itertools
from functools import lru_cache

import numpy as np

from .errors import InvalidDimensionError, InvalidInputError

MAX_ORDER = 4096
_TABLE_LIMIT = 256


def is_prime(p):
    if p < 2 or int(p) != p:
        return False
    p = int(p)
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def prime_power(q):
    """Return ``(p, k)`` with ``q == p**k`` or ``None``."""
    if int(q) != q or q < 2:
        return None
    q = int(q)
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            r = q
            while r % p == 0:
                r //= p
                k += 1
            return (p, k) if r == 1 else None
    return None


def _poly_mod(num, den, p):
    # num, den: coefficient lists, constant term first; den monic.
    num = list(num)
    dd = len(den) - 1
    for shift in range(len(num) - 1 - dd, -1, -1):
        coef = num[shift + dd] % p
        if coef:
            for i, c in enumerate(den):
                num[shift + i] = (num[shift + i] - coef * c) % p
    rem = [c % p for c in num[:dd]] if dd > 0 else []
    return rem


def _is_irreducible(poly, p):
    k = len(poly) - 1
    if k <= 1:
        return True
    for deg in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            div = list(low) + [1]
            if not any(_poly_mod(poly, div, p)):
                return False
    return True


def _smallest_irreducible(p, k):
    # Lexicographic over (c_0, c_1, ..., c_{k-1}), c_0 compared first.
    for low in itertools.product(range(p), repeat=k):
        poly = list(low) + [1]
        if _is_irreducible(poly, p):
            return tuple(poly)
    raise AssertionError("an irreducible polynomial of every degree exists")


class GaloisField:
    """GF(p^k) with modulus the lexicographically smallest monic irreducible."""

    def __init__(self, p, k):
        if not is_prime(p):
            raise InvalidDimensionError(f"{p!r} is not prime")
        if int(k) != k or k < 1:
            raise InvalidDimensionError(f"extension degree must be >= 1, got {k!r}")
        p, k = int(p), int(k)
        if p ** k > MAX_ORDER:
            raise InvalidDimensionError(f"field order {p}^{k} exceeds {MAX_ORDER}")
        self.p = p
        self.k = k
        self.q = p ** k
        self.modulus = _smallest_irreducible(p, k)
        self._powers = [p ** i for i in range(k)]
        self._mul = self._add = None
        if self.q <= _TABLE_LIMIT:
            self._build_tables()

    def __repr__(self):
        return f"GaloisField(p={self.p}, k={self.k})"

    def __eq__(self, other):
        return isinstance(other, GaloisField) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self):
        return hash((self.p, self.k))

    # -- representation ----------------------------------------------------
    def coeffs(self, x):
        self._check(x)
        return [(x // pw) % self.p for pw in self._powers]

    def from_coeffs(self, coeffs):
        if len(coeffs) > self.k:
            coeffs = _poly_mod(coeffs, self.modulus, self.p)
        return sum((int(c) % self.p) * pw for c, pw in zip(coeffs, self._powers))

    def elements(self):
        return list(range(self.q))

    def _check(self, x):
        if int(x) != x or not 0 <= x < self.q:
            raise InvalidInputError(f"{x!r} is not an element of GF({self.q})")

    # -- arithmetic ----------------------------------------------------------
    def _build_tables(self):
        q = self.q
        add = np.empty((q, q), dtype=np.int64)
        mul = np.empty((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(q):
                add[a, b] = self._add_raw(a, b)
                mul[a, b] = self._mul_raw(a, b)
        self._add, self._mul = add, mul

    def _add_raw(self, a, b):
        ca, cb = self.coeffs(a), self.coeffs(b)
        return self.from_coeffs([x + y for x, y in zip(ca, cb)])

    def _mul_raw(self, a, b):
        ca, cb = self.coeffs(a), self.coeffs(b)
        prod = [0] * (2 * self.k - 1)
        for i, x in enumerate(ca):
            if x:
                for j, y in enumerate(cb):
                    prod[i + j] += x * y
        if self.k == 1:
            return prod[0] % self.p
        return self.from_coeffs(_poly_mod(prod, self.modulus, self.p))

    def add(self, a, b):
        self._check(a)
        self._check(b)
        if self._add is not None:
            return int(self._add[a, b])
        return self._add_raw(a, b)

    def mul(self, a, b):
        self._check(a)
        self._check(b)
        if self._mul is not None:
            return int(self._mul[a, b])
        return self._mul_raw(a, b)

    def neg(self, a):
        return self.from_coeffs([-c for c in self.coeffs(a)])

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def pow(self, a, e):
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a):
        self._check(a)
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return self.pow(a, self.q - 2)

    def trace_to_prime(self, x):
        """``sum_{i<k} x^(p^i)``, returned as an integer in ``[0, p)``."""
        total = 0
        y = x
        for _ in range(self.k):
            total = self.add(total, y)
            y = self.pow(y, self.p)
        if total >= self.p:
            raise AssertionError("field trace left the prime subfield")
        return total

    def mul_order(self, a):
        if a == 0:
            raise InvalidInputError("0 has no multiplicative order")
        e, y = 1, a
        while y != 1:
            y = self.mul(y, a)
            e += 1
        return e

    # -- vectorised helpers (tables required) --------------------------------
    def add_table(self):
        if self._add is None:
            self._build_tables()
        return self._add

    def mul_table(self):
        if self._mul is None:
            self._build_tables()
        return self._mul

    def trace_table(self):
        return np.array([self.trace_to_prime(x) for x in range(self.q)], dtype=np.int64)


@lru_cache(maxsize=64)
def field_new(p, k=1):
    """Cached constructor for :class:`GaloisField`."""
    return GaloisField(p, k)


def field_of_order(q):
    pk = prime_power(q)
    if pk is None:
        raise InvalidDimensionError(f"{q!r} is not a prime power")
    return field_new(*pk)
