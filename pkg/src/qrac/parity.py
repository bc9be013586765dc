"""d-parity-obliviousness checks and the d = 2 joint-probability calculus.

The d-parity of an index set I is ``P_I(a) = sum_{i in I} a_i mod d``.  An
encoding is parity-oblivious when, for every I with ``|I| >= 2``, the average
state over the inputs with ``P_I(a) = J`` does not depend on J.  With the
discrete Fourier transform ``rho^(k) = sum_a exp(-2 pi i k.a / d) rho_a`` the
class averages are

    S_IJ = d^-n sum_c exp(2 pi i c J / d) rho^(c 1_I),

so one transform of the whole state table answers every (I, J) at once.
"""
import itertools
import json
from dataclasses import dataclass
from math import comb

import numpy as np

from .codes import all_inputs
from .errors import BoundViolationError, InvalidInputError
from .mub import mub_construct, pauli_partition

FFT_MAX_INPUTS = 1 << 20
FFT_MAX_ENTRIES = 1 << 24
DEFAULT_SUBSET_BUDGET = 1 << 16
DEFAULT_SAMPLED_SETS = 256
CHUNK = 4096


def d_parity(a, I, d):
    """``sum_{i in I} a_i mod d`` with 1-based slot indices ``I``."""
    I = list(I)
    if not I:
        raise InvalidInputError("index set must be non-empty")
    if any(not 1 <= i <= len(a) for i in I):
        raise InvalidInputError(f"index set {I} out of range for {len(a)} slots")
    return sum(int(a[i - 1]) for i in I) % d


@dataclass(frozen=True)
class ParityReport:
    ok: bool
    worst_deviation: float
    checked_sets: int
    mode: str
    worst_set: tuple = ()
    worst_value: int = None

    def to_dict(self):
        return {
            "ok": self.ok,
            "worst_deviation": self.worst_deviation,
            "checked_sets": self.checked_sets,
            "mode": self.mode,
            "worst_set": list(self.worst_set),
            "worst_value": self.worst_value,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def class_averages_direct(states, d, n, I):
    """``(d, N, N)`` averages of ``states`` (ordered by input) over each parity class."""
    A = all_inputs(d, n)
    par = A[:, [i - 1 for i in I]].sum(axis=1) % d
    N = states.shape[1]
    out = np.zeros((d, N, N), dtype=np.complex128)
    for J in range(d):
        out[J] = states[par == J].mean(axis=0)
    return out


def state_spectrum(states, d, n):
    """Fourier table of the states, axes ``(d,)*n + (N*N,)``; slot i on axis n-1-i."""
    N2 = states.shape[1] * states.shape[2]
    table = states.reshape((d,) * n + (N2,))
    return np.fft.fftn(table, axes=tuple(range(n)))


def _set_deviation(spectrum, d, n, I, N):
    # deviation of every class average of I from 1/N, shape (d, N*N)
    idx_base = [0] * n
    coeffs = []
    for c in range(d):
        idx = list(idx_base)
        for i in I:
            idx[n - i] = c  # slot i (1-based) lives on axis n - i
        coeffs.append(spectrum[tuple(idx)])
    coeffs = np.array(coeffs)
    J = np.arange(d)
    phase = np.exp(2j * np.pi * np.outer(J, np.arange(d)) / d)
    S = phase @ coeffs / d ** n
    S -= np.eye(N).reshape(-1)[None, :] / N
    return np.abs(S).max(axis=1)


def _index_sets(n, budget, seed):
    if 2 ** n <= budget:
        for size in range(2, n + 1):
            yield from itertools.combinations(range(1, n + 1), size)
        return
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(DEFAULT_SAMPLED_SETS):
        size = int(rng.integers(2, n + 1))
        yield tuple(sorted(int(x) + 1 for x in rng.choice(n, size=size, replace=False)))


def verify_parity_oblivious(code, tol=1e-10, subset_budget=DEFAULT_SUBSET_BUDGET, seed=0):
    """Check every parity class average against ``1/N``.

    Index sets are exhaustive when ``2^n <= subset_budget``; otherwise a seeded
    sample (size uniform in 2..n, then members uniform).  Codes too large to
    tabulate fall back to the marginal criterion: for an encoding affine in
    per-slot terms, each class fixes no single digit when ``|I| >= 2``, so the
    class averages equal ``1/N`` exactly when every slot's terms sum to zero.
    """
    d, n, N = code.d, code.n, code.N
    total = d ** n
    exhaustive_sets = 2 ** n <= subset_budget
    if total > FFT_MAX_INPUTS or total * N * N > FFT_MAX_ENTRIES:
        if code.blocks or code.scheme.boost_even_parity:
            raise InvalidInputError("code too large for an exact parity check and not affine per slot")
        dev = np.abs(code.scheme.K / n * code.terms.mean(axis=1).sum(axis=0)).max()
        return ParityReport(bool(dev <= tol), float(dev), 0, "marginal")
    states = np.concatenate([code.encode_batch(all_inputs(d, n)[s:s + CHUNK]) for s in range(0, total, CHUNK)])
    spectrum = state_spectrum(states, d, n)
    worst, worst_set, worst_J, checked = 0.0, (), None, 0
    for I in _index_sets(n, subset_budget, seed):
        dev = _set_deviation(spectrum, d, n, I, N)
        checked += 1
        J = int(np.argmax(dev))
        if dev[J] > worst:
            worst, worst_set, worst_J = float(dev[J]), tuple(I), J
    mode = "exhaustive" if exhaustive_sets else "sampled"
    return ParityReport(bool(worst <= tol), worst, checked, mode, worst_set, worst_J)


# -- joint probabilities (d = 2) ---------------------------------------------------------


def po_bound(nu):
    """Largest worst-case p of a parity-oblivious code decoding nu bits at once."""
    if int(nu) != nu or nu < 1:
        raise InvalidInputError("nu must be a positive integer")
    return (1.0 + 1.0 / nu) / 2.0


def _check_p(nu, p):
    if not 0.5 - 1e-15 <= p <= po_bound(nu) + 1e-15:
        raise BoundViolationError(
            f"p={p!r} outside [1/2, (1 + 1/nu)/2] = [0.5, {po_bound(nu)!r}] for nu={nu}; "
            "a parity-oblivious code cannot exceed this ceiling"
        )


def joint_prob(k, nu, p):
    """Probability that exactly k of nu simultaneously decoded bits are right."""
    if int(nu) != nu or nu < 1 or int(k) != k or not 0 <= k <= nu:
        raise InvalidInputError("need 0 <= k <= nu with nu >= 1")
    _check_p(nu, p)
    return 2.0 ** -nu * comb(nu, k) * (1.0 + (2 * k - nu) * (2 * p - 1))


def joint_prob_recursive(nu, p):
    """Table ``T[v, k] = p(k, v)`` for ``v <= nu`` from the defining linear relations.

    Level v is fixed by dropping one bit (``v`` marginal equations onto level
    ``v - 1``) and, for ``v >= 2``, the vanishing alternating sum.
    """
    if int(nu) != nu or nu < 1:
        raise InvalidInputError("nu must be a positive integer")
    _check_p(nu, p)
    T = np.zeros((nu + 1, nu + 1))
    T[0, 0] = 1.0
    T[1, 0], T[1, 1] = 1.0 - p, p
    for v in range(2, nu + 1):
        A = np.zeros((v + 1, v + 1))
        b = np.zeros(v + 1)
        for k in range(v):
            A[k, k] = (v - k) / v
            A[k, k + 1] = (k + 1) / v
            b[k] = T[v - 1, k]
        A[v] = (-1.0) ** np.arange(v + 1)
        if abs(np.linalg.det(A)) < 1e-300:
            raise ArithmeticError(f"singular joint-probability system at level {v}")
        T[v, : v + 1] = np.linalg.solve(A, b)
    return T


def joint_prob_table(nu, p):
    """Closed-form counterpart of :func:`joint_prob_recursive`."""
    _check_p(nu, p)
    T = np.zeros((nu + 1, nu + 1))
    T[0, 0] = 1.0
    for v in range(1, nu + 1):
        for k in range(v + 1):
            T[v, k] = 2.0 ** -v * comb(v, k) * (1.0 + (2 * k - v) * (2 * p - 1))
    return T


# -- bits decodable from one measurement ----------------------------------------------------


@dataclass(frozen=True)
class SimultaneousSlots:
    slots: tuple
    common_basis: bool


def _diagonal_in(ops, U, tol):
    D = np.einsum("ji,kjl,lm->kim", U.conj(), ops, U)
    off = D - np.einsum("kii->ki", D)[:, :, None] * np.eye(U.shape[0])[None]
    return np.abs(off).max() <= tol


def simultaneous_slots(code, basis_index, tol=1e-9):
    """Slots whose measurement is diagonal in MUB ``basis_index`` of ``C^N``.

    Such slots can all be read off one projective measurement in that basis.
    Codes whose operators are not diagonal in any MUB report an empty tuple
    with ``common_basis=False``.
    """
    bases = mub_construct(code.N)
    if not 0 <= basis_index < len(bases):
        raise InvalidInputError(f"basis index must lie in [0, {len(bases)})")
    diag = [[_diagonal_in(mm.operators, bases.unitary(h), tol) for h in range(len(bases))] for mm in code.measurements]
    common = any(any(row) for row in diag)
    if not common:
        return SimultaneousSlots((), False)
    return SimultaneousSlots(tuple(s for s, row in enumerate(diag) if row[basis_index]), True)


def basis_of_generator(k, m):
    """Index of the MUB of ``C^(2^m)`` diagonalizing tensor Pauli ``k``."""
    for h, cls in enumerate(pauli_partition(m)):
        if k in cls:
            return h
    raise InvalidInputError(f"generator {k} not found for m={m}")
