"""Eigenvalue bounds on the encoding scale, and searches that tighten them.

For a code with traceless terms ``t_ij`` the state of input a is
``1/N + (K/n) sum_i t_(i, a_i)``.  Writing ``-lambda`` for the most negative
eigenvalue of ``N sum_i t_(i, a_i)`` over all inputs, every state is valid
exactly when ``K <= n / lambda``.  For PVM codes ``N t_ij = d pi_ij - 1`` and
the worst-case success probability at ``K = n / lambda`` is
``(1 + (d - 1)/lambda) / d``.

For d = 2 the terms are signed tensor Paulis, so the search runs over sign
patterns ``beta`` of ``Sigma(beta) = sum_k (-1)^beta_k P_k`` (unnormalized
Paulis).  ``Sigma(-beta) = -Sigma(beta)``, so only patterns with
``beta_1 = 0`` are enumerated and both spectral extremes are tracked.
"""
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import special_ortho_group

from . import _config, _kernels
from .bloch import pauli_stack, pauli_string
from .codes import (
    CodeParams,
    EncodingScheme,
    Measurement,
    QracCode,
    all_inputs,
    build_improved_qrac,
)
from .errors import InvalidDimensionError, InvalidInputError, InvalidScaleError, SearchSpaceTooLargeError

MAX_PATTERNS = 1 << 20
CHUNK = 1 << 14
TIE_TOL = 1e-9
STATE_TOL = 1e-9


@dataclass(frozen=True)
class LambdaResult:
    lambda_: float
    witness: tuple
    exhaustive: bool
    trials: int
    d: int = 2
    subset: tuple = ()
    witness_input: tuple = None
    seed: int = None

    @property
    def p(self):
        return p_from_lambda(self.d, self.lambda_)

    def to_dict(self):
        return {
            "lambda": self.lambda_,
            "p": self.p,
            "witness_pattern": list(self.witness),
            "witness_input": None if self.witness_input is None else list(self.witness_input),
            "subset": list(self.subset),
            "exhaustive": self.exhaustive,
            "trials": self.trials,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def p_from_lambda(d, lam):
    return (1.0 + (d - 1) / lam) / d


def _map_chunks(fn, total, chunk=CHUNK, workers=None):
    """Apply ``fn(start, count)`` over ``[0, total)``; results in chunk order."""
    starts = list(range(0, total, chunk))
    args = [(s, min(chunk, total - s)) for s in starts]
    workers = _config.worker_count(workers)
    if workers <= 1 or len(args) <= 1:
        return [fn(s, c) for s, c in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda sc: fn(*sc), args))


# -- d = 2: signed Pauli sums ------------------------------------------------------------


def _check_generators(subset, m):
    subset = tuple(int(k) for k in subset)
    if len(set(subset)) != len(subset):
        raise InvalidInputError("generator indices must be distinct")
    if any(not 1 <= k < 4 ** m for k in subset):
        raise InvalidInputError(f"generator indices must lie in 1..{4 ** m - 1}")
    if not subset:
        raise InvalidInputError("need at least one generator")
    return subset


def sigma_of_beta(subset, beta, m):
    """``sum_k (-1)^beta_k P_k`` over the generator indices in ``subset``."""
    subset = _check_generators(subset, m)
    beta = [int(b) for b in beta]
    if len(beta) != len(subset) or any(b not in (0, 1) for b in beta):
        raise InvalidInputError("beta must be a 0/1 list with one entry per generator")
    P = pauli_stack(m)
    return sum((1 - 2 * b) * P[k - 1] for k, b in zip(subset, beta))


def _pattern_bits(pattern, n):
    # kernel pattern: bit k-1 is the sign bit of generator k; generator 0 is pinned to +
    return (0,) + tuple((pattern >> (k - 1)) & 1 for k in range(1, n))


def _pauli_extremes(paulis, workers=None):
    n = paulis.shape[0]
    total = 1 << (n - 1)
    if total > MAX_PATTERNS:
        raise SearchSpaceTooLargeError(f"2^{n - 1} sign patterns exceed the limit {MAX_PATTERNS}")
    parts = _map_chunks(lambda s, c: _kernels.pauli_sign_extremes(paulis, s, c), total, workers=workers)
    lo, lo_pat, hi, hi_pat = np.inf, -1, -np.inf, -1
    for plo, plo_pat, phi, phi_pat in parts:
        if plo < lo:
            lo, lo_pat = plo, plo_pat
        if phi > hi:
            hi, hi_pat = phi, phi_pat
    return lo, lo_pat, hi, hi_pat


def _pauli_lambda(paulis, workers=None):
    """lambda and witness pattern for a stack of signed Paulis."""
    n = paulis.shape[0]
    lo, lo_pat, hi, hi_pat = _pauli_extremes(paulis, workers)
    if -lo >= hi:
        return float(-lo), _pattern_bits(lo_pat, n)
    # the flipped pattern of the top eigenvector attains -hi
    return float(hi), tuple(1 - b for b in _pattern_bits(hi_pat, n))


def generator_orientation(code):
    """Signs ``s_i`` with ``2 pi_i0 - 1 = s_i P_(k_i)`` for d = 2 Pauli codes."""
    out = []
    for mm in code.measurements:
        k = mm.generator_index
        A = mm.operators[0] - mm.operators[1]
        out.append(1 if np.real(np.trace(pauli_string(k, code.m) @ A)) > 0 else -1)
    return tuple(out)


def _is_pauli_code(code):
    return (
        code.d == 2
        and not code.blocks
        and all(mm.generator_index is not None and mm.is_pvm for mm in code.measurements)
    )


def lambda_exhaustive(d, code_or_subset, m=None, workers=None):
    """Exact lambda by enumerating every input (or sign pattern for d = 2)."""
    if isinstance(code_or_subset, QracCode):
        code = code_or_subset
        if code.d != d:
            raise InvalidInputError(f"code has d={code.d}, expected {d}")
        if _is_pauli_code(code):
            gens = tuple(mm.generator_index for mm in code.measurements)
            orient = generator_orientation(code)
            paulis = np.array([s * pauli_string(k, code.m) for k, s in zip(gens, orient)])
            lam, beta = _pauli_lambda(paulis, workers)
            return LambdaResult(lam, beta, True, 1 << (code.n - 1), 2, gens, beta)
        return _lambda_general(code, workers)
    if d != 2 or m is None:
        raise InvalidInputError("a generator subset needs d=2 and m")
    subset = _check_generators(code_or_subset, m)
    P = pauli_stack(m)
    paulis = np.array([P[k - 1] for k in subset])
    lam, beta = _pauli_lambda(paulis, workers)
    return LambdaResult(lam, beta, True, 1 << (len(subset) - 1), 2, subset)


def _lambda_general(code, workers=None):
    d, n, N = code.d, code.n, code.N
    total = d ** n
    if total > MAX_PATTERNS:
        raise SearchSpaceTooLargeError(f"{d}^{n} inputs exceed the limit {MAX_PATTERNS}")
    terms = (N * code.terms).reshape(n, d, N, N)
    parts = _map_chunks(lambda s, c: _kernels.input_sum_min_eig(terms, s, c), total, workers=workers)
    best, idx = np.inf, -1
    for v, i in parts:
        if v < best:
            best, idx = v, i
    witness = tuple((idx // d ** i) % d for i in range(n))
    return LambdaResult(float(-best), witness, True, total, d, tuple(code.subset), witness)


def pauli_sparse(m, subset=None):
    """Sparse form of tensor Paulis: ``P[r, r ^ x] = phase[r]``."""
    if subset is None:
        subset = range(1, 4 ** m)
    xmask, phases = [], []
    for k in subset:
        P = pauli_string(k, m)
        x = int(np.flatnonzero(np.abs(P[0]) > 0.5)[0])
        xmask.append(x)
        phases.append(P[np.arange(2 ** m), np.arange(2 ** m) ^ x])
    return np.array(xmask, dtype=np.int64), np.array(phases)


RANDOM_CHUNK = 4096


def lambda_random(m, trials, seed=0):
    """Most negative eigenvalue over uniformly drawn sign patterns on all generators.

    When ``trials`` covers the whole pattern space the search enumerates it
    instead, and the result is flagged exhaustive.
    """
    if not 1 <= m <= 6:
        raise InvalidDimensionError("lambda_random supports 1 <= m <= 6")
    trials = int(trials)
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    n = 4 ** m - 1
    if n < 63 and trials >= 1 << n:
        res = lambda_exhaustive(2, range(1, 4 ** m), m)
        return replace(res, trials=1 << n, seed=int(seed))
    xmask, phases = pauli_sparse(m)
    root = np.random.SeedSequence(seed)
    best, witness = np.inf, None
    for c, s in enumerate(range(0, trials, RANDOM_CHUNK)):
        rng = np.random.Generator(np.random.Philox(root.spawn(c + 1)[c]))
        signs = rng.integers(0, 2, size=(min(RANDOM_CHUNK, trials - s), n), dtype=np.int8)
        vals = _kernels.random_sign_min_eig(signs, xmask, phases)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, witness = float(vals[k]), tuple(int(b) for b in signs[k])
    return LambdaResult(-best, witness, False, trials, 2, tuple(range(1, n + 1)), None, int(seed))


def conjecture_bound(m):
    """Conjectured floor ``1 - (1 + sqrt 3)^m`` of every Sigma(beta) spectrum."""
    return float(1.0 - (1.0 + np.sqrt(3.0)) ** m)


@dataclass(frozen=True)
class ConjectureReport:
    m: int
    mode: str
    extremum: float
    bound: float
    violated: bool
    attained: bool
    witness: tuple
    trials: int
    seed: int = None

    @property
    def margin(self):
        return self.extremum - self.bound

    def to_dict(self):
        return {
            "m": self.m,
            "mode": self.mode,
            "extremum": self.extremum,
            "bound": self.bound,
            "margin": self.margin,
            "violated": self.violated,
            "attained": self.attained,
            "witness": list(self.witness) if self.violated else None,
            "trials": self.trials,
            "seed": self.seed,
        }


def conjecture_check(m, mode="exhaustive", budget=10 ** 5, seed=0, tol=TIE_TOL):
    if mode == "exhaustive":
        if m > 2:
            raise SearchSpaceTooLargeError("exhaustive conjecture checks are limited to m <= 2")
        res = lambda_exhaustive(2, range(1, 4 ** m), m)
    elif mode == "random":
        res = lambda_random(m, budget, seed)
    else:
        raise InvalidInputError(f"unknown mode {mode!r}")
    bound = conjecture_bound(m)
    ext = -res.lambda_
    return ConjectureReport(
        m=m,
        mode=mode,
        extremum=ext,
        bound=bound,
        violated=bool(ext < bound - tol),
        attained=bool(abs(ext - bound) <= tol),
        witness=res.witness,
        trials=res.trials,
        seed=res.seed,
    )


# -- anticommuting families and subset search ---------------------------------------------


def pauli_index(digits):
    """Generator index from tensor factors listed left to right."""
    k = 0
    for c in digits:
        k = 4 * k + c
    return k


def anticommuting_set(m):
    """``2m + 1`` pairwise anticommuting tensor Paulis.

    ``x^(m)`` together with ``x^(k) (y|z) 1^(m-k-1)`` for ``k = 0..m-1``.
    """
    if int(m) != m or m < 1:
        raise InvalidDimensionError("m must be a positive integer")
    out = [pauli_index([1] * m)]
    for k in range(m):
        for mid in (2, 3):
            out.append(pauli_index([1] * k + [mid] + [0] * (m - k - 1)))
    return out


def anticommutes(k1, k2, m):
    """Tensor Paulis anticommute when an odd number of factors clash."""
    clashes = 0
    for _ in range(m):
        a, b = k1 & 3, k2 & 3
        if a and b and a != b:
            clashes += 1
        k1 >>= 2
        k2 >>= 2
    return clashes % 2 == 1


@dataclass(frozen=True)
class SubsetSearchResult:
    best_subset: tuple
    lambda_: float
    p: float
    witness: tuple
    evaluated: int

    def to_dict(self):
        return {
            "subset": list(self.best_subset),
            "lambda": self.lambda_,
            "p": self.p,
            "witness_pattern": list(self.witness),
            "subsets_evaluated": self.evaluated,
        }


def subset_search(n, m=2, workers=None):
    """Smallest lambda over every n-subset of the ``4^m - 1`` generators.

    Ties within 1e-9 go to the lexicographically smallest subset.  Since
    ``lambda >= sqrt(n)`` for any subset, the scan stops once that floor is hit.
    """
    if m != 2:
        raise InvalidDimensionError("subset_search is defined for m = 2")
    total = 4 ** m - 1
    if not 1 <= n <= total:
        raise InvalidDimensionError(f"n must lie in 1..{total}")
    P = pauli_stack(m)
    combos = list(itertools.combinations(range(1, total + 1), n))
    floor = np.sqrt(n)

    def evaluate(subset):
        paulis = np.ascontiguousarray(P[[k - 1 for k in subset]])
        lo, lo_pat, hi, hi_pat = _kernels.pauli_sign_extremes(paulis, 0, 1 << (n - 1))
        if -lo >= hi:
            return float(-lo), _pattern_bits(lo_pat, n)
        return float(hi), tuple(1 - b for b in _pattern_bits(hi_pat, n))

    best = (np.inf, None, None)
    evaluated = 0
    block = 256
    workers = _config.worker_count(workers)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for s in range(0, len(combos), block):
            chunk = combos[s:s + block]
            results = list(pool.map(evaluate, chunk)) if pool else [evaluate(c) for c in chunk]
            for subset, (lam, beta) in zip(chunk, results):
                evaluated += 1
                if lam < best[0] - TIE_TOL:
                    best = (lam, subset, beta)
            if best[0] <= floor + TIE_TOL:
                break
    finally:
        if pool:
            pool.shutdown()
    lam, subset, beta = best
    return SubsetSearchResult(tuple(subset), lam, p_from_lambda(2, lam), beta, evaluated)


def improved_slots_for_generators(generators, m):
    """Slot indices of the improved d=2 family that measure the given generators."""
    code = build_improved_qrac(CodeParams(2, m, 4 ** m - 1), scheme="uniform")
    where = {mm.generator_index: s for s, mm in enumerate(code.measurements)}
    return tuple(where[int(k)] for k in generators)


def subset_code(subset, m=2):
    """Improved d=2 code whose slots measure exactly the generator ``subset``."""
    slots = improved_slots_for_generators(subset, m)
    return build_improved_qrac(CodeParams(2, m, len(slots)), subset=slots, scheme="uniform")


# -- scaling ----------------------------------------------------------------------------


def witness_input(code, result):
    """Input string of ``code`` whose state sits on the boundary at ``K = n/lambda``."""
    if result.witness_input is not None:
        return tuple(result.witness_input)
    if not _is_pauli_code(code):
        raise InvalidInputError("a sign-pattern witness can only be mapped onto a d=2 Pauli code")
    orient = generator_orientation(code)
    # digit a gives sign (-1)^a on the oriented generator s P
    return tuple(int(b) ^ (0 if s > 0 else 1) for b, s in zip(result.witness, orient))


def apply_scaling(code, result, check_limit=1 << 16, seed=0):
    """Rescale ``code`` to ``K = n / lambda`` and confirm the states stay valid."""
    if code.blocks:
        raise InvalidInputError("composite codes cannot be rescaled as a whole")
    if not result.lambda_ > 0:
        raise InvalidScaleError("lambda must be positive")
    K = code.n / result.lambda_
    scaled = code.with_scheme(EncodingScheme("scaled", float(K)))
    if code.d ** code.n <= check_limit:
        A = all_inputs(code.d, code.n)
    else:
        rng = np.random.Generator(np.random.Philox(seed))
        A = rng.integers(0, code.d, size=(4096, code.n))
    wit = np.array(witness_input(code, result))[None, :] if (result.witness or result.witness_input) else None
    if wit is not None and wit.shape[1] == code.n:
        A = np.vstack([wit, A])
    worst = np.inf
    for s in range(0, len(A), 4096):
        ev = np.linalg.eigvalsh(scaled.encode_batch(A[s:s + 4096]))[:, 0]
        worst = min(worst, float(ev.min()))
    if worst < -STATE_TOL:
        raise InvalidScaleError(f"lambda={result.lambda_:.12g} is too small for this code (eigenvalue {worst:.3e})")
    return scaled


# -- d > 2 spectra ---------------------------------------------------------------------


@dataclass(frozen=True)
class CensusReport:
    d: int
    n: int
    total: int
    matching: int
    zero_counts: dict
    expected_matching: int

    @property
    def confirmed(self):
        return self.matching == self.expected_matching

    def to_dict(self):
        return {
            "d": self.d,
            "n": self.n,
            "total": self.total,
            "matching": self.matching,
            "expected_matching": self.expected_matching,
            "zero_counts": {str(k): v for k, v in sorted(self.zero_counts.items())},
            "confirmed": self.confirmed,
        }


def census_signature(d):
    """Ascending spectrum with ``(d-1)/2`` zeros and ``(d+1)/2`` copies of ``2/(d+1)``."""
    return np.concatenate([np.zeros((d - 1) // 2), np.full((d + 1) // 2, 2.0 / (d + 1))])


def spectrum_census(d, m=1, tol=1e-9, workers=None):
    """Spectra of the uniform-mixture states of the maximal improved (d, m=1) code."""
    if d not in (3, 5, 7) or m != 1:
        raise InvalidDimensionError("spectrum_census covers d in {3, 5, 7} with m = 1")
    n = d + 1
    code = build_improved_qrac(CodeParams(d, m, n), scheme="uniform")
    projs = code.operator_stack / (n * d ** (m - 1))
    target = census_signature(d)
    total = d ** n
    chunk = 1 << 16
    parts = _map_chunks(lambda s, c: _kernels.census(projs, 1.0, s, c, target, tol), total, chunk, workers)
    zeros = np.concatenate([z for z, _ in parts])
    match = np.concatenate([mt for _, mt in parts])
    counts = np.bincount(zeros.astype(np.int64), minlength=d)
    zero_counts = {int(k): int(v) for k, v in enumerate(counts) if v}
    return CensusReport(d, n, total, int(match.sum()), zero_counts, d * d)


# -- rotated anticommuting generators ---------------------------------------------------------


def random_rotation(k, seed=0):
    """Haar-random element of SO(k), seeded."""
    return special_ortho_group.rvs(k, random_state=np.random.Generator(np.random.Philox(seed)))


def rotate_generator_subset(code, slots, rotation):
    """Replace the generators of ``slots`` by rotated combinations of themselves.

    The chosen slots must measure pairwise anticommuting Paulis; their
    oriented generators ``g_i`` become ``sum_j O_ij g_j``, which again square
    to the identity, so the new measurements are still PVMs.
    """
    if code.d != 2:
        raise InvalidDimensionError("generator rotations are defined for d = 2")
    slots = tuple(int(s) for s in slots)
    O = np.asarray(rotation, dtype=np.float64)
    if O.shape != (len(slots), len(slots)) or np.abs(O @ O.T - np.eye(len(slots))).max() > 1e-10:
        raise InvalidInputError("rotation must be an orthogonal matrix matching the slot count")
    gens = []
    for s in slots:
        mm = code.measurements[s]
        gens.append(mm.operators[0] - mm.operators[1])
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            if np.abs(gens[a] @ gens[b] + gens[b] @ gens[a]).max() > 1e-10:
                raise InvalidInputError(f"slots {slots[a]} and {slots[b]} do not anticommute")
    eye = np.eye(code.N)
    meas = list(code.measurements)
    for a, s in enumerate(slots):
        g = sum(O[a, b] * gens[b] for b in range(len(gens)))
        meas[s] = Measurement(np.array([(eye + g) / 2, (eye - g) / 2]), basis_index=None, generator_index=None)
    return replace(code, measurements=tuple(meas), method="rotated")


def anticommuting_partition(generators, m, size=3):
    """Split ``generators`` into groups of pairwise anticommuting members.

    Deterministic backtracking; returns ``None`` if no such split exists.
    """
    gens = sorted(int(k) for k in generators)
    if len(gens) % size:
        return None

    def solve(rest):
        if not rest:
            return []
        head = rest[0]
        for combo in itertools.combinations(rest[1:], size - 1):
            group = (head,) + combo
            if all(anticommutes(a, b, m) for a, b in itertools.combinations(group, 2)):
                tail = solve([g for g in rest if g not in group])
                if tail is not None:
                    return [group] + tail
        return None

    return solve(gens)
