"""Exact and sampled success probabilities of (Q)RAC codes.

The probability of reading outcome j in slot i from the state of input a is
``Tr(F_ij rho_a)``.  Evaluations are batched over inputs in fixed-size chunks,
so results do not depend on how the work is split.
"""
import json
from dataclasses import asdict, dataclass

import numpy as np

from .codes import all_inputs, input_digits
from .errors import InvalidInputError, NotParityObliviousError

DEFAULT_EXHAUSTIVE_LIMIT = 10 ** 6
DEFAULT_SAMPLES = 1 << 14
CHUNK = 4096
SUM_TOL = 1e-9


@dataclass(frozen=True)
class EvalReport:
    worst_case_p: float
    average_p: float
    argmin_input: tuple
    argmin_slot: int
    per_outcome_max_wrong: float
    mode: str
    trials: int
    seed: int = None

    @property
    def lower_confidence(self):
        """Sampled reports only bound the true worst case from above."""
        return self.mode != "exhaustive"

    def to_dict(self):
        out = asdict(self)
        out["argmin_input"] = list(self.argmin_input)
        out["lower_confidence"] = self.lower_confidence
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _flat_ops(code):
    ops = code.operator_stack
    n, d, N = ops.shape[0], ops.shape[1], ops.shape[2]
    return ops.reshape(n * d, N * N).conj()


def probabilities(code, A):
    """``(B, n, d)`` outcome probabilities for a digit array ``A``."""
    A = np.asarray(A, dtype=np.int64)
    F = _flat_ops(code)
    out = np.empty((A.shape[0], code.n, code.d))
    for s in range(0, A.shape[0], CHUNK):
        rho = code.encode_batch(A[s:s + CHUNK]).reshape(-1, code.N * code.N)
        out[s:s + CHUNK] = np.real(rho @ F.T).reshape(-1, code.n, code.d)
    return out


def outcome_distribution(code, a, i):
    """Probabilities of the d outcomes when slot ``i`` (0-based) is measured."""
    if not 0 <= int(i) < code.n:
        raise InvalidInputError(f"slot {i} outside [0, {code.n})")
    digits = input_digits(a, code.d, code.n)
    return probabilities(code, np.array([digits]))[0, int(i)]


def _input_sample(code, exhaustive_limit, samples, seed):
    total = code.d ** code.n
    if total * code.n <= exhaustive_limit:
        return all_inputs(code.d, code.n), "exhaustive", total
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.integers(0, code.d, size=(samples, code.n)), "sampled", samples


def _correct(probs, A):
    return np.take_along_axis(probs, A[:, :, None], axis=2)[:, :, 0]


def exact_report(code, exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT, samples=DEFAULT_SAMPLES, seed=0):
    """Worst case and average over every (input, slot) pair.

    Falls back to ``samples`` seeded uniform inputs when ``d^n * n`` exceeds
    ``exhaustive_limit``.
    """
    A, mode, trials = _input_sample(code, exhaustive_limit, samples, seed)
    worst, where, total, wrong = np.inf, (0, 0), 0.0, 0.0
    for s in range(0, A.shape[0], CHUNK):
        block = A[s:s + CHUNK]
        probs = probabilities(code, block)
        good = _correct(probs, block)
        idx = np.unravel_index(np.argmin(good), good.shape)
        if good[idx] < worst - 1e-15:
            worst, where = float(good[idx]), (s + int(idx[0]), int(idx[1]))
        total += float(good.sum())
        np.put_along_axis(probs, block[:, :, None], -np.inf, axis=2)
        wrong = max(wrong, float(probs.max()))
    return EvalReport(
        worst_case_p=worst,
        average_p=total / (A.shape[0] * code.n),
        argmin_input=tuple(int(x) for x in A[where[0]]),
        argmin_slot=where[1],
        per_outcome_max_wrong=wrong,
        mode=mode,
        trials=int(trials),
        seed=None if mode == "exhaustive" else int(seed),
    )


@dataclass(frozen=True)
class MonteCarloResult:
    report: EvalReport
    frequencies: np.ndarray
    exact: np.ndarray
    inputs: np.ndarray
    max_z: float

    @property
    def within_bounds(self):
        return self.max_z <= 5.0


def monte_carlo(code, trials, seed=0, exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT, samples=DEFAULT_SAMPLES):
    """Simulate ``trials`` measurements of every (input, slot) pair.

    Each chunk of inputs draws from its own child of ``SeedSequence(seed)``,
    keyed by chunk index, so the output is fixed by the seed alone.
    """
    if int(trials) < 1:
        raise InvalidInputError("trials must be >= 1")
    trials = int(trials)
    A, _, _ = _input_sample(code, exhaustive_limit, samples, seed)
    exact = probabilities(code, A)
    freq = np.empty_like(exact)
    root = np.random.SeedSequence(seed)
    for c, s in enumerate(range(0, A.shape[0], CHUNK)):
        rng = np.random.Generator(np.random.Philox(root.spawn(c + 1)[c]))
        pv = np.clip(exact[s:s + CHUNK], 0.0, None)
        pv /= pv.sum(axis=2, keepdims=True)
        freq[s:s + CHUNK] = rng.multinomial(trials, pv) / trials
    se = np.sqrt(np.maximum(exact * (1 - exact), 1e-300) / trials)
    z = np.abs(freq - exact) / se
    z[exact * (1 - exact) < 1e-14] = 0.0
    good = _correct(freq, A)
    b, i = np.unravel_index(np.argmin(good), good.shape)
    wrong = freq.copy()
    np.put_along_axis(wrong, A[:, :, None], -np.inf, axis=2)
    report = EvalReport(
        worst_case_p=float(good[b, i]),
        average_p=float(good.mean()),
        argmin_input=tuple(int(x) for x in A[b]),
        argmin_slot=int(i),
        per_outcome_max_wrong=float(wrong.max()),
        mode="monte_carlo",
        trials=trials,
        seed=int(seed),
    )
    return MonteCarloResult(report, freq, exact, A, float(z.max()))


# -- QRAC read as a classical RAC ------------------------------------------------------


def p_q_to_c(d, p):
    """Per-digit success when every digit is read out at once."""
    if not 1.0 / d - 1e-12 <= p <= 1.0 + 1e-12:
        raise InvalidInputError(f"p={p!r} outside [1/d, 1]")
    return (1.0 + (d * p - 1.0) ** 2 / (d - 1)) / d


MAX_RAC_INPUTS = 1 << 20


def qrac_as_rac_measure(code):
    """POVM ``F_a = d^(m-n) rho_a`` over all inputs, shape ``(d^n, N, N)``."""
    if code.d ** code.n > MAX_RAC_INPUTS:
        raise InvalidInputError(f"d^n = {code.d ** code.n} exceeds {MAX_RAC_INPUTS}")
    states = code.encode_batch(all_inputs(code.d, code.n))
    F = states * float(code.d) ** (code.m - code.n)
    dev = float(np.abs(F.sum(axis=0) - np.eye(code.N)).max())
    if dev > SUM_TOL:
        raise NotParityObliviousError(f"the scaled encoding states do not sum to the identity (deviation {dev:.3e})")
    return F


def q_to_c_probabilities(code):
    """``Tr(rho_a sum_{b: b_i = a_i} F_b)`` for all inputs, shape ``(d^n, n)``."""
    F = qrac_as_rac_measure(code)
    A = all_inputs(code.d, code.n)
    N2 = code.N * code.N
    Ff = F.reshape(-1, N2)
    # group sums G[i, j] = sum of F_b over inputs with b_i = j
    G = np.zeros((code.n, code.d, N2), dtype=np.complex128)
    for i in range(code.n):
        for j in range(code.d):
            G[i, j] = Ff[A[:, i] == j].sum(axis=0)
    rho = code.encode_batch(A).reshape(-1, N2)
    out = np.empty((A.shape[0], code.n))
    for i in range(code.n):
        probs = np.real(rho @ G[i].conj().T)
        out[:, i] = probs[np.arange(A.shape[0]), A[:, i]]
    return out


def bloch_length_squared(code, A):
    """``r_a^2 = 2 (Tr rho_a^2 - 1/N)`` for each row of ``A``."""
    rho = code.encode_batch(np.asarray(A)).reshape(len(A), -1)
    return 2.0 * (np.sum(np.abs(rho) ** 2, axis=1) - 1.0 / code.N)
