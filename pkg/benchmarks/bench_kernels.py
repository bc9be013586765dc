"""Wall-clock comparison of the numba kernels against their numpy twins.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``.  The first numba
call of each kernel is reported separately because it includes compilation
(or loading from the on-disk cache).  Every case also checks that both
variants agree, so a speedup never hides a wrong answer.
"""
import argparse
import time

import numpy as np

from qrac import _kernels
from qrac.bloch import pauli_stack
from qrac.codes import CodeParams, all_inputs, build_improved_qrac
from qrac.lambda_opt import census_signature, pauli_sparse
from qrac.pure_search import SearchConfig, draw_bases


def _cases():
    rng = np.random.Generator(np.random.Philox(7))

    G = rng.standard_normal((4096, 6, 6)) + 1j * rng.standard_normal((4096, 6, 6))
    herm = (G + G.conj().transpose(0, 2, 1)) / 2
    yield "batch_eigvalsh 4096x6x6", _kernels.nb_batch_eigvalsh, _kernels.np_batch_eigvalsh, (herm,)

    paulis = np.ascontiguousarray(pauli_stack(2), dtype=np.complex128)
    yield "pauli_sign_extremes m=2 n=15", _kernels.nb_pauli_sign_extremes, _kernels.np_pauli_sign_extremes, (
        paulis, 0, 1 << 14)

    code = build_improved_qrac(CodeParams(3, 1, 4), scheme="uniform")
    terms = np.ascontiguousarray((3 * code.terms).reshape(4, 3, 3, 3))
    yield "input_sum_min_eig d=3 n=4", _kernels.nb_input_sum_min_eig, _kernels.np_input_sum_min_eig, (terms, 0, 81)

    code5 = build_improved_qrac(CodeParams(5, 1, 6), scheme="uniform")
    projs = np.ascontiguousarray(code5.operator_stack / 6)
    yield "census d=5", _kernels.nb_census, _kernels.np_census, (projs, 1.0, 0, 5 ** 6, census_signature(5), 1e-9)

    xmask, phases = pauli_sparse(3)
    signs = rng.integers(0, 2, size=(2048, 63), dtype=np.int8)
    yield "random_sign_min_eig m=3 x2048", _kernels.nb_random_sign_min_eig, _kernels.np_random_sign_min_eig, (
        signs, xmask, phases)

    n = 5
    cfg = SearchConfig()
    bases = draw_bases(n, rng, cfg.unbias_threshold, cfg.max_basis_attempts)
    A = all_inputs(2, n)
    psi0 = rng.standard_normal((len(A), 4)) + 1j * rng.standard_normal((len(A), 4))
    psi0 /= np.linalg.norm(psi0, axis=1, keepdims=True)
    noise = rng.standard_normal((300, len(A), 8))
    yield "walk_states n=5 x300", _kernels.nb_walk_states, _kernels.np_walk_states, (
        bases, A, psi0, noise, 0.05, 0.9, 100)


def _time(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _agree(a, b):
    # argmin kernels return (value, witness, ...) tuples; witnesses may differ
    # between the two variants when several patterns tie, so compare values only
    if isinstance(a, tuple):
        a, b = a[0::2], b[0::2]
    else:
        a, b = (a,), (b,)
    return all(np.allclose(np.asarray(x), np.asarray(y), atol=1e-8) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels.nb_census is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':34s} {'first nb':>10s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}  agree")
    for name, nb_fn, np_fn, fargs in _cases():
        t0 = time.perf_counter()
        nb_fn(*fargs)
        first = time.perf_counter() - t0
        t_nb, r_nb = _time(nb_fn, fargs, args.repeat)
        t_np, r_np = _time(np_fn, fargs, args.repeat)
        print(f"{name:34s} {first:10.4f} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {_agree(r_nb, r_np)}")


if __name__ == "__main__":
    main()
