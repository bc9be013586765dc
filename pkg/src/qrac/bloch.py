"""Hermitian matrix algebra and Bloch-vector coordinates for N-level systems.

Every operator in the toolkit is a dense ``complex128`` numpy array.  A state
with Bloch vector ``alpha`` in a trace-orthogonal basis ``sigma_k``
(``Tr(sigma_k sigma_k') = 2 delta_kk'``) is

    rho = 1/N + 1/2 * sum_k alpha_k sigma_k.
"""
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _config, _kernels
from .errors import InvalidDimensionError, InvalidInputError

HERMITIAN_TOL = 1e-10
EQUALITY_TOL = 1e-12
PSD_SLACK = 1e-9

# Single-qubit Paulis indexed by the base-4 digit: 0 -> 1, 1 -> x, 2 -> y, 3 -> z.
PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Ordered traceless Hermitian generators with ``Tr(s_k s_k') = 2 delta``."""

    dim: int
    generators: np.ndarray
    kind: str
    indices: tuple = ()

    def __len__(self):
        return self.generators.shape[0]


def _check_dim(N):
    if int(N) != N or N < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {N!r}")
    return int(N)


@lru_cache(maxsize=32)
def gell_mann_basis(N):
    """Generalized Gell-Mann matrices: symmetric, antisymmetric, then diagonal."""
    N = _check_dim(N)
    gens = []
    pairs = [(j, k) for j in range(N) for k in range(j + 1, N)]
    for j, k in pairs:
        g = np.zeros((N, N), dtype=np.complex128)
        g[j, k] = g[k, j] = 1.0
        gens.append(g)
    for j, k in pairs:
        g = np.zeros((N, N), dtype=np.complex128)
        g[j, k] = -1j
        g[k, j] = 1j
        gens.append(g)
    for l in range(1, N):
        diag = np.zeros(N)
        diag[:l] = 1.0
        diag[l] = -l
        gens.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(np.complex128))
    out = np.array(gens)
    out.setflags(write=False)
    return OperatorBasis(N, out, "gell_mann", tuple(range(1, N * N)))


def base4_digits(k, m):
    """Digits ``c_1..c_m`` of ``k`` in base 4, least significant first."""
    return [(k >> (2 * i)) & 3 for i in range(m)]


def pauli_string(k, m, normalized=False):
    """Tensor-Pauli operator with index ``k``.

    The rightmost tensor factor carries the least significant base-4 digit,
    so for m=2, k=1 gives ``1 (x) sigma_x``.
    """
    if not 0 <= k < 4 ** m:
        raise InvalidInputError(f"pauli index {k} out of range for m={m}")
    out = np.ones((1, 1), dtype=np.complex128)
    for c in reversed(base4_digits(k, m)):
        out = np.kron(out, PAULI[c])
    if normalized:
        out = out * 2.0 ** ((1 - m) / 2)
    return out


@lru_cache(maxsize=16)
def _pauli_stack(m, normalized):
    out = np.array([pauli_string(k, m, normalized) for k in range(1, 4 ** m)])
    out.setflags(write=False)
    return out


def pauli_stack(m, normalized=False):
    """All ``4^m - 1`` non-identity tensor Paulis, stacked by index (k=1 first)."""
    return _pauli_stack(int(m), bool(normalized))


@lru_cache(maxsize=16)
def tensor_pauli_basis(m):
    """Normalized tensor-Pauli generators ``2^((1-m)/2) sigma_c(m) x ... x sigma_c(1)``."""
    if int(m) != m or m < 1:
        raise InvalidDimensionError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    return OperatorBasis(2 ** m, pauli_stack(m, True), "tensor_pauli", tuple(range(1, 4 ** m)))


@lru_cache(maxsize=16)
def diagonal_subbasis(m):
    """The ``2^m - 1`` diagonal members of :func:`tensor_pauli_basis`."""
    full = tensor_pauli_basis(m)
    keep = [i for i, k in enumerate(full.indices) if all(c in (0, 3) for c in base4_digits(k, m))]
    gens = full.generators[keep]
    return OperatorBasis(full.dim, gens, "diagonal_subset", tuple(full.indices[i] for i in keep))


def default_basis(N):
    """Tensor-Pauli basis when N is a power of two, Gell-Mann otherwise."""
    N = _check_dim(N)
    m = N.bit_length() - 1
    if 1 << m == N:
        return tensor_pauli_basis(m)
    return gell_mann_basis(N)


def bloch_to_density(alpha, basis):
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (len(basis),):
        raise InvalidInputError(f"Bloch vector of length {alpha.shape} does not match basis of size {len(basis)}")
    N = basis.dim
    return np.eye(N, dtype=np.complex128) / N + 0.5 * np.tensordot(alpha, basis.generators, axes=1)


def is_hermitian(M, tol=HERMITIAN_TOL):
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and np.allclose(M, M.conj().T, atol=tol, rtol=0)


def density_to_bloch(rho, basis):
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (basis.dim, basis.dim):
        raise InvalidInputError(f"matrix of shape {rho.shape} does not match basis dimension {basis.dim}")
    if not is_hermitian(rho):
        raise InvalidInputError("density_to_bloch needs a Hermitian matrix")
    if abs(np.trace(rho) - 1.0) > HERMITIAN_TOL:
        raise InvalidInputError("density_to_bloch needs a unit-trace matrix")
    return operator_components(rho, basis)


def operator_components(M, basis):
    """Components ``Tr(M sigma_k)`` without any validity checks."""
    return np.real(np.einsum("kij,ji->k", basis.generators, np.asarray(M)))


def overlap(alpha, beta, N):
    """``Tr(rho_alpha rho_beta) = 1/N + alpha.beta / 2``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != beta.shape or alpha.shape != (N * N - 1,):
        raise InvalidInputError("Bloch vectors must both have length N^2 - 1")
    return 1.0 / N + 0.5 * float(alpha @ beta)


def outsphere_radius(N):
    return np.sqrt(2.0 * (N - 1) / N)


def insphere_radius(N):
    return np.sqrt(2.0 / (N * (N - 1)))


def bloch_length_from_spectrum(eigenvalues, N=None):
    p = np.asarray(eigenvalues, dtype=np.float64)
    if N is None:
        N = p.size
    if abs(p.sum() - 1.0) > HERMITIAN_TOL:
        raise InvalidInputError(f"spectrum sums to {p.sum()!r}, not 1")
    if p.min() < -EQUALITY_TOL:
        raise InvalidInputError("spectrum has negative entries")
    return float(np.sqrt(max(0.0, 2.0 * (-1.0 / N + float(p @ p)))))


def hermitian_eigenvalues(M):
    """Ascending real spectrum of a Hermitian matrix (cyclic Jacobi sweeps)."""
    M = np.asarray(M, dtype=np.complex128)
    if not is_hermitian(M):
        raise InvalidInputError("hermitian_eigenvalues needs a Hermitian matrix")
    if _config.USE_NUMBA and M.shape[0] <= 64:
        return _kernels.jacobi_eigvalsh(M)
    return np.linalg.eigvalsh(M)


def is_valid_density(M, tol=PSD_SLACK):
    try:
        M = np.asarray(M, dtype=np.complex128)
    except (TypeError, ValueError):
        return False
    if not is_hermitian(M, max(tol, HERMITIAN_TOL)):
        return False
    if abs(np.trace(M).real - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(M)[0] >= -tol)


# -- matrix dump format -------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def dump_matrix(M):
    """Text dump: ``N`` on the first line, then N rows of ``re im;`` entries."""
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError("only square matrices can be dumped")
    lines = [str(M.shape[0])]
    for row in M:
        lines.append(" ".join(f"{_fmt(z.real)} {_fmt(z.imag)};" for z in row))
    return "\n".join(lines) + "\n"


def load_matrix(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInputError("empty matrix dump")
    N = int(lines[0])
    if len(lines) != N + 1:
        raise InvalidInputError(f"expected {N} rows, found {len(lines) - 1}")
    out = np.empty((N, N), dtype=np.complex128)
    for r, line in enumerate(lines[1:]):
        entries = [e.split() for e in line.split(";") if e.strip()]
        if len(entries) != N:
            raise InvalidInputError(f"row {r} has {len(entries)} entries, expected {N}")
        for c, (re, im) in enumerate(entries):
            out[r, c] = complex(float(re), float(im))
    return out


def write_matrix(path, M):
    Path(path).write_text(dump_matrix(M))


def read_matrix(path):
    return load_matrix(Path(path).read_text())
