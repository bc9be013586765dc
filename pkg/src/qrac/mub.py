"""Complete sets of mutually unbiased bases in prime-power dimension.

For q = p^k the displacement operators ``D(a, b) = X(a) Z(b)`` with
``X(a)|x> = |x + a>`` and ``Z(b)|x> = w^tr(b x) |x>`` (w = exp(2 pi i / p))
fall into q + 1 commuting classes, one per line through the origin of
GF(q)^2.  The joint eigenbasis of each class is one basis of the set.
"""
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .bloch import read_matrix, write_matrix
from .errors import InvalidDimensionError
from .field import field_of_order, prime_power

MAX_DIM = 64
CLUSTER_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BasisSet:
    """``vectors[h, k]`` is the k-th unit vector of basis h."""

    dim: int
    vectors: np.ndarray

    def __len__(self):
        return self.vectors.shape[0]

    def unitary(self, h):
        """Basis h as a unitary whose columns are the basis vectors."""
        return self.vectors[h].T

    def projectors(self, h):
        v = self.vectors[h]
        return np.einsum("ki,kj->kij", v, v.conj())

    def transformed(self, U):
        """The same set after applying the unitary ``U`` to every vector."""
        return BasisSet(self.dim, np.einsum("ij,hkj->hki", U, self.vectors))


@dataclass(frozen=True)
class MubReport:
    ok: bool
    worst_deviation: float


def commuting_classes(q):
    """The q + 1 lines of GF(q)^2 as lists of nonzero ``(a, b)`` pairs.

    Class 0 is ``{(0, b)}`` (diagonal operators, the computational basis);
    class ``1 + lam`` is ``{(a, lam * a)}`` for ``lam`` in canonical order.
    """
    F = field_of_order(q)
    classes = [[(0, b) for b in range(1, q)]]
    for lam in range(q):
        classes.append([(a, F.mul(lam, a)) for a in range(1, q)])
    return classes


def displacement(q, a, b):
    F = field_of_order(q)
    omega = np.exp(2j * np.pi / F.p)
    D = np.zeros((q, q), dtype=np.complex128)
    for x in range(q):
        D[F.add(x, a), x] = omega ** F.trace_to_prime(F.mul(b, x))
    return D


def _refine(V, H, tol):
    # Split the columns of isometry V by the eigenvalues of V^dag H V.
    A = V.conj().T @ H @ V
    A = 0.5 * (A + A.conj().T)
    w, U = np.linalg.eigh(A)
    W = V @ U
    out = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            out.append(W[:, start:i])
            start = i
    return out


def joint_eigenbasis(ops, tol=CLUSTER_TOL):
    """Common eigenvectors of commuting normal matrices, as matrix columns."""
    dim = ops[0].shape[0]
    blocks = [np.eye(dim, dtype=np.complex128)]
    for D in ops:
        herm = 0.5 * (D + D.conj().T)
        anti = -0.5j * (D - D.conj().T)
        refined = []
        for V in blocks:
            if V.shape[1] == 1:
                refined.append(V)
                continue
            for W in _refine(V, herm, tol):
                refined.extend(_refine(W, anti, tol) if W.shape[1] > 1 else [W])
        blocks = refined
        if all(V.shape[1] == 1 for V in blocks):
            break
    if not all(V.shape[1] == 1 for V in blocks):
        raise ArithmeticError("operators do not determine a unique joint eigenbasis")
    return np.hstack(blocks)


def canonical_vectors(U):
    """Rows = columns of U, phase-fixed and sorted deterministically."""
    vecs = []
    for v in U.T:
        nz = np.flatnonzero(np.abs(v) > 1e-8)[0]
        v = v * (abs(v[nz]) / v[nz])
        vecs.append(v)

    def key(v):
        nz = int(np.flatnonzero(np.abs(v) > 1e-8)[0])
        parts = np.round(np.column_stack([v.real, v.imag]).ravel(), 9) + 0.0
        return (nz, tuple(-parts))

    vecs.sort(key=key)
    return np.array(vecs)


@lru_cache(maxsize=16)
def _mub(q):
    classes = commuting_classes(q)
    out = np.empty((q + 1, q, q), dtype=np.complex128)
    out[0] = np.eye(q)
    for h, cls in enumerate(classes[1:], start=1):
        ops = [displacement(q, a, b) for a, b in cls]
        out[h] = canonical_vectors(joint_eigenbasis(ops))
    out.setflags(write=False)
    return out


def mub_construct(q):
    """q + 1 mutually unbiased bases of C^q; basis 0 is the standard basis."""
    if prime_power(q) is None:
        raise InvalidDimensionError(f"no MUB construction for non-prime-power dimension {q!r}")
    if q > MAX_DIM:
        raise InvalidDimensionError(f"dimension {q} exceeds the supported maximum {MAX_DIM}")
    return BasisSet(int(q), _mub(int(q)))


def verify_mub(bs, tol=1e-10):
    V = np.asarray(bs.vectors)
    q = bs.dim
    worst = 0.0
    for h in range(len(V)):
        gram = V[h].conj() @ V[h].T
        worst = max(worst, float(np.abs(gram - np.eye(V.shape[1])).max()))
    for h in range(len(V)):
        for g in range(h + 1, len(V)):
            ov = np.abs(V[h].conj() @ V[g].T) ** 2
            worst = max(worst, float(np.abs(ov - 1.0 / q).max()))
    return MubReport(worst <= tol, worst)


def _pauli_index(F, a, b):
    # D(a, b) on qubits: x-part from the bits of a, z-part from tr(b * 2^i).
    k = 0
    for i in range(F.k):
        xb = (a >> i) & 1
        zb = F.trace_to_prime(F.mul(b, 1 << i))
        digit = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)]
        k += digit * 4 ** i
    return k


@lru_cache(maxsize=8)
def pauli_partition(m):
    """Tensor-Pauli generator indices grouped by the MUB that diagonalizes them.

    Class h lists the ``2^m - 1`` generators diagonal in basis h of
    ``mub_construct(2**m)``.
    """
    if int(m) != m or not 1 <= m <= 6:
        raise InvalidDimensionError("pauli_partition supports 1 <= m <= 6")
    q = 2 ** int(m)
    F = field_of_order(q)
    return tuple(tuple(sorted(_pauli_index(F, a, b) for a, b in cls)) for cls in commuting_classes(q))


def export_bases(bs, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for h in range(len(bs)):
        path = directory / f"basis_{h:03d}.txt"
        write_matrix(path, bs.unitary(h))
        paths.append(path)
    return paths


def import_bases(directory):
    paths = sorted(Path(directory).glob("basis_*.txt"))
    vectors = np.array([read_matrix(p).T for p in paths])
    return BasisSet(vectors.shape[1], vectors)
