"""Assembly of complete (Q)RACs: measurements plus encoding scheme.

Every code stores, for each measured slot i, a POVM ``F_i0 .. F_i(d-1)``.
Encodings are affine in the per-slot terms

    t_ij = F_ij / Tr(F_ij) - 1/N,       rho_a = 1/N + (K/n) sum_i t_(i, a_i),

so ``K = 1`` is the uniform mixture of the normalized measurement operators,
and other schemes differ only in the scale ``K``.  Input strings are digit
lists ``[c_1, ..., c_n]``; as integers, ``c_1`` is the least significant
base-d digit.
"""
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .bloch import (
    default_basis,
    insphere_radius,
    is_hermitian,
    operator_components,
    read_matrix,
    write_matrix,
)
from .errors import InvalidDimensionError, InvalidInputError, InvalidScaleError
from .field import prime_power
from .mub import MAX_DIM as MUB_MAX_DIM
from .mub import BasisSet, mub_construct
from .orthoarray import oa_construct

SCHEMA_VERSION = 1
COMPLETENESS_TOL = 1e-10
PVM_TOL = 1e-8
STATE_TOL = 1e-9

STYLES = ("uniform_mixture", "insphere", "scaled")


def max_quantum_n(d, m):
    return (d ** (2 * m) - 1) // (d - 1)


def max_classical_n(d, m):
    return (d ** m - 1) // (d - 1)


@dataclass(frozen=True)
class CodeParams:
    d: int
    m: int
    n: int
    kind: str = "quantum"

    def __post_init__(self):
        if self.kind not in ("quantum", "classical"):
            raise InvalidInputError(f"kind must be 'quantum' or 'classical', got {self.kind!r}")
        if self.d < 2 or self.m < 1:
            raise InvalidDimensionError(f"need d >= 2 and m >= 1, got d={self.d}, m={self.m}")
        limit = max_quantum_n(self.d, self.m) if self.kind == "quantum" else max_classical_n(self.d, self.m)
        if not 1 <= self.n <= limit:
            raise InvalidDimensionError(f"n={self.n} outside 1..{limit} for a {self.kind} code with d={self.d}, m={self.m}")

    @property
    def N(self):
        return self.d ** self.m


@dataclass(frozen=True, eq=False)
class Measurement:
    operators: np.ndarray
    basis_index: int = None
    generator_index: int = None

    @property
    def d(self):
        return self.operators.shape[0]

    @property
    def dim(self):
        return self.operators.shape[1]

    @cached_property
    def is_pvm(self):
        ev = np.linalg.eigvalsh(self.operators)
        return bool(np.all(np.minimum(np.abs(ev), np.abs(ev - 1.0)) <= PVM_TOL))

    @cached_property
    def bloch(self):
        """Bloch vectors of ``F_j / Tr(F_j)`` in :func:`default_basis`."""
        basis = default_basis(self.dim)
        return np.array([operator_components(F / np.trace(F).real, basis) for F in self.operators])

    def completeness_error(self):
        return float(np.abs(self.operators.sum(axis=0) - np.eye(self.dim)).max())


@dataclass(frozen=True)
class EncodingScheme:
    style: str
    K: float
    boost_even_parity: bool = False

    def __post_init__(self):
        if self.style not in STYLES:
            raise InvalidInputError(f"unknown encoding style {self.style!r}")


@dataclass(frozen=True, eq=False)
class QracCode:
    params: CodeParams
    measurements: tuple
    scheme: EncodingScheme
    subset: tuple = ()
    method: str = "custom"
    blocks: tuple = field(default=())

    @property
    def d(self):
        return self.params.d

    @property
    def m(self):
        return self.params.m

    @property
    def n(self):
        return self.params.n

    @property
    def N(self):
        return self.params.N

    @cached_property
    def operator_stack(self):
        """``(n, d, N, N)`` array of every measurement operator."""
        return np.array([meas.operators for meas in self.measurements])

    @cached_property
    def terms(self):
        """Traceless per-slot terms ``t_ij`` flattened to ``(n, d, N*N)``."""
        ops = self.operator_stack
        tr = np.einsum("ijkk->ij", ops).real
        t = ops / tr[:, :, None, None] - np.eye(self.N)[None, None] / self.N
        return t.reshape(self.n, self.d, self.N * self.N)

    def digits(self, a):
        return input_digits(a, self.d, self.n)

    def encode(self, a, check=True):
        """Encoding density matrix for one input string."""
        rho = self.encode_batch(np.asarray(self.digits(a))[None, :])[0]
        if check:
            ev = np.linalg.eigvalsh(rho)
            if ev[0] < -STATE_TOL:
                raise InvalidScaleError(
                    f"scale K={self.scheme.K:.6g} gives a state with eigenvalue {ev[0]:.3e} for input {list(self.digits(a))}"
                )
        return rho

    def encode_batch(self, A):
        """States for a ``(B, n)`` digit array, shape ``(B, N, N)``."""
        A = np.asarray(A, dtype=np.int64)
        if A.ndim != 2 or A.shape[1] != self.n:
            raise InvalidInputError(f"expected digit array of shape (B, {self.n}), got {A.shape}")
        if A.size and (A.min() < 0 or A.max() >= self.d):
            raise InvalidInputError(f"digits must lie in [0, {self.d})")
        if self.blocks:
            return self._encode_composite(A)
        N = self.N
        S = np.zeros((A.shape[0], N * N), dtype=np.complex128)
        for i in range(self.n):
            S += self.terms[i, A[:, i]]
        S = S.reshape(-1, N, N)
        K = np.full(A.shape[0], float(self.scheme.K))
        if self.scheme.boost_even_parity:
            even = A.sum(axis=1) % 2 == 0
            if even.any():
                mu = np.linalg.eigvalsh(S[even])[:, 0]
                K[even] = self.n / (N * -mu)
        return np.eye(N)[None] / N + (K / self.n)[:, None, None] * S

    def _encode_composite(self, A):
        out = None
        start = 0
        for block in self.blocks:
            part = block.encode_batch(A[:, start:start + block.n])
            start += block.n
            if out is None:
                out = part
            else:
                b, p, q = out.shape[0], out.shape[1], part.shape[1]
                out = np.einsum("bij,bkl->bikjl", out, part).reshape(b, p * q, p * q)
        return out

    def with_scheme(self, scheme):
        if self.blocks:
            raise InvalidInputError("composite codes take their encoding from their blocks")
        return replace(self, scheme=scheme)


def input_digits(a, d, n):
    """Digit list ``[c_1, ..., c_n]`` for an int or a digit sequence."""
    if isinstance(a, (int, np.integer)):
        if not 0 <= a < d ** n:
            raise InvalidInputError(f"input {a} outside [0, {d}^{n})")
        return [(int(a) // d ** i) % d for i in range(n)]
    digits = [int(x) for x in a]
    if len(digits) != n:
        raise InvalidInputError(f"expected {n} digits, got {len(digits)}")
    if any(not 0 <= x < d for x in digits):
        raise InvalidInputError(f"digits must lie in [0, {d})")
    return digits


def all_inputs(d, n):
    """Every input as a ``(d^n, n)`` digit array, ordered by integer value."""
    idx = np.arange(d ** n, dtype=np.int64)
    return (idx[:, None] // d ** np.arange(n, dtype=np.int64)[None, :]) % d


def predicted_p(params):
    """Worst-case success probability of the default constructions."""
    d, m, n = params.d, params.m, params.n
    if n >= (d - 1) * (d ** m - 1):
        return (1.0 + np.sqrt((d - 1) / (n * (d ** m - 1)))) / d
    return (1.0 + (d - 1) / n) / d


def p_from_scale(d, n, K):
    return (1.0 + K * (d - 1) / n) / d


# -- measurement families -----------------------------------------------------


def _pauli_index_of(A, m):
    # A = +-P_k for a tensor Pauli P_k.  Row r has its entry in column r ^ x,
    # and flipping bit i of r flips the sign exactly when qubit i carries z.
    x = int(np.flatnonzero(np.abs(A[0]) > 0.5)[0])
    v0 = A[0, x]
    k = 0
    for i in range(m):
        r = 1 << i
        xb = (x >> i) & 1
        zb = int(np.real(A[r, r ^ x] / v0) < 0)
        k += {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(xb, zb)] * 4 ** i
    return k


def improved_family(d, m, bases=None):
    """All ``(d^m + 1)(d^m - 1)/(d - 1)`` mutually unbiased PVMs, basis-major.

    Slot ``s`` uses basis ``s // R`` and orthogonal-array row ``s % R`` with
    ``R = (d^m - 1)/(d - 1)``.
    """
    if prime_power(d) is None:
        raise InvalidDimensionError(f"the MUB/orthogonal-array construction needs prime-power d, got {d}")
    N = d ** m
    if bases is None:
        if N > MUB_MAX_DIM:
            raise InvalidDimensionError(f"d^m = {N} exceeds the MUB limit {MUB_MAX_DIM}")
        bases = mub_construct(N)
    elif not isinstance(bases, BasisSet) or bases.dim != N or len(bases) != N + 1:
        raise InvalidInputError(f"substituted bases must be a full BasisSet of dimension {N}")
    M = oa_construct(d, m)
    out = []
    for h in range(N + 1):
        projs = bases.projectors(h)
        for row in M:
            ops = np.array([projs[row == j].sum(axis=0) for j in range(d)])
            gen = _pauli_index_of(ops[0] - ops[1], m) if d == 2 else None
            out.append(Measurement(ops, basis_index=h, generator_index=gen))
    return out


def _resolve_scheme(scheme, code_K_insphere, n, default):
    if scheme is None:
        scheme = default
    if isinstance(scheme, EncodingScheme):
        return scheme
    if isinstance(scheme, tuple):
        style, K = scheme
        if style != "scaled":
            raise InvalidInputError("only the 'scaled' style takes an explicit K")
        return EncodingScheme("scaled", float(K))
    style = {"uniform": "uniform_mixture"}.get(scheme, scheme)
    if style == "uniform_mixture":
        return EncodingScheme(style, 1.0)
    if style == "insphere":
        return EncodingScheme(style, float(code_K_insphere))
    raise InvalidInputError(f"unknown encoding scheme {scheme!r}")


def insphere_scale(d, m, n, bloch_norm):
    """K that puts every uniform-mixture Bloch vector on the insphere."""
    return np.sqrt(n) * insphere_radius(d ** m) / bloch_norm


def build_improved_qrac(params, subset=None, scheme=None, bases=None):
    """PVMs from MUB + orthogonal arrays; default encoding per the ratio rule."""
    if params.kind != "quantum":
        raise InvalidInputError("build_improved_qrac builds quantum codes; use build_classical_rac")
    d, m, n = params.d, params.m, params.n
    family = improved_family(d, m, bases)
    subset = _check_subset(subset, n, len(family))
    meas = tuple(family[s] for s in subset)
    pvm_norm = np.sqrt(2.0 * (d - 1) / d ** m)
    default = "insphere" if n >= (d - 1) * (d ** m - 1) else "uniform_mixture"
    sch = _resolve_scheme(scheme, insphere_scale(d, m, n, pvm_norm), n, default)
    return QracCode(params, meas, sch, subset, "improved")


def _check_subset(subset, n, available):
    if subset is None:
        subset = tuple(range(n))
    subset = tuple(int(s) for s in subset)
    if len(subset) != n:
        raise InvalidInputError(f"subset has {len(subset)} entries, expected n={n}")
    if len(set(subset)) != n:
        raise InvalidInputError("subset entries must be distinct")
    if any(not 0 <= s < available for s in subset):
        raise InvalidInputError(f"subset entries must lie in [0, {available})")
    return subset


def build_classical_rac(params, boost_even_parity=False):
    """Diagonal RAC from the orthogonal-array PVMs in the standard basis."""
    if params.kind != "classical":
        raise InvalidInputError("build_classical_rac needs kind='classical'")
    d, m, n = params.d, params.m, params.n
    if prime_power(d) is None:
        raise InvalidDimensionError(f"classical RACs need prime-power d, got {d}")
    if boost_even_parity and (d, m, n) != (2, 2, 3):
        raise InvalidInputError("boost_even_parity is only defined for the (3, 2) classical RAC")
    M = oa_construct(d, m)
    meas = []
    for r in range(n):
        ops = np.array([np.diag((M[r] == j).astype(np.complex128)) for j in range(d)])
        gen = _pauli_index_of(ops[0] - ops[1], m) if d == 2 else None
        meas.append(Measurement(ops, basis_index=0, generator_index=gen))
    scheme = EncodingScheme("uniform_mixture", 1.0, boost_even_parity)
    return QracCode(params, tuple(meas), scheme, tuple(range(n)), "classical")


def simplex_frame(d):
    """``d`` unit vectors in R^(d-1) with pairwise cosine ``-1/(d-1)``."""
    centered = np.eye(d) - 1.0 / d
    # orthonormal basis of the sum-zero subspace (Helmert-like via QR)
    q, _ = np.linalg.qr(centered[:, : d - 1])
    coords = centered @ q
    return coords / np.linalg.norm(coords, axis=1, keepdims=True)


def build_insphere_qrac(params, subset=None):
    """POVMs ``F_ij = d^(m-1) rho(alpha_ij)`` with simplex vertices on the insphere."""
    if params.kind != "quantum":
        raise InvalidInputError("build_insphere_qrac builds quantum codes")
    d, m, n = params.d, params.m, params.n
    N = d ** m
    r_in = insphere_radius(N)
    eye = np.eye(N) / N
    meas = []
    if prime_power(d) is not None and N <= MUB_MAX_DIM:
        family = improved_family(d, m)
        subset = _check_subset(subset, n, len(family))
        pvm_norm = np.sqrt(2.0 * (d - 1) / N)
        for s in subset:
            pvm = family[s]
            t = pvm.operators / d ** (m - 1) - eye[None]
            ops = d ** (m - 1) * (eye[None] + (r_in / pvm_norm) * t)
            meas.append(Measurement(ops, basis_index=pvm.basis_index, generator_index=pvm.generator_index))
    else:
        basis = default_basis(N)
        subset = _check_subset(subset, n, max_quantum_n(d, m))
        frame = simplex_frame(d)
        for s in subset:
            gens = basis.generators[(d - 1) * s:(d - 1) * (s + 1)]
            ops = []
            for j in range(d):
                alpha_dir = np.tensordot(frame[j], gens, axes=1)
                ops.append(d ** (m - 1) * (eye + 0.5 * r_in * alpha_dir))
            meas.append(Measurement(np.array(ops)))
    scheme = EncodingScheme("insphere", float(np.sqrt(n)))
    return QracCode(params, tuple(meas), scheme, subset, "insphere")


def composite_qrac(codes):
    """Tensor-product carrier built from independent codes of equal d."""
    codes = list(codes)
    if not codes:
        raise InvalidInputError("composite_qrac needs at least one code")
    if len(codes) == 1:
        return codes[0]
    d = codes[0].d
    if any(c.d != d for c in codes):
        raise InvalidInputError("all blocks of a composite code must share d")
    if any(c.params.kind != "quantum" for c in codes):
        raise InvalidInputError("composite codes are built from quantum codes")
    m = sum(c.m for c in codes)
    n = sum(c.n for c in codes)
    dims = [c.N for c in codes]
    meas = []
    for b, code in enumerate(codes):
        left = int(np.prod(dims[:b], dtype=np.int64))
        right = int(np.prod(dims[b + 1:], dtype=np.int64))
        for mm in code.measurements:
            ops = np.array([np.kron(np.kron(np.eye(left), F), np.eye(right)) for F in mm.operators])
            meas.append(Measurement(ops))
    params = CodeParams(d, m, n, "quantum")
    scheme = EncodingScheme("scaled", float("nan"))
    return QracCode(params, tuple(meas), scheme, tuple(range(n)), "composite", tuple(codes))


# -- sanity checks ---------------------------------------------------------------


def check_measurements(code, tol=COMPLETENESS_TOL):
    """Worst completeness error and whether every operator is Hermitian PSD."""
    worst = 0.0
    psd = True
    for mm in code.measurements:
        worst = max(worst, mm.completeness_error())
        for F in mm.operators:
            if not is_hermitian(F) or np.linalg.eigvalsh(F)[0] < -tol:
                psd = False
    return worst, psd


def mupvm_trace_deviation(code):
    """Max ``|Tr(pi_ij pi_i'j') - d^(m-2)|`` over pairs of distinct slots."""
    ops = code.operator_stack
    n, d = ops.shape[:2]
    flat = ops.reshape(n * d, -1)
    gram = np.real(flat.conj() @ flat.T).reshape(n, d, n, d)
    mask = ~np.eye(n, dtype=bool)
    target = float(code.d) ** (code.m - 2)
    dev = np.abs(gram - target).transpose(0, 2, 1, 3)[mask]
    return float(dev.max()) if dev.size else 0.0


# -- serialization -----------------------------------------------------------------


def save_code(code, directory):
    """Manifest plus one matrix dump per operator; composite blocks nest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "d": code.d,
        "m": code.m,
        "n": code.n,
        "kind": code.params.kind,
        "method": code.method,
        "scheme": {
            "style": code.scheme.style,
            "K": None if np.isnan(code.scheme.K) else code.scheme.K,
            "boost_even_parity": code.scheme.boost_even_parity,
        },
        "subset": list(code.subset),
        "basis_index": [mm.basis_index for mm in code.measurements],
        "generator_index": [mm.generator_index for mm in code.measurements],
        "blocks": [],
    }
    if code.blocks:
        for b, block in enumerate(code.blocks):
            name = f"block_{b:02d}"
            save_code(block, directory / name)
            manifest["blocks"].append(name)
    else:
        opdir = directory / "operators"
        opdir.mkdir(exist_ok=True)
        for i, mm in enumerate(code.measurements):
            for j, F in enumerate(mm.operators):
                write_matrix(opdir / f"slot{i:04d}_out{j:02d}.txt", F)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory / "manifest.json"


def load_code(directory):
    directory = Path(directory)
    if directory.is_file():
        directory = directory.parent
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise InvalidInputError(f"unsupported code schema version {manifest.get('schema_version')!r}")
    if manifest["blocks"]:
        return composite_qrac([load_code(directory / name) for name in manifest["blocks"]])
    params = CodeParams(manifest["d"], manifest["m"], manifest["n"], manifest["kind"])
    opdir = directory / "operators"
    meas = []
    for i in range(params.n):
        ops = np.array([read_matrix(opdir / f"slot{i:04d}_out{j:02d}.txt") for j in range(params.d)])
        meas.append(Measurement(ops, manifest["basis_index"][i], manifest["generator_index"][i]))
    sch = manifest["scheme"]
    scheme = EncodingScheme(sch["style"], float(sch["K"]), bool(sch["boost_even_parity"]))
    return QracCode(params, tuple(meas), scheme, tuple(manifest["subset"]), manifest["method"])


def relabel_outcomes(code, slot, perm):
    """Same code with the outcome labels of ``slot`` permuted: new j is old ``perm[j]``."""
    perm = [int(x) for x in perm]
    if sorted(perm) != list(range(code.d)):
        raise InvalidInputError(f"{perm} is not a permutation of 0..{code.d - 1}")
    if code.blocks:
        raise InvalidInputError("relabel the blocks of a composite code instead")
    meas = list(code.measurements)
    old = meas[slot]
    meas[slot] = Measurement(old.operators[perm], old.basis_index, old.generator_index)
    return replace(code, measurements=tuple(meas))
