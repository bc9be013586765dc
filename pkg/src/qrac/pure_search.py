"""Stochastic search for pure-state (n, 2, p) QRACs on two qubits.

Each slot j owns an orthonormal basis of C^4 whose first two vectors span the
outcome-0 plane and last two the outcome-1 plane.  Input a is encoded in a
unit vector psi_a, and slot j is decoded correctly with probability equal to
the squared projection of psi_a onto the plane of bit a_j.

The search draws bases (rejecting badly biased pairs), finds a good state for
every input by random sampling followed by a hill-climbing random walk, then
nudges the bases with small unitaries and keeps changes that raise the worst
case.
"""
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .bloch import read_matrix, write_matrix
from .codes import all_inputs
from .errors import InvalidDimensionError

DIM = 4
DRAW_CHUNK = 1000


@dataclass(frozen=True)
class SearchConfig:
    num_bases: int = 6
    num_state_draws: int = 4000
    walk_steps: int = 1500
    walk_scale: float = 0.05
    walk_anneal: float = 0.9
    walk_every: int = 100
    basis_rounds: int = 30
    basis_walk_steps: int = 400
    basis_perturb_scale: float = 0.02
    unbias_threshold: float = 0.15
    max_basis_attempts: int = 500
    seed: int = 0
    time_budget: float = 600.0


@dataclass(frozen=True, eq=False)
class PureQrac:
    n: int
    bases: np.ndarray
    states: np.ndarray
    worst_p: float
    avg_p: float
    uncovered: tuple = ()
    budget_exhausted: bool = False
    config: SearchConfig = field(default_factory=SearchConfig)

    @property
    def complete(self):
        return not self.uncovered

    def table(self):
        return success_table(self.bases, self.states)


def _rng(*key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def random_basis(seed=0):
    """Haar-random unitary of C^4 with the basis vectors as columns.

    QR of a complex Gaussian matrix, with R's diagonal made positive so the
    factorization (and hence the distribution) is unique.
    """
    rng = seed if isinstance(seed, np.random.Generator) else _rng(seed)
    Z = rng.standard_normal((DIM, DIM)) + 1j * rng.standard_normal((DIM, DIM))
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph[None, :]


def plane_cosines(b1, b2):
    """Squared principal cosines between the outcome-0 planes of two bases, ascending."""
    s = np.linalg.svd(b1[:, :2].conj().T @ b2[:, :2], compute_uv=False)
    return np.sort(s ** 2)


def plane_unbiasedness(b1, b2):
    """Smallest squared principal cosine between the outcome-0 planes.

    Identical splits score 1, mutually unbiased splits score 1/2 and
    orthogonal planes score 0.  In C^4 the outcome-1 planes are the orthogonal
    complements and share the same principal angles, so one pair suffices.
    """
    return float(plane_cosines(b1, b2)[0])


def _bias_gap(b, chosen):
    return max((abs(plane_unbiasedness(b, c) - 0.5) for c in chosen), default=0.0)


def draw_bases(n, rng, threshold, max_attempts):
    """n bases, each added only if its score against every earlier basis is within ``1/2 +- threshold``.

    After ``max_attempts`` rejections the least biased candidate seen is taken.
    """
    chosen = []
    for _ in range(n):
        best, best_gap = None, np.inf
        for _ in range(max_attempts):
            b = random_basis(rng)
            gap = _bias_gap(b, chosen)
            if gap <= threshold:
                best = b
                break
            if gap < best_gap:
                best, best_gap = b, gap
        chosen.append(best)
    return np.array(chosen)


def success_table(bases, states):
    """``(2^n, n)`` correct-plane probabilities, recomputed from scratch."""
    n = bases.shape[0]
    A = all_inputs(2, n)
    amp = np.einsum("jrc,ar->ajc", bases.conj(), states)  # (2^n, n, 4)
    prob = np.abs(amp) ** 2
    p0 = prob[:, :, :2].sum(axis=2)
    return np.where(A == 0, p0, 1.0 - p0)


def _state_objective(bases, bits, psi):
    # psi: (S, 4); bits: (n,) -> (S,) min over slots
    n = bases.shape[0]
    cols = 2 * bits[:, None] + np.arange(2)[None, :]
    planes = bases[np.arange(n)[:, None], :, cols]  # (n, 2, 4)
    amp = np.einsum("jcr,sr->sjc", planes.conj(), psi)
    return (np.abs(amp) ** 2).sum(axis=2).min(axis=1)


def _best_draws(bases, bits, draws, rng):
    best_val, best_psi = -np.inf, None
    for s in range(0, draws, DRAW_CHUNK):
        k = min(DRAW_CHUNK, draws - s)
        psi = rng.standard_normal((k, DIM)) + 1j * rng.standard_normal((k, DIM))
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        val = _state_objective(bases, bits, psi)
        i = int(np.argmax(val))
        if val[i] > best_val:
            best_val, best_psi = float(val[i]), psi[i]
    return best_psi


def _walk(bases, A, psi0, cfg, steps, key):
    # per-input noise streams keep results independent of batching
    S = A.shape[0]
    noise = np.empty((steps, S, 2 * DIM))
    for s in range(S):
        noise[:, s, :] = _rng(*key, s).standard_normal((steps, 2 * DIM))
    return _kernels.walk_states(bases, A, psi0, noise, cfg.walk_scale, cfg.walk_anneal, cfg.walk_every)


def optimize_states(bases, cfg, key):
    """Best state per input: random draws, then a hill-climbing walk."""
    n = bases.shape[0]
    A = all_inputs(2, n)
    psi0 = np.empty((A.shape[0], DIM), dtype=np.complex128)
    for a in range(A.shape[0]):
        psi0[a] = _best_draws(bases, A[a], cfg.num_state_draws, _rng(*key, 1, a))
    return _walk(bases, A, psi0, cfg, cfg.walk_steps, (*key, 2))


def _perturb(bases, scale, rng):
    out = np.empty_like(bases)
    for j, b in enumerate(bases):
        G = rng.standard_normal((DIM, DIM)) + 1j * rng.standard_normal((DIM, DIM))
        H = scale * (G - G.conj().T) / 2
        out[j] = b @ expm(H)
    return out


def search(n, config=None):
    """Best pure-state code found for n bits within the configured budget."""
    if not 2 <= n <= 15:
        raise InvalidDimensionError("pure-state search covers 2 <= n <= 15")
    cfg = config or SearchConfig()
    start = time.monotonic()
    A = all_inputs(2, n)
    best = None
    over = False

    def out_of_time():
        return time.monotonic() - start > cfg.time_budget

    for r in range(cfg.num_bases):
        if r and out_of_time():
            over = True
            break
        bases = draw_bases(n, _rng(cfg.seed, 0, r), cfg.unbias_threshold, cfg.max_basis_attempts)
        states, vals = optimize_states(bases, cfg, (cfg.seed, 1, r))
        if best is None or vals.min() > best[2].min():
            best = (bases, states, vals)

    bases, states, vals = best
    for t in range(cfg.basis_rounds):
        if out_of_time():
            over = True
            break
        cand = _perturb(bases, cfg.basis_perturb_scale, _rng(cfg.seed, 2, t))
        cstates, cvals = _walk(cand, A, states, cfg, cfg.basis_walk_steps, (cfg.seed, 3, t))
        if cvals.min() > vals.min():
            bases, states, vals = cand, cstates, cvals

    table = success_table(bases, states)
    worst = table.min(axis=1)
    uncovered = tuple(int(a) for a in np.flatnonzero(worst <= 0.5))
    return PureQrac(n, bases, states, float(table.min()), float(table.mean()), uncovered, over, cfg)


# -- export -------------------------------------------------------------------------------


def save_pure(result, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for j, b in enumerate(result.bases):
        write_matrix(directory / f"basis_{j:02d}.txt", b)
    states = [[[float(z.real), float(z.imag)] for z in psi] for psi in result.states]
    manifest = {
        "n": result.n,
        "worst_p": result.worst_p,
        "avg_p": result.avg_p,
        "uncovered": list(result.uncovered),
        "budget_exhausted": result.budget_exhausted,
        "config": asdict(result.config),
        "states": states,
    }
    path = directory / "pure_qrac.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n")
    return path


def load_pure(directory):
    directory = Path(directory)
    manifest = json.loads((directory / "pure_qrac.json").read_text())
    n = manifest["n"]
    bases = np.array([read_matrix(directory / f"basis_{j:02d}.txt") for j in range(n)])
    states = np.array([[complex(re, im) for re, im in psi] for psi in manifest["states"]])
    return PureQrac(
        n,
        bases,
        states,
        manifest["worst_p"],
        manifest["avg_p"],
        tuple(manifest["uncovered"]),
        manifest["budget_exhausted"],
        SearchConfig(**manifest["config"]),
    )
