"""Hot numeric loops, each with a numba kernel and a pure-numpy twin.

The public names at the bottom of the module dispatch on
``qrac._config.USE_NUMBA``.  Both variants of every kernel are importable
(``nb_*`` / ``np_*``) so the benchmark and the tests can compare them.

All kernels take plain arrays; randomness is always drawn by the caller and
passed in, which keeps the two paths fed with identical inputs.
"""
import numpy as np

from . import _config

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# Above this size the LAPACK solver is used inside batch kernels.
JACOBI_MAX_DIM = 4


# ---------------------------------------------------------------------------
# Pure-python bodies shared by the numba kernels.  They are written against
# the numba subset (explicit loops, no fancy indexing).
# ---------------------------------------------------------------------------


def _jacobi_eigvalsh_py(a_in, tol, max_sweeps):
    n = a_in.shape[0]
    a = a_in.astype(np.complex128).copy()
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j].real ** 2 + a[i, j].imag ** 2
    scale = np.sqrt(scale)
    if scale < 1.0:
        scale = 1.0
    thresh = tol * scale
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q].real ** 2 + a[p, q].imag ** 2
        if np.sqrt(2.0 * off) <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                mag = np.sqrt(g.real ** 2 + g.imag ** 2)
                if mag <= 1e-300:
                    continue
                ph_conj = np.conj(g) / mag
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    if r != p and r != q:
                        arp = a[r, p]
                        arq = a[r, q] * ph_conj
                        nrp = c * arp - s * arq
                        nrq = s * arp + c * arq
                        a[r, p] = nrp
                        a[p, r] = np.conj(nrp)
                        a[r, q] = nrq
                        a[q, r] = np.conj(nrq)
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                a[p, q] = 0.0
                a[q, p] = 0.0
    out = np.empty(n)
    for i in range(n):
        out[i] = a[i, i].real
    return np.sort(out)


def _eigvalsh_small_py(a):
    if a.shape[0] <= JACOBI_MAX_DIM:
        return _jacobi_eigvalsh(a, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    return np.linalg.eigvalsh(a)


def _batch_eigvalsh_py(stack):
    b, n = stack.shape[0], stack.shape[1]
    out = np.empty((b, n))
    for k in range(b):
        out[k] = _eigvalsh_small(stack[k])
    return out


def _pauli_sign_extremes_py(paulis, start, count):
    # Gray-code walk over sign patterns with the first sign pinned to +.
    # Pattern bit k-1 is the sign bit of generator k (k >= 1).
    n, dim = paulis.shape[0], paulis.shape[1]
    m = np.zeros((dim, dim), dtype=np.complex128)
    g0 = start ^ (start >> 1)
    for k in range(n):
        sign = 1.0
        if k >= 1 and (g0 >> (k - 1)) & 1:
            sign = -1.0
        for r in range(dim):
            for c in range(dim):
                m[r, c] += sign * paulis[k, r, c]
    best_lo = np.inf
    best_lo_pat = -1
    best_hi = -np.inf
    best_hi_pat = -1
    g_prev = g0
    for step in range(count):
        idx = start + step
        g = idx ^ (idx >> 1)
        if step > 0:
            diff = g ^ g_prev
            bit = 0
            while (diff >> bit) & 1 == 0:
                bit += 1
            k = bit + 1
            # new sign for generator k
            sign = -1.0 if (g >> bit) & 1 else 1.0
            for r in range(dim):
                for c in range(dim):
                    m[r, c] += 2.0 * sign * paulis[k, r, c]
        g_prev = g
        ev = _eigvalsh_small(m)
        if ev[0] < best_lo:
            best_lo = ev[0]
            best_lo_pat = g
        if ev[dim - 1] > best_hi:
            best_hi = ev[dim - 1]
            best_hi_pat = g
    return best_lo, best_lo_pat, best_hi, best_hi_pat


def _input_sum_min_eig_py(terms, start, count):
    # terms[i, j] is the matrix added when slot i carries digit j.
    n, d, dim = terms.shape[0], terms.shape[1], terms.shape[2]
    digits = np.zeros(n, dtype=np.int64)
    rem = start
    for i in range(n):
        digits[i] = rem % d
        rem //= d
    m = np.zeros((dim, dim), dtype=np.complex128)
    best = np.inf
    best_idx = -1
    for step in range(count):
        if step == 0 or digits[0] == 0 and (n < 3 or digits[1] == 0 and digits[2] == 0):
            # periodic full rebuild bounds the drift of incremental updates
            m[:, :] = 0.0
            for i in range(n):
                m += terms[i, digits[i]]
        ev = _eigvalsh_small(m)
        if ev[0] < best:
            best = ev[0]
            best_idx = start + step
        # odometer increment with incremental matrix update
        i = 0
        while i < n:
            old = digits[i]
            new = old + 1
            if new == d:
                new = 0
            m += terms[i, new] - terms[i, old]
            digits[i] = new
            if new != 0:
                break
            i += 1
    return best, best_idx


def _census_py(projs, weight, start, count, target, tol):
    # projs[i, j]: operator for slot i, digit j; state = weight * sum.
    n, d, dim = projs.shape[0], projs.shape[1], projs.shape[2]
    zeros = np.empty(count, dtype=np.int8)
    match = np.empty(count, dtype=np.bool_)
    digits = np.zeros(n, dtype=np.int64)
    rem = start
    for i in range(n):
        digits[i] = rem % d
        rem //= d
    m = np.empty((dim, dim), dtype=np.complex128)
    for step in range(count):
        m[:, :] = 0.0
        for i in range(n):
            m += projs[i, digits[i]]
        ev = _eigvalsh_small(m * weight)
        nz = 0
        ok = True
        for k in range(dim):
            if abs(ev[k]) <= tol:
                nz += 1
            if abs(ev[k] - target[k]) > tol:
                ok = False
        zeros[step] = nz
        match[step] = ok
        i = 0
        while i < n:
            digits[i] += 1
            if digits[i] < d:
                break
            digits[i] = 0
            i += 1
    return zeros, match


def _plane_objective(basis, bits, psi, n):
    worst = np.inf
    for j in range(n):
        off = 2 * bits[j]
        acc = 0.0
        for c in range(off, off + 2):
            z = 0.0 + 0.0j
            for r in range(4):
                z += np.conj(basis[j, r, c]) * psi[r]
            acc += z.real ** 2 + z.imag ** 2
        if acc < worst:
            worst = acc
    return worst


def _walk_states_py(bases, bits, psi0, noise, scale0, anneal, every):
    s_count, n = bits.shape[0], bits.shape[1]
    steps = noise.shape[0]
    psi = psi0.copy()
    values = np.empty(s_count)
    cand = np.empty(4, dtype=np.complex128)
    for s in range(s_count):
        cur = psi[s].copy()
        val = _plane_objective(bases, bits[s], cur, n)
        for t in range(steps):
            scale = scale0 * anneal ** (t // every)
            norm = 0.0
            for r in range(4):
                cand[r] = cur[r] + scale * (noise[t, s, r] + 1j * noise[t, s, r + 4])
                norm += cand[r].real ** 2 + cand[r].imag ** 2
            norm = np.sqrt(norm)
            for r in range(4):
                cand[r] = cand[r] / norm
            cval = _plane_objective(bases, bits[s], cand, n)
            if cval > val:
                val = cval
                for r in range(4):
                    cur[r] = cand[r]
        psi[s] = cur
        values[s] = val
    return psi, values


def _random_sign_min_eig_py(signs, xmask, phases):
    trials, n = signs.shape[0], signs.shape[1]
    dim = phases.shape[1]
    out = np.empty(trials)
    m = np.empty((dim, dim), dtype=np.complex128)
    for t in range(trials):
        m[:, :] = 0.0
        for k in range(n):
            s = 1.0 - 2.0 * signs[t, k]
            x = xmask[k]
            for r in range(dim):
                m[r, r ^ x] += s * phases[k, r]
        out[t] = _eigvalsh_small(m)[0]
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------


def np_jacobi_eigvalsh(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    return np.linalg.eigvalsh(np.asarray(a, dtype=np.complex128))


def np_batch_eigvalsh(stack):
    return np.linalg.eigvalsh(np.asarray(stack, dtype=np.complex128))


def np_pauli_sign_extremes(paulis, start, count, chunk=4096):
    n = paulis.shape[0]
    dim = paulis.shape[1]
    flat = paulis.reshape(n, dim * dim)
    best_lo, best_lo_pat = np.inf, -1
    best_hi, best_hi_pat = -np.inf, -1
    for lo in range(start, start + count, chunk):
        hi = min(lo + chunk, start + count)
        pats = np.arange(lo, hi, dtype=np.int64)
        bits = (pats[:, None] >> np.arange(n - 1)[None, :]) & 1
        signs = np.ones((len(pats), n))
        signs[:, 1:] = 1.0 - 2.0 * bits
        mats = (signs @ flat).reshape(-1, dim, dim)
        ev = np.linalg.eigvalsh(mats)
        i_lo = int(np.argmin(ev[:, 0]))
        i_hi = int(np.argmax(ev[:, -1]))
        if ev[i_lo, 0] < best_lo:
            best_lo, best_lo_pat = float(ev[i_lo, 0]), int(pats[i_lo])
        if ev[i_hi, -1] > best_hi:
            best_hi, best_hi_pat = float(ev[i_hi, -1]), int(pats[i_hi])
    return best_lo, best_lo_pat, best_hi, best_hi_pat


def _digits_block(lo, hi, n, d):
    idx = np.arange(lo, hi, dtype=np.int64)
    return (idx[:, None] // d ** np.arange(n, dtype=np.int64)[None, :]) % d


def np_input_sum_min_eig(terms, start, count, chunk=4096):
    n, d, dim = terms.shape[0], terms.shape[1], terms.shape[2]
    best, best_idx = np.inf, -1
    for lo in range(start, start + count, chunk):
        hi = min(lo + chunk, start + count)
        dig = _digits_block(lo, hi, n, d)
        mats = terms[np.arange(n)[None, :], dig].sum(axis=1)
        ev = np.linalg.eigvalsh(mats)[:, 0]
        k = int(np.argmin(ev))
        if ev[k] < best:
            best, best_idx = float(ev[k]), lo + k
    return best, best_idx


def np_census(projs, weight, start, count, target, tol, chunk=4096):
    n, d = projs.shape[0], projs.shape[1]
    zeros = np.empty(count, dtype=np.int8)
    match = np.empty(count, dtype=np.bool_)
    for lo in range(start, start + count, chunk):
        hi = min(lo + chunk, start + count)
        dig = _digits_block(lo, hi, n, d)
        mats = weight * projs[np.arange(n)[None, :], dig].sum(axis=1)
        ev = np.linalg.eigvalsh(mats)
        zeros[lo - start:hi - start] = (np.abs(ev) <= tol).sum(axis=1)
        match[lo - start:hi - start] = np.all(np.abs(ev - target[None, :]) <= tol, axis=1)
    return zeros, match


def np_walk_states(bases, bits, psi0, noise, scale0, anneal, every):
    s_count, n = bits.shape
    steps = noise.shape[0]
    # planes[s, j] = the two basis columns of the correct outcome
    cols = 2 * bits[:, :, None] + np.arange(2)[None, None, :]
    planes = bases[np.arange(n)[None, :, None], :, cols]  # (S, n, 2, 4)

    def objective(psi):
        amp = np.einsum("sjcr,sr->sjc", planes.conj(), psi)
        return (np.abs(amp) ** 2).sum(axis=2).min(axis=1)

    psi = psi0.copy()
    val = objective(psi)
    for t in range(steps):
        scale = scale0 * anneal ** (t // every)
        cand = psi + scale * (noise[t, :, :4] + 1j * noise[t, :, 4:])
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        cval = objective(cand)
        better = cval > val
        psi[better] = cand[better]
        val[better] = cval[better]
    return psi, val


def np_random_sign_min_eig(signs, xmask, phases, chunk=256):
    trials, n = signs.shape
    dim = phases.shape[1]
    rows = np.arange(dim)
    out = np.empty(trials)
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        s = 1.0 - 2.0 * signs[lo:hi].astype(np.float64)
        mats = np.zeros((hi - lo, dim, dim), dtype=np.complex128)
        for k in range(n):
            mats[:, rows, rows ^ xmask[k]] += s[:, k, None] * phases[k][None, :]
        out[lo:hi] = np.linalg.eigvalsh(mats)[:, 0]
    return out


# ---------------------------------------------------------------------------
# numba compilation and dispatch
# ---------------------------------------------------------------------------

if _config.numba_installed:
    import numba

    _jit = numba.njit(**_config.numba_opts)
    _jacobi_eigvalsh = _jit(_jacobi_eigvalsh_py)
    _eigvalsh_small = _jit(_eigvalsh_small_py)
    nb_batch_eigvalsh = _jit(_batch_eigvalsh_py)
    nb_pauli_sign_extremes = _jit(_pauli_sign_extremes_py)
    nb_input_sum_min_eig = _jit(_input_sum_min_eig_py)
    nb_census = _jit(_census_py)
    _plane_objective = _jit(_plane_objective)
    nb_walk_states = _jit(_walk_states_py)
    nb_random_sign_min_eig = _jit(_random_sign_min_eig_py)
else:  # pragma: no cover
    _jacobi_eigvalsh = _jacobi_eigvalsh_py
    _eigvalsh_small = _eigvalsh_small_py
    nb_batch_eigvalsh = None
    nb_pauli_sign_extremes = None
    nb_input_sum_min_eig = None
    nb_census = None
    nb_walk_states = None
    nb_random_sign_min_eig = None


def jacobi_eigvalsh(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigenvalues of a Hermitian matrix, ascending.

    Runs compiled when numba is available; otherwise the same sweep runs as
    plain Python (slow, meant for small matrices only).
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    return _jacobi_eigvalsh(a, tol, max_sweeps)


def _pick(nb_fn, np_fn):
    if _config.USE_NUMBA and nb_fn is not None:
        return nb_fn
    return np_fn


def batch_eigvalsh(stack):
    stack = np.ascontiguousarray(stack, dtype=np.complex128)
    return _pick(nb_batch_eigvalsh, np_batch_eigvalsh)(stack)


def pauli_sign_extremes(paulis, start, count):
    paulis = np.ascontiguousarray(paulis, dtype=np.complex128)
    return _pick(nb_pauli_sign_extremes, np_pauli_sign_extremes)(paulis, int(start), int(count))


def input_sum_min_eig(terms, start, count):
    terms = np.ascontiguousarray(terms, dtype=np.complex128)
    return _pick(nb_input_sum_min_eig, np_input_sum_min_eig)(terms, int(start), int(count))


def census(projs, weight, start, count, target, tol):
    projs = np.ascontiguousarray(projs, dtype=np.complex128)
    target = np.ascontiguousarray(target, dtype=np.float64)
    return _pick(nb_census, np_census)(projs, float(weight), int(start), int(count), target, float(tol))


def walk_states(bases, bits, psi0, noise, scale0, anneal, every):
    bases = np.ascontiguousarray(bases, dtype=np.complex128)
    bits = np.ascontiguousarray(bits, dtype=np.int64)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    fn = _pick(nb_walk_states, np_walk_states)
    return fn(bases, bits, psi0, noise, float(scale0), float(anneal), int(every))


def random_sign_min_eig(signs, xmask, phases):
    signs = np.ascontiguousarray(signs, dtype=np.int8)
    xmask = np.ascontiguousarray(xmask, dtype=np.int64)
    phases = np.ascontiguousarray(phases, dtype=np.complex128)
    return _pick(nb_random_sign_min_eig, np_random_sign_min_eig)(signs, xmask, phases)
