"""Best-response search kernels.

Both backends scan Alice strategies ``lo <= idx < hi`` in lexicographic order
(question 0 is the most significant digit) and score each one as

    sum_t max_b sum_s gain[s, a_s, t, b]

with the inner sum accumulated in question order and the outer sum in ``t``
order, so the two backends perform the same floating-point operations and
return identical ``(value, first_argmax)`` pairs.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

_BLOCK = 1 << 15


@njit(cache=True, nogil=True)
def _search_range_jit(gain, lo, hi):
    ns, na, nt, nb = gain.shape
    digits = np.zeros(ns, dtype=np.int64)
    x = lo
    for k in range(ns - 1, -1, -1):
        digits[k] = x % na
        x //= na
    part = np.zeros((ns + 1, nt, nb))
    for k in range(ns):
        for t in range(nt):
            for b in range(nb):
                part[k + 1, t, b] = part[k, t, b] + gain[k, digits[k], t, b]

    best = -np.inf
    best_idx = lo
    idx = lo
    while idx < hi:
        v = 0.0
        for t in range(nt):
            m = part[ns, t, 0]
            for b in range(1, nb):
                if part[ns, t, b] > m:
                    m = part[ns, t, b]
            v += m
        if v > best:
            best = v
            best_idx = idx
        idx += 1
        if idx >= hi:
            break
        p = ns - 1
        while digits[p] == na - 1:
            digits[p] = 0
            p -= 1
        digits[p] += 1
        for k in range(p, ns):
            for t in range(nt):
                for b in range(nb):
                    part[k + 1, t, b] = part[k, t, b] + gain[k, digits[k], t, b]
    return best, best_idx


def _search_range_numpy(gain, lo, hi):
    ns, na, nt, nb = gain.shape
    weights = na ** np.arange(ns - 1, -1, -1, dtype=np.int64)
    best, best_idx = -np.inf, lo
    for start in range(lo, hi, _BLOCK):
        idx = np.arange(start, min(start + _BLOCK, hi), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % na
        part = np.zeros((len(idx), nt, nb))
        for s in range(ns):
            part = part + gain[s][digits[:, s]]
        col = part.max(axis=2)
        v = np.zeros(len(idx))
        for t in range(nt):
            v = v + col[:, t]
        i = int(np.argmax(v))
        if v[i] > best:
            best, best_idx = float(v[i]), int(idx[i])
    return best, best_idx


def search_range(gain: np.ndarray, lo: int, hi: int, use_numba: bool | None = None):
    """Best Alice strategy index in ``[lo, hi)`` against a best-responding Bob."""
    gain = np.ascontiguousarray(gain, dtype=float)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        v, i = _search_range_jit(gain, np.int64(lo), np.int64(hi))
        return float(v), int(i)
    return _search_range_numpy(gain, lo, hi)


def decode(idx: int, n: int, arity: int) -> np.ndarray:
    """Digits of ``idx`` in base ``arity``, most significant first."""
    out = np.zeros(n, dtype=np.int64)
    for k in range(n - 1, -1, -1):
        out[k] = idx % arity
        idx //= arity
    return out


def best_response(gain: np.ndarray, alice: np.ndarray) -> tuple[float, np.ndarray]:
    """Bob's best reply (first maximiser per question) and the resulting value."""
    ns, na, nt, nb = gain.shape
    part = np.zeros((nt, nb))
    for s in range(ns):
        part = part + gain[s, alice[s]]
    bob = part.argmax(axis=1)
    col = part.max(axis=1)
    v = 0.0
    for t in range(nt):
        v += col[t]
    return float(v), bob
