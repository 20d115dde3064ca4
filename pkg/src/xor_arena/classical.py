"""Exact classical values by exhaustive deterministic-strategy search.

One side's deterministic strategies are enumerated; the other side is replaced
by its best response, which is cheap to evaluate. Work can be split into
contiguous index chunks and merged by max with lowest-index tie-breaking, so
the result does not depend on the chunking or on the number of threads.
"""
from __future__ import annotations

import os
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .games import BinaryGame, ConjunctionGame, XorGame, xor_sum_all

DEFAULT_BUDGET = 1 << 24
VERIFY_TOL = 1e-12


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"search needs {required} strategies, budget is {budget}")
        self.required = required
        self.budget = budget


def default_budget() -> int:
    env = os.environ.get("XOR_ARENA_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass(frozen=True)
class DeterministicStrategy:
    """Answer index per question for each player."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]

    def to_dict(self, s_labels, t_labels, answer_bits: int = 1) -> dict:
        def fmt(a):
            return int(a) if answer_bits == 1 else format(int(a), f"0{answer_bits}b")
        return {"alice": {s: fmt(a) for s, a in zip(s_labels, self.alice)},
                "bob": {t: fmt(b) for t, b in zip(t_labels, self.bob)}}

    @classmethod
    def from_dict(cls, d: dict, s_labels, t_labels) -> "DeterministicStrategy":
        def parse(v):
            return int(v, 2) if isinstance(v, str) else int(v)
        try:
            return cls(tuple(parse(d["alice"][s]) for s in s_labels),
                       tuple(parse(d["bob"][t]) for t in t_labels))
        except KeyError as e:
            raise ValueError(f"strategy has no answer for question {e.args[0]!r}") from None


def evaluate(gain: np.ndarray, st: DeterministicStrategy) -> float:
    """Direct evaluation ``sum_{s,t} gain[s, a_s, t, b_t]``."""
    ns, _, nt, _ = gain.shape
    a = np.asarray(st.alice)
    b = np.asarray(st.bob)
    return float(gain[np.arange(ns)[:, None], a[:, None], np.arange(nt)[None, :], b[None, :]].sum())


def _search(gain: np.ndarray, budget: int | None, chunks: int = 1, workers: int = 1,
            progress: Callable[[int, int], None] | None = None):
    """Maximise over both players' deterministic strategies.

    Enumerates whichever side has fewer strategies and best-responds with the other.
    Returns ``(value, DeterministicStrategy)``.
    """
    budget = default_budget() if budget is None else budget
    ns, na, nt, nb = gain.shape
    swap = nb ** nt < na ** ns
    work = gain.transpose(2, 3, 0, 1) if swap else gain
    work = np.ascontiguousarray(work)
    ws, wa = work.shape[:2]
    total = wa ** ws
    if total > budget:
        raise BudgetExceeded(total, budget)

    chunks = max(1, min(int(chunks), total))
    bounds = [total * k // chunks for k in range(chunks + 1)]
    ranges = [(bounds[k], bounds[k + 1]) for k in range(chunks) if bounds[k] < bounds[k + 1]]

    def run(r):
        return _kernels.search_range(work, r[0], r[1])

    results = []
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for k, res in enumerate(pool.map(run, ranges)):
                results.append(res)
                if progress:
                    progress(k + 1, len(ranges))
    else:
        for k, r in enumerate(ranges):
            results.append(run(r))
            if progress:
                progress(k + 1, len(ranges))

    best, best_idx = results[0]
    for v, i in results[1:]:
        if v > best:
            best, best_idx = v, i

    enum = _kernels.decode(best_idx, ws, wa)
    _, reply = _kernels.best_response(work, enum)
    if swap:
        st = DeterministicStrategy(tuple(int(x) for x in reply), tuple(int(x) for x in enum))
    else:
        st = DeterministicStrategy(tuple(int(x) for x in enum), tuple(int(x) for x in reply))
    check = evaluate(gain, st)
    if abs(check - best) > VERIFY_TOL:
        raise AssertionError(f"witness evaluates to {check}, search reported {best}")
    return best, st


def xor_gain(g: XorGame) -> np.ndarray:
    """``gain[s, a, t, b] = (-1)^a (-1)^b A[s, t]``; its maximum over strategies is the bias."""
    sign = np.array([1.0, -1.0])
    return sign[None, :, None, None] * g.cost[:, None, :, None] * sign[None, None, None, :]


def classical_bias(g: XorGame, budget: int | None = None, **kw):
    """Classical bias ``max_{a,b in {+-1}} sum a_s A_st b_t`` and an optimal deterministic strategy.

    Answers in the witness are bits (bit 1 means output -1 in sign language).
    """
    return _search(xor_gain(g), budget, **kw)


def classical_value_xor(g: XorGame, budget: int | None = None, **kw):
    bias, st = classical_bias(g, budget, **kw)
    return (1.0 + bias) / 2.0, st


def classical_value_conjunction(c: ConjunctionGame, budget: int | None = None, **kw):
    """Exact classical value of a conjunction; witness answers are n-bit integers (coordinate 0 = MSB)."""
    budget = default_budget() if budget is None else budget
    ns, nt = c.shape
    need = min(c.answer_arity ** ns, c.answer_arity ** nt)
    if need > budget:
        # checked before the product table is built: it grows much faster than memory allows
        raise BudgetExceeded(need, budget)
    return _search(c.gain(), budget, **kw)


def classical_value_binary(b: BinaryGame, budget: int | None = None, **kw):
    return _search(b.gain(), budget, **kw)


def classical_value(game, budget: int | None = None, **kw):
    """Dispatch on game type; returns ``(value, witness)``."""
    if isinstance(game, XorGame):
        return classical_value_xor(game, budget, **kw)
    if isinstance(game, ConjunctionGame):
        return classical_value_conjunction(game, budget, **kw)
    if isinstance(game, BinaryGame):
        return classical_value_binary(game, budget, **kw)
    raise TypeError(f"unsupported game type {type(game).__name__}")


def subset_games(games: Sequence[XorGame]):
    """Yield ``(mask, xor_sum of the games in mask)`` for all ``2^n`` masks in increasing order.

    Bit ``j`` of ``mask`` selects ``games[j]``; mask 0 gives the trivial game.
    """
    n = len(games)
    for mask in range(1 << n):
        yield mask, xor_sum_all([games[j] for j in range(n) if mask >> j & 1])


def classical_corollary_bound(games: Sequence[XorGame], budget: int | None = None, **kw) -> float:
    """Average over all subsets ``M`` of the classical bias of ``XOR_{j in M} G_j`` (empty subset: 1).

    Upper-bounds the classical value of the conjunction.
    """
    if not games:
        raise ValueError("need at least one game")
    total = 0.0
    for mask, g in subset_games(games):
        total += 1.0 if mask == 0 else classical_bias(g, budget, **kw)[0]
    return total / (1 << len(games))


def _rational(x: float, max_den: int) -> Fraction:
    q = Fraction(float(x)).limit_denominator(max_den)
    if abs(float(q) - x) > 1e-12:
        raise ValueError(f"{x!r} has no rational form with denominator <= {max_den}")
    return q


def rational_value(game, st: DeterministicStrategy, max_den: int = 10 ** 6) -> Fraction:
    """Win probability of a deterministic strategy in exact arithmetic.

    Question weights are snapped to the nearest fraction with denominator at
    most ``max_den`` (they must lie within 1e-12 of it), so a float search
    result can be confirmed as an exact rational.
    """
    if isinstance(game, XorGame):
        pi, f = game.pi, game.f
        ns, nt = pi.shape
        return sum((_rational(pi[s, t], max_den) for s in range(ns) for t in range(nt)
                    if (st.alice[s] ^ st.bob[t]) == f[s, t]), Fraction(0))
    if isinstance(game, BinaryGame):
        pi, v = game.pi, np.asarray(game.predicate)
        ns, nt = pi.shape
        return sum((_rational(pi[s, t], max_den) for s in range(ns) for t in range(nt)
                    if v[st.alice[s], st.bob[t], s, t]), Fraction(0))
    if isinstance(game, ConjunctionGame):
        s_q, t_q = game.questions()
        total = Fraction(0)
        for si, s in enumerate(s_q):
            for ti, t in enumerate(t_q):
                if all(game.coordinate_wins(s, t, st.alice[si], st.bob[ti])):
                    w = Fraction(1)
                    for g, a, b in zip(game.components, s, t):
                        w *= _rational(g.pi[a, b], max_den)
                    total += w
        return total
    raise TypeError(f"unsupported game type {type(game).__name__}")
