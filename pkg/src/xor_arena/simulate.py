"""Monte Carlo referee for XOR, binary and conjunction games.

Every strategy is a vectorised sampler: given arrays of question indices and a
generator it returns answer arrays with the strategy's joint law. Questions
of composite games are flat row-major indices over the component questions,
matching ``xor_sum`` and ``ConjunctionGame``; conjunction answers are n-bit
integers with coordinate 0 in the most significant bit.

Randomness comes from numpy's Philox counter-based generator. Shard ``k`` of a
run with seed ``S`` uses ``SeedSequence([S, k])``, so a report depends only on
(seed, shards, trials, strategy, game).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .classical import DeterministicStrategy
from .games import BinaryGame, ConjunctionGame, XorGame
from .tsirelson import QuantumStrategy, outcome_distribution

KINDS = ("deterministic", "quantum", "parity-composed", "independent-composed")
BATCH = 1 << 18


class StrategyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PlayableStrategy:
    kind: str
    payload: object
    n_s: int
    n_t: int
    arity: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StrategyError(f"unknown strategy kind {self.kind!r}")

    def sample(self, s: np.ndarray, t: np.ndarray, rng: np.random.Generator):
        """Answers ``(a, b)`` for question arrays ``s`` and ``t``."""
        if self.kind == "deterministic":
            alice, bob = self.payload
            return alice[s], bob[t]
        if self.kind == "quantum":
            cdf = self.payload
            u = rng.random(s.shape[0])
            k = np.minimum((u[:, None] >= cdf[s, t]).sum(axis=1), 3)
            return k >> 1, k & 1
        comps, shapes = self.payload
        si = np.unravel_index(s, shapes[0]) if comps else ()
        ti = np.unravel_index(t, shapes[1]) if comps else ()
        a = np.zeros(s.shape[0], dtype=np.int64)
        b = np.zeros(s.shape[0], dtype=np.int64)
        for j, st in enumerate(comps):
            aj, bj = st.sample(si[j], ti[j], rng)
            if self.kind == "parity-composed":
                a ^= aj
                b ^= bj
            else:
                a = (a << 1) | aj
                b = (b << 1) | bj
        return a, b


def deterministic(st: DeterministicStrategy, arity: int = 2) -> PlayableStrategy:
    alice = np.asarray(st.alice, dtype=np.int64)
    bob = np.asarray(st.bob, dtype=np.int64)
    for name, v in (("alice", alice), ("bob", bob)):
        if v.size and (v.min() < 0 or v.max() >= arity):
            raise StrategyError(f"{name} answer outside 0..{arity - 1}")
    return PlayableStrategy("deterministic", (alice, bob), alice.size, bob.size, arity)


def quantum(qs: QuantumStrategy) -> PlayableStrategy:
    """Precompute the per-question-pair answer law once; sampling is then a table lookup."""
    ns, nt = len(qs.alice_obs), len(qs.bob_obs)
    law = np.empty((ns, nt, 4))
    for s in range(ns):
        for t in range(nt):
            law[s, t] = outcome_distribution(qs, s, t).ravel()
    law /= law.sum(axis=2, keepdims=True)
    cdf = np.cumsum(law, axis=2)
    cdf[:, :, -1] = 1.0
    return PlayableStrategy("quantum", cdf, ns, nt, 2)


def _binary_components(strategies):
    for k, st in enumerate(strategies):
        if not isinstance(st, PlayableStrategy):
            raise StrategyError(f"component {k} is not a PlayableStrategy")
        if st.arity != 2:
            raise StrategyError(f"component {k} has answer arity {st.arity}, need binary answers")


def combine_parity(strategies: Sequence[PlayableStrategy], m: Sequence[int]) -> PlayableStrategy:
    """Strategy for the XOR sum of the games indexed by ``m`` (0-based).

    Each selected component plays its own coordinate and both players output
    the XOR of their answers. Components outside ``m`` would only produce
    answers that are then discarded, so they are not run. ``m`` empty gives the
    one-question strategy answering 0, 0.
    """
    _binary_components(strategies)
    idx = sorted(set(int(j) for j in m))
    for j in idx:
        if not 0 <= j < len(strategies):
            raise StrategyError(f"index {j} out of range for {len(strategies)} strategies")
    comps = tuple(strategies[j] for j in idx)
    shapes = (tuple(c.n_s for c in comps), tuple(c.n_t for c in comps))
    ns = int(np.prod(shapes[0])) if comps else 1
    nt = int(np.prod(shapes[1])) if comps else 1
    return PlayableStrategy("parity-composed", (comps, shapes), ns, nt, 2)


def combine_independent(strategies: Sequence[PlayableStrategy]) -> PlayableStrategy:
    """Play every coordinate of a conjunction with its own strategy."""
    if not strategies:
        raise StrategyError("need at least one strategy")
    _binary_components(strategies)
    comps = tuple(strategies)
    shapes = (tuple(c.n_s for c in comps), tuple(c.n_t for c in comps))
    return PlayableStrategy("independent-composed", (comps, shapes),
                            int(np.prod(shapes[0])), int(np.prod(shapes[1])), 2 ** len(comps))


@dataclass(frozen=True)
class SimReport:
    trials: int
    wins: int
    estimate: float
    stderr: float
    seed: int
    shards: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        return cls(int(d["trials"]), int(d["wins"]), float(d["estimate"]), float(d["stderr"]),
                   int(d["seed"]), int(d["shards"]))


def _game_layout(g):
    """Question distribution, answer arity and a scorer ``(s, t, a, b) -> coordinate loss bits``."""
    if isinstance(g, XorGame):
        f = g.f
        return g.pi, 2, lambda s, t, a, b: ((a ^ b ^ f[s, t]) & 1)[:, None]
    if isinstance(g, BinaryGame):
        win = np.asarray(g.predicate) > 0.5
        return g.pi, max(g.a_arity, g.b_arity), lambda s, t, a, b: (~win[a, b, s, t]).astype(np.int64)[:, None]
    if isinstance(g, ConjunctionGame):
        n = g.n

        def score(s, t, a, b):
            si = np.unravel_index(s, g.s_shape)
            ti = np.unravel_index(t, g.t_shape)
            x = np.empty((s.shape[0], n), dtype=np.int64)
            for j, comp in enumerate(g.components):
                shift = n - 1 - j
                x[:, j] = ((a >> shift) ^ (b >> shift) ^ comp.f[si[j], ti[j]]) & 1
            return x
        return g.pi(), g.answer_arity, score
    raise TypeError(f"unsupported game type {type(g).__name__}")


def _check_compatible(st: PlayableStrategy, g, pi, arity) -> None:
    if (st.n_s, st.n_t) != pi.shape:
        raise StrategyError(f"strategy answers {st.n_s}x{st.n_t} questions, game has {pi.shape[0]}x{pi.shape[1]}")
    if st.arity > arity:
        raise StrategyError(f"strategy answer arity {st.arity} exceeds game arity {arity}")


def _shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, shard])))


def _run_shard(st, pi_cdf, ns, score, trials, rng, keep):
    wins = 0
    kept = []
    done = 0
    while done < trials:
        size = min(BATCH, trials - done)
        q = np.minimum(np.searchsorted(pi_cdf, rng.random(size), side="right"), pi_cdf.size - 1)
        s, t = np.divmod(q, pi_cdf.size // ns)
        a, b = st.sample(s, t, rng)
        x = score(s, t, np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        wins += int(np.count_nonzero(~x.any(axis=1)))
        if keep:
            kept.append(x)
        done += size
    return wins, kept


def _play(st, g, trials, seed, shards, keep):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if shards < 1:
        raise ValueError("shards must be at least 1")
    pi, arity, score = _game_layout(g)
    _check_compatible(st, g, pi, arity)
    cdf = np.cumsum(pi.ravel())
    cdf /= cdf[-1]
    wins = 0
    kept = []
    for k in range(shards):
        n_k = trials * (k + 1) // shards - trials * k // shards
        if n_k == 0:
            continue
        w, x = _run_shard(st, cdf, pi.shape[0], score, n_k, _shard_rng(seed, k), keep)
        wins += w
        kept += x
    p = wins / trials
    report = SimReport(trials, wins, p, float(np.sqrt(p * (1.0 - p) / trials)), int(seed), int(shards))
    return report, kept


def play(st: PlayableStrategy, g, trials: int, seed: int, shards: int = 1) -> SimReport:
    """Play ``trials`` independent rounds of ``g`` and count wins."""
    return _play(st, g, trials, seed, shards, keep=False)[0]


def play_trace(st: PlayableStrategy, g: ConjunctionGame, trials: int, seed: int, shards: int = 1):
    """Like :func:`play` but also returns the per-trial loss bits ``X[trial, j]``.

    ``X_j = a_j xor b_j xor f_j(s_j, t_j)``; the round is won iff every ``X_j`` is 0.
    """
    report, kept = _play(st, g, trials, seed, shards, keep=True)
    return report, np.concatenate(kept, axis=0)


def subset_parity_average(x: np.ndarray) -> np.ndarray:
    """Per row, ``2^-n sum_M (-1)^{XOR_{j in M} X_j}`` over all subsets ``M``.

    Computed exactly in integers; as a function of the row it equals the
    indicator that the row is all zero.
    """
    x = np.asarray(x, dtype=np.int64)
    n = x.shape[1]
    total = np.zeros(x.shape[0], dtype=np.int64)
    for mask in range(1 << n):
        sel = [j for j in range(n) if mask >> j & 1]
        parity = x[:, sel].sum(axis=1) & 1 if sel else np.zeros(x.shape[0], dtype=np.int64)
        total += 1 - 2 * parity
    return total / float(1 << n)


def strategy_from_dict(d: dict, g) -> PlayableStrategy:
    """Read a deterministic or quantum strategy in the labelled JSON form."""
    if isinstance(g, ConjunctionGame):
        s_labels, t_labels, arity = g.s_labels(), g.t_labels(), g.answer_arity
    else:
        s_labels, t_labels = g.s_labels, g.t_labels
        arity = max(g.a_arity, g.b_arity) if isinstance(g, BinaryGame) else 2
    kind = d.get("type", "deterministic")
    if kind == "quantum":
        return quantum(QuantumStrategy.from_dict(d, list(s_labels), list(t_labels)))
    if kind == "deterministic":
        return deterministic(DeterministicStrategy.from_dict(d, s_labels, t_labels), arity)
    raise StrategyError(f"unknown strategy type {kind!r}")
