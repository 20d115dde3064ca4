"""Game representations and the XOR-game composition algebra.

An XOR game is stored by its cost matrix ``A[s, t] = pi(s, t) * (-1)**f(s, t)``;
``pi`` and ``f`` are recovered from it on demand. Binary games (arbitrary
predicates over small answer sets) and conjunctions of XOR games live here too.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

SEP = "|"
DIST_TOL = 1e-12


class GameError(ValueError):
    """Raised when a game table violates its invariants."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _labels(labels, n, name) -> tuple[str, ...]:
    if labels is None:
        return tuple(str(i) for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise GameError(f"{name} has {len(labels)} labels for {n} questions")
    if len(set(labels)) != n:
        raise GameError(f"duplicate labels in {name}")
    return labels


def _check_distribution(pi: np.ndarray, what: str = "pi") -> None:
    if not np.all(np.isfinite(pi)):
        raise GameError(f"{what} has non-finite entries")
    if np.any(pi < 0):
        raise GameError(f"{what} has negative entries")
    total = pi.sum()
    if abs(total - 1.0) > DIST_TOL:
        raise GameError(f"{what} sums to {total!r}, not 1")


@dataclass(frozen=True, eq=False)
class XorGame:
    cost: np.ndarray
    s_labels: tuple[str, ...] = None
    t_labels: tuple[str, ...] = None

    def __post_init__(self):
        cost = _frozen(self.cost)
        if cost.ndim != 2 or min(cost.shape) < 1:
            raise GameError(f"cost matrix must be 2-d and nonempty, got shape {cost.shape}")
        if not np.all(np.isfinite(cost)):
            raise GameError("cost matrix has non-finite entries")
        total = np.abs(cost).sum()
        if abs(total - 1.0) > DIST_TOL:
            raise GameError(f"absolute cost entries sum to {total!r}, not 1")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "s_labels", _labels(self.s_labels, cost.shape[0], "S"))
        object.__setattr__(self, "t_labels", _labels(self.t_labels, cost.shape[1], "T"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape

    @property
    def pi(self) -> np.ndarray:
        return np.abs(self.cost)

    @property
    def f(self) -> np.ndarray:
        return (self.cost < 0).astype(np.int8)

    @property
    def T(self) -> "XorGame":
        return transpose(self)

    def diagnostics(self) -> list[str]:
        """Human-readable notes on degenerate structure (never fatal)."""
        notes = []
        pi = self.pi
        for i in np.flatnonzero(pi.sum(axis=1) == 0):
            notes.append(f"Alice question {self.s_labels[i]!r} is never asked")
        for j in np.flatnonzero(pi.sum(axis=0) == 0):
            notes.append(f"Bob question {self.t_labels[j]!r} is never asked")
        return notes

    def __eq__(self, other):
        if not isinstance(other, XorGame):
            return NotImplemented
        return (self.s_labels == other.s_labels and self.t_labels == other.t_labels
                and np.array_equal(self.cost, other.cost))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryGame:
    """Two-prover one-round game with a 0/1 acceptance predicate.

    ``predicate[a, b, s, t]`` is 1 when answers ``(a, b)`` win on questions ``(s, t)``.
    """

    pi: np.ndarray
    predicate: np.ndarray
    s_labels: tuple[str, ...] = None
    t_labels: tuple[str, ...] = None

    def __post_init__(self):
        pi = _frozen(self.pi)
        if pi.ndim != 2 or min(pi.shape) < 1:
            raise GameError(f"pi must be 2-d and nonempty, got shape {pi.shape}")
        _check_distribution(pi)
        pred = np.array(self.predicate)
        if pred.ndim != 4 or pred.shape[2:] != pi.shape or min(pred.shape[:2]) < 1:
            raise GameError(f"predicate shape {pred.shape} incompatible with pi shape {pi.shape}")
        if not np.all((pred == 0) | (pred == 1)):
            raise GameError("predicate entries must be 0 or 1")
        pred = pred.astype(np.int8)
        pred.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "predicate", pred)
        object.__setattr__(self, "s_labels", _labels(self.s_labels, pi.shape[0], "S"))
        object.__setattr__(self, "t_labels", _labels(self.t_labels, pi.shape[1], "T"))

    @property
    def a_arity(self) -> int:
        return self.predicate.shape[0]

    @property
    def b_arity(self) -> int:
        return self.predicate.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pi.shape

    def gain(self) -> np.ndarray:
        """Weighted win table ``W[s, a, t, b] = pi(s, t) V(a, b | s, t)``."""
        return np.einsum("st,abst->satb", self.pi, self.predicate)


@dataclass(frozen=True)
class ConjunctionGame:
    """Parallel play of XOR games; the product tables are never stored."""

    components: tuple[XorGame, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise GameError("conjunction needs at least one component")
        for g in comps:
            if not isinstance(g, XorGame):
                raise GameError(f"conjunction components must be XorGame, got {type(g).__name__}")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def s_shape(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.components)

    @property
    def t_shape(self) -> tuple[int, ...]:
        return tuple(g.shape[1] for g in self.components)

    @property
    def shape(self) -> tuple[int, int]:
        return int(np.prod(self.s_shape)), int(np.prod(self.t_shape))

    @property
    def answer_arity(self) -> int:
        return 2 ** self.n

    def questions(self):
        """Product question tuples ``(s_1..s_n), (t_1..t_n)`` in row-major order."""
        s = list(itertools.product(*(range(k) for k in self.s_shape)))
        t = list(itertools.product(*(range(k) for k in self.t_shape)))
        return s, t

    def s_labels(self) -> tuple[str, ...]:
        return tuple(SEP.join(p) for p in itertools.product(*(g.s_labels for g in self.components)))

    def t_labels(self) -> tuple[str, ...]:
        return tuple(SEP.join(p) for p in itertools.product(*(g.t_labels for g in self.components)))

    def coordinate_wins(self, s: Sequence[int], t: Sequence[int], a: int, b: int) -> list[bool]:
        """Per-coordinate win flags ``a_j xor b_j == f_j(s_j, t_j)``.

        Answers are n-bit integers; bit ``j`` (most significant first) is coordinate ``j``.
        """
        n = self.n
        out = []
        for j, g in enumerate(self.components):
            shift = n - 1 - j
            aj = (a >> shift) & 1
            bj = (b >> shift) & 1
            out.append(bool((aj ^ bj) == g.f[s[j], t[j]]))
        return out

    def _product_table(self, weighted: bool) -> np.ndarray:
        out = np.ones((1, 1, 1, 1))
        bits = np.arange(2)
        for g in self.components:
            win = ((bits[:, None, None, None] ^ bits[None, :, None, None]) == g.f[None, None])
            local = win.astype(float).transpose(2, 0, 3, 1)
            if weighted:
                local = local * g.pi[:, None, :, None]
            ns, na, nt, nb = out.shape
            ls, la, lt, lb = local.shape
            out = np.einsum("ijkl,mnop->imjnkolp", out, local).reshape(
                ns * ls, na * la, nt * lt, nb * lb)
        return out

    def gain(self) -> np.ndarray:
        """Weighted win table ``W[s, a, t, b]`` over flattened product questions and n-bit answers.

        Both ``pi`` and the all-coordinates-win indicator factor across components,
        so the table is the outer product of the per-component tables. Questions
        are row-major over components; answer bit ``j`` (MSB first) is coordinate ``j``.
        """
        return self._product_table(weighted=True)

    def pi(self) -> np.ndarray:
        out = np.ones((1, 1))
        for g in self.components:
            out = np.kron(out, g.pi)
        return out


# --- constructors -----------------------------------------------------------

def xor_game_from_tables(pi, f, s_labels=None, t_labels=None) -> XorGame:
    pi = np.asarray(pi, dtype=float)
    f = np.asarray(f)
    if pi.shape != f.shape or pi.ndim != 2:
        raise GameError(f"pi shape {pi.shape} does not match f shape {f.shape}")
    if not np.all((f == 0) | (f == 1)):
        raise GameError("f entries must be bits")
    _check_distribution(pi)
    return XorGame(pi * np.where(f == 1, -1.0, 1.0), s_labels, t_labels)


def trivial_game() -> XorGame:
    """The one-question game with f = 0; identity for ``xor_sum`` and bias 1."""
    return XorGame([[1.0]])


def xor_sum(g1: XorGame, g2: XorGame) -> XorGame:
    """Sum modulo 2: target is ``f1 xor f2``, questions are pairs, cost is ``A1 (x) A2``."""
    s = [f"{a}{SEP}{b}" for a in g1.s_labels for b in g2.s_labels]
    t = [f"{a}{SEP}{b}" for a in g1.t_labels for b in g2.t_labels]
    return XorGame(np.kron(g1.cost, g2.cost), s, t)


def xor_sum_all(games: Sequence[XorGame]) -> XorGame:
    """Fold ``xor_sum`` over a list; the empty sum is the trivial game."""
    if not games:
        return trivial_game()
    out = games[0]
    for g in games[1:]:
        out = xor_sum(out, g)
    return out


def transpose(g: XorGame) -> XorGame:
    return XorGame(g.cost.T, g.t_labels, g.s_labels)


def convex_combine(lam: float, g1: XorGame, g2: XorGame) -> XorGame:
    """Play ``g1`` with probability ``lam``, else ``g2``, both players told which.

    Cost matrix ``[[0, lam A1], [(1-lam) A2, 0]]``: rows are ``S1`` then ``S2``,
    columns ``T2`` then ``T1``.
    """
    if not 0.0 <= lam <= 1.0:
        raise GameError(f"lambda must lie in [0, 1], got {lam}")
    (s1, t1), (s2, t2) = g1.shape, g2.shape
    cost = np.zeros((s1 + s2, t2 + t1))
    cost[:s1, t2:] = lam * g1.cost
    cost[s1:, :t2] = (1.0 - lam) * g2.cost
    rows = [f"1{SEP}{x}" for x in g1.s_labels] + [f"2{SEP}{x}" for x in g2.s_labels]
    cols = [f"2{SEP}{x}" for x in g2.t_labels] + [f"1{SEP}{x}" for x in g1.t_labels]
    return XorGame(cost, rows, cols)


def symmetrize(g: XorGame) -> XorGame:
    """``1/2 G + 1/2 G^T``; its cost matrix is ``[[0, A/2], [A^T/2, 0]]``."""
    return convex_combine(0.5, g, transpose(g))


def symmetrized_cost(g: XorGame) -> np.ndarray:
    """Symmetric block matrix ``B = [[0, A/2], [A^T/2, 0]]`` over ``S`` then ``T``."""
    ns, nt = g.shape
    b = np.zeros((ns + nt, ns + nt))
    b[:ns, ns:] = 0.5 * g.cost
    b[ns:, :ns] = 0.5 * g.cost.T
    return b


def conjunction(games: Sequence[XorGame]) -> ConjunctionGame:
    return ConjunctionGame(tuple(games))


def parity_play_probability(w1: float, w2: float) -> float:
    """Win probability of playing two XOR games independently and XOR-ing the answers."""
    for w in (w1, w2):
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"probability out of range: {w}")
    return w1 * w2 + (1.0 - w1) * (1.0 - w2)


def binary_product(g1: BinaryGame, g2: BinaryGame) -> BinaryGame:
    """Conjunction of two binary games as an explicit (small) binary game.

    Answer ``a = a1 * A2 + a2``; question ``s = s1 * |S2| + s2``.
    """
    pi = np.kron(g1.pi, g2.pi)
    v = np.einsum("abst,cduv->acbdsutv", g1.predicate, g2.predicate)
    A = g1.a_arity * g2.a_arity
    B = g1.b_arity * g2.b_arity
    v = v.reshape(A, B, pi.shape[0], pi.shape[1])
    s = [f"{x}{SEP}{y}" for x in g1.s_labels for y in g2.s_labels]
    t = [f"{x}{SEP}{y}" for x in g1.t_labels for y in g2.t_labels]
    return BinaryGame(pi, v, s, t)


def xor_as_binary(g: XorGame) -> BinaryGame:
    """View an XOR game as a binary game with ``V(a,b|s,t) = [a ^ b == f(s,t)]``."""
    bits = np.arange(2)
    v = ((bits[:, None, None, None] ^ bits[None, :, None, None]) == g.f[None, None]).astype(np.int8)
    return BinaryGame(g.pi, v, g.s_labels, g.t_labels)


def conjunction_as_binary(c: ConjunctionGame) -> BinaryGame:
    """Explicit binary game for a conjunction; answers are n-bit integers."""
    v = c._product_table(weighted=False).transpose(1, 3, 0, 2)
    return BinaryGame(c.pi(), np.rint(v).astype(np.int8), c.s_labels(), c.t_labels())


# --- built-in games ---------------------------------------------------------

def chsh() -> XorGame:
    return xor_game_from_tables(np.full((2, 2), 0.25), [[0, 0], [0, 1]])


def watrous() -> BinaryGame:
    """Binary questions and answers; accept iff ``s or a != t or b``."""
    pi = np.array([[1, 1], [1, 0]]) / 3.0
    v = np.zeros((2, 2, 2, 2), dtype=np.int8)
    for a, b, s, t in itertools.product(range(2), repeat=4):
        v[a, b, s, t] = int((s | a) != (t | b))
    return BinaryGame(pi, v)


def always_accept(shape=(2, 2), arity=(2, 2)) -> BinaryGame:
    pi = np.full(shape, 1.0 / (shape[0] * shape[1]))
    return BinaryGame(pi, np.ones(arity + tuple(shape), dtype=np.int8))


CATALOG = {"chsh": chsh, "watrous": watrous}


def catalog(name: str):
    try:
        return CATALOG[name.lower()]()
    except KeyError:
        raise GameError(f"unknown built-in game {name!r}; known: {sorted(CATALOG)}") from None


def random_xor_game(rng: np.random.Generator, max_s: int = 3, max_t: int = 3,
                    shape: tuple[int, int] | None = None) -> XorGame:
    """Random XOR game with Dirichlet-ish weights and uniform random signs."""
    if shape is None:
        shape = (int(rng.integers(1, max_s + 1)), int(rng.integers(1, max_t + 1)))
    w = rng.random(shape) + 1e-3
    signs = rng.choice([-1.0, 1.0], size=shape)
    cost = signs * w / w.sum()
    cost /= np.abs(cost).sum()
    return XorGame(cost)


# --- JSON I/O ---------------------------------------------------------------

def game_to_dict(g) -> dict:
    if isinstance(g, XorGame):
        return {"type": "xor", "S": list(g.s_labels), "T": list(g.t_labels),
                "pi": g.pi.tolist(), "f": g.f.astype(int).tolist()}
    if isinstance(g, BinaryGame):
        return {"type": "binary", "S": list(g.s_labels), "T": list(g.t_labels),
                "A": g.a_arity, "B": g.b_arity, "pi": g.pi.tolist(),
                "V": g.predicate.astype(int).tolist()}
    raise TypeError(f"cannot serialise {type(g).__name__}")


def game_from_dict(d: dict):
    kind = d.get("type")
    try:
        if kind == "xor":
            if "cost" in d:
                return XorGame(np.array(d["cost"], dtype=float), d.get("S"), d.get("T"))
            return xor_game_from_tables(d["pi"], d["f"], d.get("S"), d.get("T"))
        if kind == "binary":
            g = BinaryGame(np.array(d["pi"], dtype=float), np.array(d["V"]), d.get("S"), d.get("T"))
            if (g.a_arity, g.b_arity) != (int(d["A"]), int(d["B"])):
                raise GameError(f"declared arities ({d['A']}, {d['B']}) do not match V shape")
            return g
    except KeyError as e:
        raise GameError(f"missing field {e.args[0]!r} in {kind} game") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, GameError):
            raise
        raise GameError(f"malformed game table: {e}") from None
    raise GameError(f"unknown game type {kind!r}")


def load_game(path) -> XorGame | BinaryGame:
    with open(path, encoding="utf-8") as fh:
        return game_from_dict(json.load(fh))


def save_game(g, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(g), indent=2) + "\n", encoding="utf-8")
