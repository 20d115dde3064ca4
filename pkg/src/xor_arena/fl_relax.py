"""Feige-Lovasz style SDP relaxations of the classical value.

``P`` is indexed by (question, answer) pairs: every ``(s, a)`` for ``s in S``
(answer inner), then every ``(t, b)`` for ``t in T``. Objective ``Tr(Chat P)``
with ``Chat = 1/2 [[0, C], [C^T, 0]]`` and ``C[(s,a),(t,b)] = pi(s,t) V(a,b|s,t)``.

sigma:      block sums ``sum_{a,b} P[(u,a),(v,b)] = 1`` for all question pairs
            ``u, v in S u T`` (including ``u = v``), ``P >= 0`` entrywise, ``P`` PSD.
            Solved in a reduced variable, see :func:`sigma_reduction`.
sigma_bar:  ``sum_{a,b} |P[(u,a),(v,b)]| <= 1`` for same-side pairs only,
            ``P >= 0`` on the cross blocks, ``P`` PSD.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sdp
from .games import BinaryGame, XorGame, conjunction, conjunction_as_binary, xor_as_binary

MAX_QUESTIONS = 50


class RelaxationError(RuntimeError):
    pass


@dataclass(frozen=True)
class FlMatrix:
    chat: np.ndarray
    ns: int
    nt: int
    arity: int

    def index(self, side: str, q: int, a: int) -> int:
        base = 0 if side == "S" else self.ns * self.arity
        return base + q * self.arity + a


def _as_binary(g) -> BinaryGame:
    if isinstance(g, XorGame):
        return xor_as_binary(g)
    if isinstance(g, BinaryGame):
        return g
    raise TypeError(f"unsupported game type {type(g).__name__}")


def build_chat(g, allow_wide: bool = False) -> FlMatrix:
    b = _as_binary(g)
    k = b.a_arity
    if b.b_arity != k:
        raise RelaxationError(f"answer arities differ ({b.a_arity}, {b.b_arity})")
    if k != 2 and not allow_wide:
        raise RelaxationError(f"relaxations need binary answers, got arity {k}")
    ns, nt = b.shape
    C = b.gain().reshape(ns * k, nt * k)  # gain is [s, a, t, b]
    order = k * (ns + nt)
    chat = np.zeros((order, order))
    chat[:ns * k, ns * k:] = 0.5 * C
    chat[ns * k:, :ns * k] = 0.5 * C.T
    return FlMatrix(chat, ns, nt, k)


def _blocks(fm: FlMatrix):
    """Question slots as ``(side, index list into P)``."""
    k = fm.arity
    out = [("S", [fm.index("S", s, a) for a in range(k)]) for s in range(fm.ns)]
    out += [("T", [fm.index("T", t, a) for a in range(k)]) for t in range(fm.nt)]
    return out


def sigma_reduction(fm: FlMatrix) -> np.ndarray:
    """Linear map ``V`` with every feasible ``P`` of sigma equal to ``V^T Q V``.

    The block-sum constraints force ``sum_a x_u^a`` to be one shared unit vector
    ``e`` for every question ``u``, so ``P`` is never strictly feasible. Writing
    ``x_u^{k-1} = e - sum_{a<k-1} x_u^a`` and optimising over the Gram matrix
    ``Q`` of ``(e, x_u^a for a < k-1)`` with ``Q[e, e] = 1`` describes the same
    feasible set and has interior points.
    """
    k = fm.arity
    nq = fm.ns + fm.nt
    V = np.zeros((1 + nq * (k - 1), nq * k))
    for u in range(nq):
        for a in range(k - 1):
            V[1 + u * (k - 1) + a, u * k + a] = 1.0
        col = u * k + k - 1
        V[0, col] = 1.0
        V[1 + u * (k - 1):1 + (u + 1) * (k - 1), col] = -1.0
    return V


def sigma_problem(fm: FlMatrix) -> sdp.SdpProblem:
    """sigma in the reduced variable ``Q``; entrywise ``P >= 0`` via nonnegative slacks."""
    V = sigma_reduction(fm)
    pb = sdp.ProblemBuilder(V @ fm.chat @ V.T)
    pb.add([(0, 0, 1.0)], 1.0)
    n = fm.chat.shape[0]
    nz = [np.flatnonzero(V[:, i]) for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        # P_ij = v_i^T Q v_j as a symmetric coefficient matrix on Q
        coef = {}
        for r in nz[i]:
            for c in nz[j]:
                key = (min(r, c), max(r, c))
                val = 0.5 * V[r, i] * V[c, j]
                coef[key] = coef.get(key, 0.0) + (2.0 * val if r == c else val)
        entries = [(r, c, v) for (r, c), v in coef.items() if v != 0.0]
        w = pb.add_lin_var()
        pb.add(entries, 0.0, lin=[(w, -1.0)])
    return pb.build()


def sigma_bar_problem(fm: FlMatrix) -> sdp.SdpProblem:
    pb = sdp.ProblemBuilder(fm.chat)
    blocks = _blocks(fm)
    for (su, iu), (sv, iv) in itertools.combinations_with_replacement(blocks, 2):
        if su != sv:
            # cross block: entrywise nonnegative
            for i in iu:
                for j in iv:
                    w = pb.add_lin_var()
                    pb.add([(i, j, 0.5)], 0.0, lin=[(w, -1.0)])
            continue
        if iu is iv:
            diag = [(i, i, 1.0) for i in iu]
            pairs = list(itertools.combinations(iu, 2))
            mult = 2.0
        else:
            diag = []
            pairs = [(i, j) for i in iu for j in iv]
            mult = 1.0
        abs_terms = []
        for i, j in pairs:
            # -u <= P_ij <= u with explicit slacks; splitting P_ij = p+ - p- instead
            # leaves the dual without interior points when the block bound is slack
            u, up, lo = pb.add_lin_var(), pb.add_lin_var(), pb.add_lin_var()
            pb.add([(i, j, 0.5)], 0.0, lin=[(u, -1.0), (up, 1.0)])
            pb.add([(i, j, 0.5)], 0.0, lin=[(u, 1.0), (lo, -1.0)])
            abs_terms.append((u, mult))
        slack = pb.add_lin_var()
        pb.add(diag, 1.0, lin=abs_terms + [(slack, 1.0)])
    return pb.build()


def _solve(problem: sdp.SdpProblem, tol: float, max_iter: int = 150) -> sdp.SdpSolution:
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise RelaxationError(f"relaxation SDP did not converge ({sol.status}): gap={sol.gap:.2e} "
                              f"pinf={sol.primal_infeas:.2e} dinf={sol.dual_infeas:.2e}")
    return sol


def _check_size(fm: FlMatrix) -> None:
    if fm.ns + fm.nt > MAX_QUESTIONS:
        raise RelaxationError(f"|S| + |T| = {fm.ns + fm.nt} exceeds {MAX_QUESTIONS}")


def sigma_solution(g, tol: float = 1e-7) -> sdp.SdpSolution:
    fm = build_chat(g)
    _check_size(fm)
    return _solve(sigma_problem(fm), tol)


def sigma_bar_solution(g, tol: float = 1e-7, allow_wide: bool = False) -> sdp.SdpSolution:
    fm = build_chat(g, allow_wide=allow_wide)
    _check_size(fm)
    return _solve(sigma_bar_problem(fm), tol)


def sigma(g, tol: float = 1e-7) -> float:
    return sigma_solution(g, tol).objective


def sigma_bar(g, tol: float = 1e-7) -> float:
    return sigma_bar_solution(g, tol).objective


@dataclass(frozen=True)
class ConjunctionReport:
    sigma_bar: float
    product_quantum: float
    solver_gap: float

    @property
    def gap(self) -> float:
        return self.sigma_bar - self.product_quantum

    def to_dict(self) -> dict:
        return {"sigma_bar": self.sigma_bar, "product_quantum_value": self.product_quantum,
                "difference": self.gap, "solver_gap": self.solver_gap}


def fl_conjunction_check(games: Sequence[XorGame], tol: float = 1e-7) -> ConjunctionReport:
    """Compare ``sigma_bar`` of the conjunction (answers widened to n-bit strings) with ``prod omega_q``."""
    from .quantum import quantum_value

    if not 1 <= len(games) <= 2:
        raise RelaxationError("conjunction check supports at most two components")
    c = conjunction(games)
    ns, nt = c.shape
    if ns > MAX_QUESTIONS or nt > MAX_QUESTIONS:
        raise RelaxationError(f"product question space {ns}x{nt} exceeds {MAX_QUESTIONS} per side")
    sol = sigma_bar_solution(conjunction_as_binary(c), tol, allow_wide=True)
    prod = 1.0
    for g in games:
        prod *= quantum_value(g, tol)
    return ConjunctionReport(sol.objective, prod, sol.gap)
