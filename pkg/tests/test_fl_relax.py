import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_binary_game
from xor_arena.classical import classical_value
from xor_arena.fl_relax import (MAX_QUESTIONS, RelaxationError, build_chat, fl_conjunction_check,
                                sigma, sigma_bar, sigma_reduction)
from xor_arena.games import BinaryGame, always_accept, chsh, random_xor_game, watrous
from xor_arena.quantum import quantum_value

seeds = st.integers(0, 2 ** 32 - 1)


def cvxpy_oracle(g, bar):
    """Direct formulation in the full variable P, solved by an external conic solver."""
    cp = pytest.importorskip("cvxpy")
    fm = build_chat(g)
    n = fm.chat.shape[0]
    P = cp.Variable((n, n), PSD=True)
    blocks = [("S", [fm.index("S", s, a) for a in range(2)]) for s in range(fm.ns)]
    blocks += [("T", [fm.index("T", t, a) for a in range(2)]) for t in range(fm.nt)]
    cons = []
    for (su, iu), (sv, iv) in itertools.combinations_with_replacement(blocks, 2):
        entries = cp.hstack([P[i, j] for i in iu for j in iv])
        if not bar:
            cons += [entries >= 0, cp.sum(entries) == 1]
        elif su != sv:
            cons += [entries >= 0]
        else:
            cons += [cp.sum(cp.abs(entries)) <= 1]
    prob = cp.Problem(cp.Maximize(cp.trace(fm.chat @ P)), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


@given(seeds)
@settings(max_examples=8, deadline=None)
def test_against_external_solver(seed):
    g = random_binary_game(np.random.default_rng(seed), zeros=bool(seed % 2))
    assert abs(sigma(g) - cvxpy_oracle(g, False)) <= 2e-6
    assert abs(sigma_bar(g) - cvxpy_oracle(g, True)) <= 2e-6


def test_chsh_and_watrous():
    t = (1 + 1 / np.sqrt(2)) / 2
    assert abs(sigma(chsh()) - t) <= 1e-7 and abs(sigma_bar(chsh()) - t) <= 1e-7
    w = watrous()
    assert 2 / 3 - 1e-7 <= sigma(w) <= sigma_bar(w) + 1e-7


def test_always_accept():
    assert abs(sigma(always_accept()) - 1) <= 1e-7
    assert abs(sigma_bar(always_accept((3, 2))) - 1) <= 1e-7


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_ordering(seed):
    g = random_binary_game(np.random.default_rng(seed), zeros=True)
    s, sb = sigma(g), sigma_bar(g)
    assert classical_value(g)[0] <= s + 1e-7 <= sb + 2e-7


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_equal_quantum_value_on_xor_games(seed):
    g = random_xor_game(np.random.default_rng(seed), 3, 3)
    wq = quantum_value(g)
    assert abs(sigma(g) - wq) <= 1e-6 and abs(sigma_bar(g) - wq) <= 1e-6


def test_reduction_shape():
    fm = build_chat(chsh())
    V = sigma_reduction(fm)
    assert V.shape == (5, 8)
    # columns of a question block sum to the shared vector e
    assert np.allclose(V[:, 0] + V[:, 1], np.eye(5)[0])


def test_conjunction_check():
    r = fl_conjunction_check([chsh(), chsh()])
    assert abs(r.gap) <= 1e-6
    assert abs(r.product_quantum - ((1 + 1 / np.sqrt(2)) / 2) ** 2) <= 1e-8
    assert set(r.to_dict()) == {"sigma_bar", "product_quantum_value", "difference", "solver_gap"}
    with pytest.raises(RelaxationError):
        fl_conjunction_check([chsh()] * 3)


def test_rejections():
    wide = BinaryGame(np.full((1, 1), 1.0), np.ones((3, 3, 1, 1)))
    with pytest.raises(RelaxationError):
        sigma(wide)
    big = BinaryGame(np.full((MAX_QUESTIONS, 1), 1 / MAX_QUESTIONS), np.ones((2, 2, MAX_QUESTIONS, 1)))
    with pytest.raises(RelaxationError):
        sigma(big)
