import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from xor_arena import sdp
from xor_arena.games import random_xor_game
from xor_arena.quantum import bias_problem

seeds = st.integers(0, 2 ** 32 - 1)


def unit_diagonal_problem(C):
    n = C.shape[0]
    pb = sdp.ProblemBuilder(C)
    for i in range(n):
        pb.add([(i, i, 1.0)], 1.0)
    return pb.build()


def test_elliptope_closed_forms():
    for n in (2, 3, 5):
        J = np.ones((n, n)) - np.eye(n)
        assert abs(sdp.solve(unit_diagonal_problem(J)).objective - n * (n - 1)) <= 1e-7
        # anti-aligned unit vectors: sum_{i != j} x_i . x_j >= -n
        assert abs(sdp.solve(unit_diagonal_problem(-J)).objective - n) <= 1e-7


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_trace_constraint_gives_top_eigenvalue(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    C = rng.standard_normal((n, n))
    C = C + C.T
    pb = sdp.ProblemBuilder(C)
    pb.add([(i, i, 1.0) for i in range(n)], 1.0)
    sol = sdp.solve(pb.build())
    assert sol.status == "optimal"
    assert abs(sol.objective - np.linalg.eigvalsh(C)[-1]) <= 1e-7


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_linear_block_against_linprog(seed):
    # max c.x s.t. G x + s = h, x, s >= 0, with a dummy 1x1 PSD block fixed to 1
    rng = np.random.default_rng(seed)
    k, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    c = rng.standard_normal(k)
    G = rng.random((m, k)) + 0.1
    h = rng.random(m) + 0.5
    pb = sdp.ProblemBuilder(np.zeros((1, 1)))
    pb.add([(0, 0, 1.0)], 1.0)
    xs = [pb.add_lin_var(c[j]) for j in range(k)]
    for i in range(m):
        slack = pb.add_lin_var()
        pb.add([], h[i], lin=[(xs[j], G[i, j]) for j in range(k)] + [(slack, 1.0)])
    sol = sdp.solve(pb.build())
    ref = linprog(-c, A_ub=G, b_ub=h, bounds=[(0, None)] * k)
    assert sol.status == "optimal"
    assert abs(sol.objective + ref.fun) <= 1e-7


def test_off_diagonal_entries_are_symmetric():
    pb = sdp.ProblemBuilder(np.zeros((2, 2)))
    pb.add([(0, 1, 0.5)], 0.3)
    p = pb.build()
    X = np.array([[1.0, 0.3], [0.3, 1.0]])
    assert np.isclose(p.apply(X)[0], 0.3)
    assert np.allclose(p.adjoint(np.array([2.0])), [[0, 1], [1, 0]])


def test_rejects_asymmetric_constraint():
    with pytest.raises(ValueError):
        sdp.SdpProblem(np.eye(2), [np.array([[1.0, 1.0], [0.0, 1.0]])], [1.0])


def test_residuals_are_recomputed():
    p = bias_problem(random_xor_game(np.random.default_rng(1)))
    sol = sdp.solve(p)
    pobj, dobj, pinf, dinf, _, _ = sdp.residuals(p, sol.X, sol.x_lin, sol.y)
    assert (pobj, dobj, pinf, dinf) == (sol.primal_objective, sol.dual_objective,
                                       sol.primal_infeas, sol.dual_infeas)
    assert sol.gap <= 1e-8 and pinf <= 1e-8 and dinf <= 1e-8


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_bias_sdp_against_cvxpy(seed):
    cp = pytest.importorskip("cvxpy")
    g = random_xor_game(np.random.default_rng(seed), 4, 4)
    p = bias_problem(g)
    n = p.n
    X = cp.Variable((n, n), PSD=True)
    prob = cp.Problem(cp.Maximize(cp.trace(p.C @ X)), [cp.diag(X) == 1])
    prob.solve(solver="CLARABEL")
    assert abs(sdp.solve(p).objective - prob.value) <= 1e-6


def test_gram_factor_and_min_eig():
    rng = np.random.default_rng(3)
    V = rng.standard_normal((5, 2))
    X = V @ V.T
    F = sdp.gram_factor(X)
    assert F.shape == (5, 2) and np.allclose(F @ F.T, X)
    assert sdp.min_eigenvalue(np.diag([3.0, -1.0])) == -1.0
    with pytest.raises(ValueError):
        sdp.gram_factor(np.diag([1.0, -1.0]))


def test_dump(tmp_path):
    p = unit_diagonal_problem(np.eye(2))
    p.dump(tmp_path / "p.json")
    d = json.loads((tmp_path / "p.json").read_text())
    assert d["n"] == 2 and d["m"] == 2


def test_infeasible_problem_is_not_reported_optimal():
    pb = sdp.ProblemBuilder(np.eye(1))
    pb.add([(0, 0, 1.0)], -1.0)
    assert sdp.solve(pb.build(), max_iter=60).status != "optimal"
