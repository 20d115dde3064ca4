import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xor_arena.games import chsh, random_xor_game
from xor_arena.quantum import VectorStrategy, quantum_bias
from xor_arena.tsirelson import (MAX_GENERATORS, QuantumStrategy, clifford_generators, correlation,
                                 correlation_matrix, maximally_entangled, outcome_distribution,
                                 save_strategy, strategy_bias, strategy_from_vectors)


@pytest.mark.parametrize("n", range(1, 11))
def test_generators_anticommute(n):
    C = clifford_generators(n)
    d = 2 ** ((n + 1) // 2)
    assert len(C) == n and all(c.shape == (d, d) for c in C)
    I = np.eye(d)
    for j, a in enumerate(C):
        assert np.allclose(a, a.conj().T) and np.allclose(a @ a, I)
        for b in C[j + 1:]:
            assert np.abs(a @ b + b @ a).max() == 0
            assert abs(np.trace(a @ b.conj().T)) == 0


def test_generator_limits():
    for bad in (0, MAX_GENERATORS + 1):
        with pytest.raises(ValueError):
            clifford_generators(bad)


def test_state_correlation_formula():
    # <psi| X (x) Y |psi> against the explicit state vector
    rng = np.random.default_rng(2)
    xs = rng.standard_normal((2, 3))
    ys = rng.standard_normal((2, 3))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    stg = strategy_from_vectors(VectorStrategy(xs, ys))
    psi = maximally_entangled(stg.dim)
    for s in range(2):
        for t in range(2):
            direct = np.real(psi.conj() @ np.kron(stg.alice_obs[s], stg.bob_obs[t]) @ psi)
            assert abs(direct - correlation(stg, s, t)) <= 1e-12
            assert abs(direct - xs[s] @ ys[t]) <= 1e-12


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=15, deadline=None)
def test_round_trip_from_sdp(seed):
    g = random_xor_game(np.random.default_rng(seed), 4, 4)
    r = quantum_bias(g)
    stg = strategy_from_vectors(r.vectors)
    assert abs(strategy_bias(stg, g) - r.bias) <= 1e-6
    assert np.abs(correlation_matrix(stg) - r.vectors.correlations()).max() <= 1e-10


def test_outcome_distribution_law():
    stg = strategy_from_vectors(quantum_bias(chsh()).vectors)
    for s in range(2):
        for t in range(2):
            P = outcome_distribution(stg, s, t)
            assert abs(P.sum() - 1) <= 1e-12
            assert np.allclose(P.sum(axis=1), 0.5) and np.allclose(P.sum(axis=0), 0.5)
            assert abs((P[0, 0] + P[1, 1] - P[0, 1] - P[1, 0]) - correlation(stg, s, t)) <= 1e-12


def test_rejects_non_unit_vectors():
    with pytest.raises(ValueError):
        strategy_from_vectors(VectorStrategy(np.array([[1.0, 1.0]]), np.array([[1.0, 0.0]])))
    with pytest.raises(KeyError):
        correlation(strategy_from_vectors(VectorStrategy(np.eye(2), np.eye(2))), 5, 0)


def test_json_round_trip(tmp_path):
    stg = strategy_from_vectors(quantum_bias(chsh()).vectors)
    save_strategy(stg, tmp_path / "s.json")
    d = json.loads((tmp_path / "s.json").read_text())
    assert d["type"] == "quantum" and d["dim"] == stg.dim
    back = QuantumStrategy.from_dict(d)
    assert all(np.allclose(a, b) for a, b in zip(back.alice_obs, stg.alice_obs))
    d["alice"]["0"]["real"][0][0] = 3.0
    with pytest.raises(ValueError):
        QuantumStrategy.from_dict(d)


def test_small_examples():
    one = strategy_from_vectors(VectorStrategy(np.array([[1.0]]), np.array([[1.0]])))
    assert correlation(one, 0, 0) == 1.0
    perp = strategy_from_vectors(VectorStrategy(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])))
    assert abs(correlation(perp, 0, 0)) <= 1e-15
    P = outcome_distribution(perp, 0, 0)
    assert np.allclose(P, 0.25)
    st_ = strategy_from_vectors(quantum_bias(chsh()).vectors)
    P = outcome_distribution(st_, 1, 1)
    assert abs(P[0, 1] + P[1, 0] - (1 + 1 / np.sqrt(2)) / 2) <= 1e-8


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=20, deadline=None)
def test_marginals_do_not_signal(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 9))
    xs = rng.standard_normal((int(rng.integers(1, 5)), N))
    ys = rng.standard_normal((int(rng.integers(1, 5)), N))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    st_ = strategy_from_vectors(VectorStrategy(xs, ys))
    assert np.abs(correlation_matrix(st_) - xs @ ys.T).max() <= 1e-10
    for s in range(len(xs)):
        alice = [outcome_distribution(st_, s, t).sum(axis=1) for t in range(len(ys))]
        assert np.abs(np.array(alice) - alice[0]).max() <= 1e-10
