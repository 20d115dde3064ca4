import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xor_arena import simulate as sim
from xor_arena.classical import DeterministicStrategy, classical_value
from xor_arena.games import always_accept, chsh, conjunction, trivial_game, watrous, xor_sum
from xor_arena.quantum import quantum_bias
from xor_arena.tsirelson import outcome_distribution, strategy_from_vectors

W_Q = (1 + 1 / np.sqrt(2)) / 2


@pytest.fixture(scope="module")
def chsh_strategies():
    g = chsh()
    qs = strategy_from_vectors(quantum_bias(g).vectors)
    return sim.deterministic(classical_value(g)[1]), sim.quantum(qs), qs


def within(rep, target, k=5.0):
    se = max(rep.stderr, np.sqrt(target * (1 - target) / rep.trials))
    return abs(rep.estimate - target) <= k * se


def test_reproducible_and_shard_dependent(chsh_strategies):
    _, q, _ = chsh_strategies
    a = sim.play(q, chsh(), 50000, seed=11)
    assert a == sim.play(q, chsh(), 50000, seed=11)
    assert a != sim.play(q, chsh(), 50000, seed=12)
    b = sim.play(q, chsh(), 50000, seed=11, shards=4)
    assert b == sim.play(q, chsh(), 50000, seed=11, shards=4) and b.shards == 4


def test_report_json(chsh_strategies):
    d, _, _ = chsh_strategies
    rep = sim.play(d, chsh(), 1000, seed=1)
    back = sim.SimReport.from_dict(json.loads(rep.to_json()))
    assert back == rep
    assert set(json.loads(rep.to_json())) == {"trials", "wins", "estimate", "stderr", "seed", "shards"}


@pytest.mark.parametrize("s,t", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_quantum_sampling_law(chsh_strategies, s, t):
    _, q, qs = chsh_strategies
    n = 100000
    rng = np.random.default_rng(5)
    a, b = q.sample(np.full(n, s), np.full(n, t), rng)
    counts = np.bincount(2 * a + b, minlength=4) / n
    P = outcome_distribution(qs, s, t).ravel()
    se = np.sqrt(P * (1 - P) / n)
    assert np.all(np.abs(counts - P) <= 5 * se + 1e-12)


def test_always_accept_wins_every_round():
    st_ = sim.deterministic(DeterministicStrategy((1, 0), (0, 1)))
    rep = sim.play(st_, always_accept(), 5000, seed=3)
    assert rep.estimate == 1.0 and rep.stderr == 0.0


def test_classical_conjunction_rates(chsh_strategies):
    d, q, _ = chsh_strategies
    c = conjunction([chsh(), chsh()])
    assert within(sim.play(sim.combine_independent([d, d]), c, 200000, seed=4), 9 / 16)
    assert within(sim.play(sim.combine_independent([q, q]), c, 200000, seed=4), W_Q ** 2)
    # an optimal joint strategy beats independent play
    assert within(sim.play(sim.deterministic(classical_value(c)[1], 4), c, 200000, seed=4), 10 / 16)


def test_single_component_composition_matches_underlying(chsh_strategies):
    _, q, _ = chsh_strategies
    base = sim.play(q, chsh(), 20000, seed=9)
    assert sim.play(sim.combine_independent([q]), conjunction([chsh()]), 20000, seed=9) == base
    assert sim.play(sim.combine_parity([q], [0]), chsh(), 20000, seed=9) == base


def test_parity_composition(chsh_strategies):
    _, q, _ = chsh_strategies
    rep = sim.play(sim.combine_parity([q, q], [0, 1]), xor_sum(chsh(), chsh()), 200000, seed=6)
    assert within(rep, (1 + 0.5) / 2)
    empty = sim.combine_parity([q, q], [])
    assert sim.play(empty, trivial_game(), 100, seed=0).wins == 100
    with pytest.raises(sim.StrategyError):
        sim.combine_parity([q], [1])


@given(st.integers(0, 2 ** 16))
@settings(max_examples=20, deadline=None)
def test_per_trial_subset_identity(seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, (200, int(rng.integers(1, 6))))
    assert np.array_equal(sim.subset_parity_average(x), (~x.any(axis=1)).astype(float))


def test_trace_matches_play(chsh_strategies):
    d, q, _ = chsh_strategies
    c = conjunction([chsh()] * 3)
    st_ = sim.combine_independent([q, d, q])
    rep, x = sim.play_trace(st_, c, 30000, seed=8)
    assert rep == sim.play(st_, c, 30000, seed=8)
    assert int((~x.any(axis=1)).sum()) == rep.wins


def test_binary_game_and_errors(chsh_strategies):
    d, _, _ = chsh_strategies
    w = watrous()
    rep = sim.play(sim.deterministic(classical_value(w)[1]), w, 100000, seed=2)
    assert within(rep, 2 / 3)
    with pytest.raises(sim.StrategyError):
        sim.play(d, conjunction([chsh(), chsh()]), 10, seed=0)
    with pytest.raises(ValueError):
        sim.play(d, chsh(), 0, seed=0)
    with pytest.raises(sim.StrategyError):
        sim.deterministic(DeterministicStrategy((2, 0), (0, 0)))
    with pytest.raises(sim.StrategyError):
        sim.combine_independent([sim.deterministic(DeterministicStrategy((0,), (0,)), arity=4)])


def test_strategy_from_dict(chsh_strategies):
    d = {"alice": {"0": 0, "1": 1}, "bob": {"0": 0, "1": 0}}
    st_ = sim.strategy_from_dict(d, chsh())
    assert st_.kind == "deterministic"
    _, _, qs = chsh_strategies
    assert sim.strategy_from_dict(qs.to_dict(), chsh()).kind == "quantum"
    with pytest.raises(sim.StrategyError):
        sim.strategy_from_dict({"type": "magic"}, chsh())
