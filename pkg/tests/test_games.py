import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xor_arena.games import (BinaryGame, GameError, XorGame, always_accept, binary_product, catalog,
                             chsh, conjunction, conjunction_as_binary, convex_combine,
                             game_from_dict, game_to_dict, load_game, parity_play_probability,
                             random_xor_game, save_game, symmetrize, symmetrized_cost, transpose,
                             trivial_game, watrous, xor_as_binary, xor_game_from_tables, xor_sum,
                             xor_sum_all)

seeds = st.integers(0, 2 ** 32 - 1)


def test_chsh_cost_matrix():
    assert np.array_equal(chsh().cost, np.array([[1, 1], [1, -1]]) / 4)
    assert chsh().s_labels == ("0", "1")


def test_cost_must_be_normalised():
    with pytest.raises(GameError):
        XorGame(np.array([[0.5, 0.4]]))


def test_rejects_bad_tables():
    with pytest.raises(GameError):
        xor_game_from_tables([[0.5, 0.5]], [[0, 2]])
    with pytest.raises(GameError):
        xor_game_from_tables([[1.5, -0.5]], [[0, 0]])
    with pytest.raises(GameError):
        xor_game_from_tables([[0.5, 0.5]], [[0, 1]], s_labels=["a", "b"])


def test_zero_rows_are_flagged_not_rejected():
    g = xor_game_from_tables([[0.5, 0.5], [0.0, 0.0]], [[0, 0], [0, 0]])
    assert g.diagnostics() == ["Alice question '1' is never asked"]


@given(seeds, seeds)
def test_xor_sum_is_kronecker(a, b):
    g1 = random_xor_game(np.random.default_rng(a))
    g2 = random_xor_game(np.random.default_rng(b))
    g = xor_sum(g1, g2)
    assert np.allclose(g.cost, np.kron(g1.cost, g2.cost))
    ns2, nt2 = g2.shape
    for s1, s2, t1, t2 in np.ndindex(g1.shape[0], ns2, g1.shape[1], nt2):
        f = g.f[s1 * ns2 + s2, t1 * nt2 + t2]
        assert f == g1.f[s1, t1] ^ g2.f[s2, t2]
    assert g.s_labels[0] == g1.s_labels[0] + "|" + g2.s_labels[0]


def test_empty_xor_sum_is_trivial():
    assert xor_sum_all([]) == trivial_game()
    assert trivial_game().cost.tolist() == [[1.0]]


@given(seeds)
def test_transpose_involution(a):
    g = random_xor_game(np.random.default_rng(a))
    assert transpose(transpose(g)) == g
    assert np.array_equal(transpose(g).cost, g.cost.T)


@given(seeds, seeds, st.floats(0, 1))
def test_convex_combination_layout(a, b, lam):
    g1 = random_xor_game(np.random.default_rng(a))
    g2 = random_xor_game(np.random.default_rng(b))
    g = convex_combine(lam, g1, g2)
    (s1, t1), (s2, t2) = g1.shape, g2.shape
    assert g.shape == (s1 + s2, t2 + t1)
    assert np.allclose(g.cost[:s1, t2:], lam * g1.cost)
    assert np.allclose(g.cost[s1:, :t2], (1 - lam) * g2.cost)
    assert np.all(g.cost[:s1, :t2] == 0) and np.all(g.cost[s1:, t2:] == 0)


def test_convex_rejects_bad_lambda():
    with pytest.raises(GameError):
        convex_combine(1.5, chsh(), chsh())


def test_symmetrized_cost():
    B = symmetrized_cost(chsh())
    assert np.allclose(B, B.T)
    assert np.allclose(B[:2, 2:], chsh().cost / 2)
    assert symmetrize(chsh()).shape == (4, 4)


def test_parity_play():
    assert parity_play_probability(0.75, 0.75) == 0.625
    assert parity_play_probability(1.0, 0.3) == 0.3
    with pytest.raises(ValueError):
        parity_play_probability(1.2, 0.5)


def test_conjunction_structure():
    c = conjunction([chsh(), chsh()])
    assert c.shape == (4, 4) and c.answer_arity == 4
    s, t = c.questions()
    assert s[1] == (0, 1)
    # answer 0b10: coordinate 0 answers 1, coordinate 1 answers 0
    assert c.coordinate_wins((1, 1), (1, 0), 0b10, 0b00) == [True, True]
    # every question pair has 2 winning answer pairs per coordinate, so 4 of 16 overall
    assert np.isclose(c.gain().sum(), 4.0)
    assert np.isclose(c.pi().sum(), 1.0)


def test_conjunction_as_binary_matches_gain():
    c = conjunction([chsh(), chsh()])
    b = conjunction_as_binary(c)
    assert np.allclose(b.gain(), c.gain())


def test_binary_views():
    b = xor_as_binary(chsh())
    assert b.predicate[1, 1, 1, 1] == 0 and b.predicate[1, 0, 1, 1] == 1
    p = binary_product(watrous(), watrous())
    assert p.shape == (4, 4) and p.a_arity == 4
    assert always_accept().predicate.all()


def test_watrous_rule():
    w = watrous()
    assert w.pi[1, 1] == 0
    # accept iff (s or a) != (t or b)
    assert w.predicate[0, 1, 0, 0] == 1 and w.predicate[0, 0, 0, 0] == 0


@given(seeds)
@settings(max_examples=25)
def test_json_round_trip(a):
    g = random_xor_game(np.random.default_rng(a))
    assert game_from_dict(json.loads(json.dumps(game_to_dict(g)))) == g


def test_json_formats(tmp_path):
    path = tmp_path / "g.json"
    save_game(watrous(), path)
    w = load_game(path)
    assert isinstance(w, BinaryGame) and np.array_equal(w.predicate, watrous().predicate)
    g = game_from_dict({"type": "xor", "cost": [[0.25, 0.25], [0.25, -0.25]]})
    assert g == chsh()
    with pytest.raises(GameError):
        game_from_dict({"type": "binary", "S": [0], "T": [0], "A": 3, "B": 2, "pi": [[1]],
                        "V": [[[[1]], [[1]]], [[[1]], [[1]]]]})
    with pytest.raises(GameError):
        game_from_dict({"type": "xor", "pi": [[1]]})
    with pytest.raises(GameError):
        game_from_dict({"type": "ternary"})


def test_catalog():
    assert catalog("CHSH") == chsh()
    with pytest.raises(GameError):
        catalog("nope")
