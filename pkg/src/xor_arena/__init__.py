"""Classical and quantum values of two-prover XOR games."""
from .games import (
    BinaryGame,
    ConjunctionGame,
    GameError,
    XorGame,
    catalog,
    chsh,
    conjunction,
    convex_combine,
    parity_play_probability,
    transpose,
    watrous,
    xor_game_from_tables,
    xor_sum,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryGame",
    "ConjunctionGame",
    "GameError",
    "XorGame",
    "catalog",
    "chsh",
    "conjunction",
    "convex_combine",
    "parity_play_probability",
    "transpose",
    "watrous",
    "xor_game_from_tables",
    "xor_sum",
]
