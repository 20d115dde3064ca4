"""Explicit quantum strategies from unit vectors.

Alice's observable for ``x`` is ``sum_k x[k] C_k`` over anticommuting Hermitian
generators ``C_k``; Bob uses the complex conjugates ``conj(C_k)``. On the
maximally entangled state ``<psi| X (x) Y |psi> = tr(X Y^T) / d``, and
``tr(C_j C_k^dagger) = d delta_jk`` turns that into ``x . y``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .quantum import VectorStrategy

MAX_GENERATORS = 20

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Y = np.array([[0.0, -1j], [1j, 0.0]])
_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def clifford_generators(n: int) -> list[np.ndarray]:
    """``n`` pairwise anticommuting Hermitian involutions of order ``2^ceil(n/2)``.

    Jordan-Wigner chain on ``m = ceil(n/2)`` qubits: generators ``2k`` and ``2k+1``
    put ``X`` and ``Z`` on qubit ``k`` behind a string of ``Y`` on qubits ``< k``.
    Real whenever the ``Y`` string has even length.
    """
    if not 1 <= n <= MAX_GENERATORS:
        raise ValueError(f"number of generators must be in [1, {MAX_GENERATORS}], got {n}")
    m = (n + 1) // 2
    gens = []
    for k in range(m):
        for site in (_X, _Z):
            if len(gens) == n:
                break
            factors = [_Y] * k + [site] + [_I] * (m - k - 1)
            op = reduce(np.kron, factors)
            gens.append(op.real.copy() if not np.iscomplexobj(op) or np.abs(op.imag).max() == 0 else op)
    return gens


def maximally_entangled(d: int) -> np.ndarray:
    psi = np.zeros(d * d)
    psi[np.arange(d) * d + np.arange(d)] = 1.0 / np.sqrt(d)
    return psi


@dataclass(frozen=True)
class QuantumStrategy:
    alice_obs: tuple  # of (d, d) arrays, indexed by Alice question
    bob_obs: tuple

    @property
    def dim(self) -> int:
        return self.alice_obs[0].shape[0]

    @property
    def state(self) -> np.ndarray:
        return maximally_entangled(self.dim)

    def to_dict(self, s_labels=None, t_labels=None) -> dict:
        def enc(o):
            return {"real": np.real(o).tolist(), "imag": np.imag(o).tolist()}
        s_labels = s_labels or [str(i) for i in range(len(self.alice_obs))]
        t_labels = t_labels or [str(i) for i in range(len(self.bob_obs))]
        return {"type": "quantum", "dim": self.dim,
                "alice": {s: enc(o) for s, o in zip(s_labels, self.alice_obs)},
                "bob": {t: enc(o) for t, o in zip(t_labels, self.bob_obs)}}

    @classmethod
    def from_dict(cls, d: dict, s_labels=None, t_labels=None) -> "QuantumStrategy":
        def dec(e):
            return np.asarray(e["real"], dtype=float) + 1j * np.asarray(e["imag"], dtype=float)
        s_labels = s_labels or list(d["alice"])
        t_labels = t_labels or list(d["bob"])
        st = cls(tuple(dec(d["alice"][s]) for s in s_labels), tuple(dec(d["bob"][t]) for t in t_labels))
        st.validate()
        return st

    def validate(self, tol: float = 1e-10) -> None:
        d = self.dim
        eye = np.eye(d)
        for side, obs in (("alice", self.alice_obs), ("bob", self.bob_obs)):
            for k, o in enumerate(obs):
                if o.shape != (d, d):
                    raise ValueError(f"{side} observable {k} has shape {o.shape}, expected {(d, d)}")
                if np.abs(o - o.conj().T).max() > tol:
                    raise ValueError(f"{side} observable {k} is not Hermitian")
                if np.abs(o @ o - eye).max() > tol:
                    raise ValueError(f"{side} observable {k} does not square to I")


def strategy_from_vectors(vs: VectorStrategy, tol: float = 1e-8) -> QuantumStrategy:
    xs, ys = np.asarray(vs.xs, dtype=float), np.asarray(vs.ys, dtype=float)
    if xs.ndim != 2 or ys.ndim != 2 or xs.shape[1] != ys.shape[1]:
        raise ValueError("vectors must share one dimension")
    for name, v in (("x", xs), ("y", ys)):
        err = np.abs(np.linalg.norm(v, axis=1) - 1.0).max()
        if err > tol:
            raise ValueError(f"{name} vectors are not unit (norm error {err:.2e})")
    N = xs.shape[1]
    C = np.array(clifford_generators(N))
    D = np.conj(C)
    alice = tuple(np.tensordot(x, C, axes=1) for x in xs)
    bob = tuple(np.tensordot(y, D, axes=1) for y in ys)
    return QuantumStrategy(alice, bob)


def correlation(st: QuantumStrategy, s: int, t: int) -> float:
    """``<psi| X_s (x) Y_t |psi>`` on the maximally entangled state, i.e. ``tr(X_s Y_t^T) / d``."""
    try:
        X, Y = st.alice_obs[s], st.bob_obs[t]
    except IndexError:
        raise KeyError(f"no observable for question pair ({s}, {t})") from None
    return float(np.real(np.sum(X * Y)) / st.dim)


def correlation_matrix(st: QuantumStrategy) -> np.ndarray:
    return np.array([[correlation(st, s, t) for t in range(len(st.bob_obs))]
                     for s in range(len(st.alice_obs))])


def outcome_distribution(st: QuantumStrategy, s: int, t: int) -> np.ndarray:
    """Joint answer law ``P[a, b]`` from the projectors ``(I + (-1)^a O) / 2``."""
    X, Y = st.alice_obs[s], st.bob_obs[t]
    d = st.dim
    eye = np.eye(d)
    P = np.empty((2, 2))
    for a in range(2):
        pa = (eye + (-1) ** a * X) / 2.0
        for b in range(2):
            pb = (eye + (-1) ** b * Y) / 2.0
            # <psi| pa (x) pb |psi> = tr(pa pb^T) / d
            P[a, b] = np.real(np.sum(pa * pb)) / d
    if P.min() < -1e-12:
        raise ValueError(f"negative outcome probability {P.min():.3e}")
    return np.clip(P, 0.0, 1.0)


def strategy_bias(st: QuantumStrategy, g) -> float:
    """Bias ``sum_{s,t} A_st <X_s (x) Y_t>`` of the strategy on an XOR game."""
    return float(np.sum(g.cost * correlation_matrix(st)))


def save_strategy(st: QuantumStrategy, path, s_labels=None, t_labels=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(st.to_dict(s_labels, t_labels), fh)
