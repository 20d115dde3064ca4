"""Quantum bias of XOR games via the diagonal-constrained SDP and its dual.

For cost matrix ``A`` the bias is the optimum of ``max <B, X> : diag(X) = 1, X PSD``
over the symmetric block matrix ``B = [[0, A/2], [A^T/2, 0]]``. The dual is
``min sum(w) : Diag(w) - B PSD``; a feasible ``w`` split as ``(x, y)`` over
``S`` and ``T`` is a :class:`DualCertificate`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import sdp
from .games import XorGame, symmetrized_cost
from .classical import subset_games

CERT_TOL = 1e-7


class QuantumError(RuntimeError):
    pass


@dataclass(frozen=True)
class VectorStrategy:
    xs: np.ndarray  # (|S|, N)
    ys: np.ndarray  # (|T|, N)

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def correlations(self) -> np.ndarray:
        return self.xs @ self.ys.T

    def bias(self, g: XorGame) -> float:
        return float(np.sum(g.cost * self.correlations()))


@dataclass(frozen=True)
class DualCertificate:
    x: np.ndarray
    y: np.ndarray

    @property
    def objective(self) -> float:
        return float(self.x.sum() + self.y.sum())

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def balanced(self) -> "DualCertificate":
        """Rescale to ``(a x, y / a)`` with equal halves.

        The congruence ``diag(sqrt(a) I, I / sqrt(a))`` maps ``Diag(x, y) - B`` to
        ``Diag(a x, y / a) - B``, so feasibility is kept while the objective drops
        to ``2 sqrt(sum x * sum y)``.
        """
        sx, sy = self.x.sum(), self.y.sum()
        if sx <= 0 or sy <= 0:
            return self
        a = np.sqrt(sy / sx)
        return DualCertificate(self.x * a, self.y / a)

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "objective": self.objective}

    @classmethod
    def from_dict(cls, d: dict) -> "DualCertificate":
        return cls(np.asarray(d["x"], dtype=float), np.asarray(d["y"], dtype=float))


@dataclass(frozen=True)
class QuantumBiasResult:
    bias: float
    vectors: VectorStrategy
    certificate: DualCertificate
    lower: float
    upper: float
    solution: sdp.SdpSolution

    @property
    def value(self) -> float:
        return (1.0 + self.bias) / 2.0

    @property
    def gap(self) -> float:
        return self.upper - self.lower


class CertificateCheck(NamedTuple):
    ok: bool
    min_eig: float
    flipped_ok: bool
    flipped_min_eig: float


def bias_problem(g: XorGame) -> sdp.SdpProblem:
    B = symmetrized_cost(g)
    pb = sdp.ProblemBuilder(B)
    for i in range(B.shape[0]):
        pb.add([(i, i, 1.0)], 1.0)
    return pb.build()


def _repair_certificate(B: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Shift ``w`` up by the smallest amount making ``Diag(w) - B`` PSD."""
    lam = sdp.min_eigenvalue(np.diag(w) - B)
    if lam < 0:
        w = w - lam
    return w


def quantum_bias(g: XorGame, tol: float = 1e-8, max_iter: int = 100) -> QuantumBiasResult:
    ns, nt = g.shape
    if ns + nt > 512:
        raise QuantumError(f"SDP order {ns + nt} exceeds 512")
    B = symmetrized_cost(g)
    sol = sdp.solve(bias_problem(g), tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise QuantumError(f"SDP did not converge ({sol.status}): gap={sol.gap:.2e} "
                           f"pinf={sol.primal_infeas:.2e} dinf={sol.dual_infeas:.2e}; {sol.diagnostics}")
    # exact unit diagonal by congruence, then factor
    d = np.sqrt(np.clip(np.diag(sol.X), 1e-300, None))
    X = sol.X / d[:, None] / d[None, :]
    vecs = sdp.gram_factor(X, tol=1e-14 * X.shape[0])
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    vs = VectorStrategy(vecs[:ns], vecs[ns:])
    lower = vs.bias(g)

    w = _repair_certificate(B, sol.y.copy())
    cert = DualCertificate(w[:ns], w[ns:]).balanced()
    upper = cert.objective
    if upper < lower - 1e-12:
        raise QuantumError(f"certificate {upper} below primal witness {lower}")
    return QuantumBiasResult(0.5 * (lower + upper), vs, cert, lower, upper, sol)


def quantum_value(g: XorGame, tol: float = 1e-8) -> float:
    return quantum_bias(g, tol).value


def verify_certificate(cert: DualCertificate, g: XorGame, tol: float = CERT_TOL) -> CertificateCheck:
    """Check ``Diag(x, y) - B >= -tol I`` and the sign-flipped ``Diag(x, y) + B >= -tol I``."""
    ns, nt = g.shape
    if cert.x.shape != (ns,) or cert.y.shape != (nt,):
        raise ValueError(f"certificate shape ({cert.x.shape}, {cert.y.shape}) does not match game {g.shape}")
    B = symmetrized_cost(g)
    D = np.diag(cert.weights)
    lam = sdp.min_eigenvalue(D - B)
    lam_flip = sdp.min_eigenvalue(D + B)
    return CertificateCheck(lam >= -tol, lam, lam_flip >= -tol, lam_flip)


def product_dual_min_eig(c1: DualCertificate, g1: XorGame, c2: DualCertificate, g2: XorGame) -> float:
    """Smallest eigenvalue of ``Diag(w1) (x) Diag(w2) - B1 (x) B2`` over the full index set.

    Nonnegative whenever both certificates are feasible: average
    ``(D1 - B1) (x) (D2 + B2)`` and ``(D1 + B1) (x) (D2 - B2)``.
    """
    B1, B2 = symmetrized_cost(g1), symmetrized_cost(g2)
    D = np.diag(np.kron(c1.weights, c2.weights))
    return sdp.min_eigenvalue(D - np.kron(B1, B2))


def tensor_certificates(c1: DualCertificate, g1: XorGame, c2: DualCertificate, g2: XorGame,
                        tol: float = CERT_TOL) -> DualCertificate:
    """Certificate for ``g1 xor g2`` from certificates for ``g1`` and ``g2``.

    ``Diag(w1 (x) w2) >= B1 (x) B2`` holds on the index set ``(S1 u T1) x (S2 u T2)``.
    ``B(g1 xor g2)`` lives on ``S1xS2 u T1xT2`` only, and the principal submatrix of
    ``B1 (x) B2`` there is ``B(g1 xor g2) / 2`` (the blocks pair ``A1/2`` with
    ``A2/2``). Restricting and doubling gives weights ``(2 x1(x)x2, 2 y1(x)y2)``.
    With balanced inputs (``sum x_i = sum y_i``) the objective is exactly the
    product of the input objectives; inputs are balanced first.
    """
    for c, g, k in ((c1, g1, 1), (c2, g2, 2)):
        chk = verify_certificate(c, g, tol)
        if not chk.ok:
            raise ValueError(f"certificate {k} fails verification (min eigenvalue {chk.min_eig:.3e})")
    c1, c2 = c1.balanced(), c2.balanced()
    return DualCertificate(2.0 * np.kron(c1.x, c2.x), 2.0 * np.kron(c1.y, c2.y))


def quantum_corollary_bound(games: Sequence[XorGame], tol: float = 1e-8) -> tuple[float, float]:
    """``(average over subsets M of eps_q(XOR_M G_j), prod_j (1 + eps_q(G_j)) / 2)``.

    The empty subset contributes bias 1. Subsets are solved in increasing mask order.
    """
    n = len(games)
    if n == 0:
        raise ValueError("need at least one game")
    biases = {}
    for mask, g in subset_games(games):
        biases[mask] = 1.0 if mask == 0 else quantum_bias(g, tol).bias
    bound = sum(biases[m] for m in range(1 << n)) / (1 << n)
    closed = 1.0
    for j in range(n):
        closed *= (1.0 + biases[1 << j]) / 2.0
    return bound, closed


def fourier_identity(dist) -> tuple[float, float]:
    """Both sides of ``2^-n sum_M E[(-1)^{XOR_{j in M} X_j}] = Pr[X = 0...0]``.

    ``dist`` is a table over ``{0,1}^n``, either flat (bit ``j`` of the index is
    ``X_j``) or of shape ``(2,) * n``.
    """
    p = np.asarray(dist, dtype=float)
    if p.ndim > 1:
        if any(k != 2 for k in p.shape):
            raise ValueError(f"expected shape (2,)*n, got {p.shape}")
        # C-order flattening makes X_1 the most significant bit; reverse to bit j = X_j
        p = p.transpose(tuple(range(p.ndim - 1, -1, -1))).ravel()
    size = p.shape[0]
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ValueError(f"table length {size} is not a power of two")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("not a probability distribution")
    outcomes = np.arange(size)
    lhs = 0.0
    for mask in range(size):
        parity = np.array([bin(x & mask).count("1") & 1 for x in outcomes])
        lhs += float(np.sum(p * np.where(parity == 1, -1.0, 1.0)))
    return lhs / size, float(p[0])


def _check_observable(o: np.ndarray, name: str, tol: float = 1e-10) -> np.ndarray:
    o = np.atleast_2d(np.asarray(o))
    if o.shape[0] != o.shape[1]:
        raise ValueError(f"{name} is not square")
    if np.abs(o - o.conj().T).max() > tol:
        raise ValueError(f"{name} is not Hermitian")
    if np.abs(o @ o - np.eye(o.shape[0])).max() > tol:
        raise ValueError(f"{name} does not square to the identity")
    return o


def watrous_operator(a0, b0) -> np.ndarray:
    """``M = -1/3 A0 (x) B0 + 1/3 A0 (x) I + 1/3 I (x) B0``."""
    a0 = _check_observable(a0, "a0")
    b0 = _check_observable(b0, "b0")
    ia, ib = np.eye(a0.shape[0]), np.eye(b0.shape[0])
    return (-np.kron(a0, b0) + np.kron(a0, ib) + np.kron(ia, b0)) / 3.0


def watrous_check(a0, b0) -> tuple[float, float]:
    """``(max |M^2 + 2/3 M - 1/3 I|, largest eigenvalue of M)``."""
    M = watrous_operator(a0, b0)
    I = np.eye(M.shape[0])
    residual = float(np.abs(M @ M + (2.0 / 3.0) * M - I / 3.0).max())
    return residual, float(np.linalg.eigvalsh(M).max())


def watrous_strategy_bias(state, a_obs, b_obs, game=None) -> tuple[float, float]:
    """Exact bias of a quantum strategy for the Watrous game, two ways.

    Returns ``(bias from the game table, <psi| M |psi>)`` where ``a_obs`` and
    ``b_obs`` are pairs of observables for questions 0 and 1 and ``state`` is a
    vector on ``d_A * d_B``.
    """
    from .games import watrous
    game = game or watrous()
    psi = np.asarray(state, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    a_obs = [_check_observable(o, f"a{k}") for k, o in enumerate(a_obs)]
    b_obs = [_check_observable(o, f"b{k}") for k, o in enumerate(b_obs)]
    ia, ib = np.eye(a_obs[0].shape[0]), np.eye(b_obs[0].shape[0])
    win = 0.0
    for s, t in itertools.product(range(2), repeat=2):
        if game.pi[s, t] == 0:
            continue
        for a, b in itertools.product(range(2), repeat=2):
            if not game.predicate[a, b, s, t]:
                continue
            pa = (ia + (-1) ** a * a_obs[s]) / 2.0
            pb = (ib + (-1) ** b * b_obs[t]) / 2.0
            win += game.pi[s, t] * float(np.real(psi.conj() @ np.kron(pa, pb) @ psi))
    M = watrous_operator(a_obs[0], b_obs[0])
    return 2.0 * win - 1.0, float(np.real(psi.conj() @ M @ psi))
