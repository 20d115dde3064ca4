"""Dense primal-dual interior-point solver for small semidefinite programs.

Problem form (primal, maximisation)::

    max  <C, X> + c_lin . x
    s.t. <A_i, X> + (A_lin x)_i = b_i      i = 1..m
         X PSD,  x >= 0

and its dual::

    min  b . y
    s.t. Z = sum_i y_i A_i - C   PSD
         z = A_lin^T y - c_lin   >= 0

The iteration is an infeasible-start path-following method using the HKM
search direction with a Mehrotra predictor-corrector. Reported objectives,
gap and residuals are always recomputed from the returned ``X``, ``x``, ``y``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

SYM_TOL = 1e-12


class SdpError(RuntimeError):
    pass


def min_eigenvalue(m: np.ndarray, sym_tol: float = 1e-10) -> float:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, np.abs(m).max(initial=0.0))
    if np.abs(m - m.T).max(initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    return float(sla.eigvalsh(0.5 * (m + m.T), subset_by_index=[0, 0])[0])


def gram_factor(x: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Rows ``v_i`` with ``v_i . v_j = X_ij``; eigenvalues below ``tol`` are dropped.

    Returns an array of shape ``(order, rank)``.
    """
    x = np.asarray(x, dtype=float)
    x = 0.5 * (x + x.T)
    w, u = np.linalg.eigh(x)
    if w[0] < -tol:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    keep = w > tol
    if not np.any(keep):
        return np.zeros((x.shape[0], 1))
    return u[:, keep] * np.sqrt(w[keep])[None, :]


class SdpProblem:
    """Constraint data stored as a sparse ``m x n^2`` matrix of vectorised symmetric ``A_i``."""

    def __init__(self, C, A, b, c_lin=None, A_lin=None):
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("objective must be square")
        n = C.shape[0]
        if np.abs(C - C.T).max(initial=0.0) > SYM_TOL:
            raise ValueError("objective is not symmetric")
        if sp.issparse(A):
            A = sp.csr_matrix(A, dtype=float)
        else:
            A = sp.csr_matrix(np.array([np.asarray(a, dtype=float).ravel() for a in A]).reshape(-1, n * n))
        b = np.asarray(b, dtype=float).ravel()
        m = b.shape[0]
        if A.shape != (m, n * n):
            raise ValueError(f"constraint matrix shape {A.shape} does not match m={m}, n={n}")
        perm = np.arange(n * n).reshape(n, n).T.ravel()
        if m and abs(A - A[:, perm]).max() > SYM_TOL:
            raise ValueError("constraint matrices must be symmetric")
        if c_lin is None:
            c_lin = np.zeros(0)
        c_lin = np.asarray(c_lin, dtype=float).ravel()
        nl = c_lin.shape[0]
        if A_lin is None:
            A_lin = sp.csr_matrix((m, nl))
        A_lin = sp.csr_matrix(A_lin, dtype=float)
        if A_lin.shape != (m, nl):
            raise ValueError(f"linear block shape {A_lin.shape} does not match ({m}, {nl})")
        self.C, self.A, self.b, self.c_lin, self.A_lin = C, A, b, c_lin, A_lin
        self.n, self.m, self.nl = n, m, nl
        coo = A.tocoo()
        self._rows = coo.row
        self._p, self._q = np.divmod(coo.col, n)
        self._vals = coo.data

    def apply(self, X: np.ndarray) -> np.ndarray:
        """``(<A_i, X>)_i``"""
        return self.A @ X.ravel()

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """``sum_i y_i A_i``"""
        return (self.A.T @ y).reshape(self.n, self.n)

    def to_dict(self) -> dict:
        """Debug dump; not a stable interface."""
        coo = self.A.tocoo()
        lin = self.A_lin.tocoo()
        return {"n": self.n, "m": self.m, "nl": self.nl, "C": self.C.tolist(), "b": self.b.tolist(),
                "A": [coo.row.tolist(), coo.col.tolist(), coo.data.tolist()],
                "c_lin": self.c_lin.tolist(),
                "A_lin": [lin.row.tolist(), lin.col.tolist(), lin.data.tolist()]}

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)


class ProblemBuilder:
    """Accumulate sparse constraints row by row.

    ``entries`` are ``(r, c, v)`` triples meaning ``A[r, c] = A[c, r] = v``; an
    off-diagonal triple therefore contributes ``2 v X[r, c]`` to ``<A, X>``.
    """

    def __init__(self, C, n_lin: int = 0, c_lin=None):
        self.C = np.asarray(C, dtype=float)
        self.n = self.C.shape[0]
        self.n_lin = n_lin
        self.c_lin = np.zeros(n_lin) if c_lin is None else np.asarray(c_lin, dtype=float)
        self._rows, self._cols, self._vals = [], [], []
        self._lrows, self._lcols, self._lvals = [], [], []
        self.b = []

    def add(self, entries, rhs: float, lin=()) -> int:
        i = len(self.b)
        n = self.n
        for r, c, v in entries:
            self._rows.append(i)
            self._cols.append(r * n + c)
            self._vals.append(v)
            if r != c:
                self._rows.append(i)
                self._cols.append(c * n + r)
                self._vals.append(v)
        for k, v in lin:
            self._lrows.append(i)
            self._lcols.append(k)
            self._lvals.append(v)
        self.b.append(rhs)
        return i

    def add_lin_var(self, cost: float = 0.0) -> int:
        self.c_lin = np.append(self.c_lin, cost)
        self.n_lin += 1
        return self.n_lin - 1

    def build(self) -> SdpProblem:
        m, n = len(self.b), self.n
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n * n))
        A_lin = sp.csr_matrix((self._lvals, (self._lrows, self._lcols)), shape=(m, self.n_lin))
        return SdpProblem(self.C, A, self.b, self.c_lin, A_lin)


@dataclass
class SdpSolution:
    X: np.ndarray
    x_lin: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    z_lin: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    primal_infeas: float
    dual_infeas: float
    status: str
    iterations: int
    diagnostics: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return 0.5 * (self.primal_objective + self.dual_objective)


def residuals(p: SdpProblem, X, x, y):
    """Objectives and infeasibilities recomputed from scratch."""
    pobj = float(np.sum(p.C * X) + p.c_lin @ x)
    dobj = float(p.b @ y)
    rp = p.b - p.apply(X) - p.A_lin @ x
    Z = p.adjoint(y) - p.C
    z = p.A_lin.T @ y - p.c_lin
    Z = 0.5 * (Z + Z.T)
    dual_inf = max(0.0, -min_eigenvalue(Z)) if p.n else 0.0
    if z.size:
        dual_inf = max(dual_inf, float(max(0.0, -z.min())))
    prim_inf = float(np.abs(rp).max(initial=0.0))
    if x.size:
        prim_inf = max(prim_inf, float(max(0.0, -x.min())))
    prim_inf = max(prim_inf, max(0.0, -min_eigenvalue(0.5 * (X + X.T))))
    return pobj, dobj, prim_inf, dual_inf, Z, z


def _schur(p: SdpProblem, X, Zinv, block: int = 2048) -> np.ndarray:
    """``M_ij = tr(A_i X A_j Z^{-1})`` from the COO entries of the constraints."""
    rows, pp, qq, vals = p._rows, p._p, p._q, p._vals
    E = len(vals)
    S = sp.csr_matrix((vals, (rows, np.arange(E))), shape=(p.m, E))
    M = np.zeros((p.m, p.m))
    for lo in range(0, E, block):
        hi = min(E, lo + block)
        # T[e, f] = X[q_e, p_f] * Zinv[q_f, p_e]
        T = X[qq[lo:hi]][:, pp] * Zinv[qq][:, pp[lo:hi]].T
        M += S[:, lo:hi] @ np.asarray(S @ T.T).T
    return 0.5 * (M + M.T)


def _factor_schur(M, it, diagnostics):
    """Factor the Schur complement after symmetric diagonal equilibration.

    The LP block drives diagonal entries apart by many orders of magnitude near
    the optimum; scaling to unit diagonal keeps Cholesky usable. On failure a
    shift of ``1e-12`` (relative to the scaled unit diagonal) is tried, then LU.
    """
    d = np.sqrt(np.clip(np.diag(M), 1e-300, None))
    Ms = M / d[:, None] / d[None, :]
    eye = np.eye(M.shape[0])

    def wrap(solve):
        # iterative refinement against the unshifted matrix: the primal residual
        # of the step equals the residual of this solve
        def refined(r):
            x = solve(r / d) / d
            for _ in range(4):
                res = r - M @ x
                if np.abs(res).max(initial=0.0) <= 1e-15 * max(1.0, np.abs(r).max(initial=0.0)):
                    break
                x = x + solve(res / d) / d
            return x
        return refined

    try:
        f = sla.cho_factor(Ms)
        return wrap(lambda r: sla.cho_solve(f, r))
    except (np.linalg.LinAlgError, sla.LinAlgError):
        pass
    try:
        f = sla.cho_factor(Ms + 1e-12 * eye)
        diagnostics.append(f"iteration {it}: Schur complement regularised by 1e-12 (scaled)")
        return wrap(lambda r: sla.cho_solve(f, r))
    except (np.linalg.LinAlgError, sla.LinAlgError):
        pass
    lu = sla.lu_factor(Ms + 1e-12 * eye)
    if not np.all(np.isfinite(lu[0])) or np.abs(np.diag(lu[0])).min() == 0.0:
        diagnostics.append(f"iteration {it}: Schur complement numerically singular")
        return None
    diagnostics.append(f"iteration {it}: Schur complement not positive definite, used LU")
    return wrap(lambda r: sla.lu_solve(lu, r))


def _is_pd(X) -> bool:
    try:
        np.linalg.cholesky(X)
        return True
    except np.linalg.LinAlgError:
        return False


def _score(p, X, x, y) -> float:
    pobj, dobj, pinf, dinf, _, _ = residuals(p, X, x, y)
    return max(abs(pobj - dobj), pinf, dinf)


def _max_step(X, dX) -> float:
    """Largest ``a`` with ``X + a dX`` PSD (capped at a large value)."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    Li = sla.solve_triangular(L, np.eye(X.shape[0]), lower=True)
    W = Li @ dX @ Li.T
    lam = sla.eigvalsh(0.5 * (W + W.T), subset_by_index=[0, 0])[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_lin(x, dx) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def solve(p: SdpProblem, tol: float = 1e-8, max_iter: int = 100, verbose: bool = False) -> SdpSolution:
    n, m, nl = p.n, p.m, p.nl
    diagnostics = []
    normA = np.sqrt(np.asarray(p.A.multiply(p.A).sum(axis=1)).ravel()) if m else np.zeros(0)
    normC = np.linalg.norm(p.C)
    xi = max(10.0, np.sqrt(n), n * np.max((1.0 + np.abs(p.b)) / (1.0 + normA), initial=0.0))
    eta = max(10.0, np.sqrt(n), normC, np.max(normA, initial=0.0))
    X = xi * np.eye(n)
    Z = eta * np.eye(n)
    x = np.full(nl, xi)
    z = np.full(nl, eta)
    y = np.zeros(m)
    nu = n + nl
    status = "max-iterations"
    best = (np.inf, None, None, None)
    it = 0
    for it in range(1, max_iter + 1):
        rp = p.b - p.apply(X) - p.A_lin @ x
        Rd = p.adjoint(y) - p.C - Z
        Rd = 0.5 * (Rd + Rd.T)
        rd = p.A_lin.T @ y - p.c_lin - z
        mu = (np.sum(X * Z) + x @ z) / nu
        pobj = np.sum(p.C * X) + p.c_lin @ x
        dobj = p.b @ y
        if verbose:
            print(f"{it:3d} pobj={pobj:+.10f} dobj={dobj:+.10f} mu={mu:.2e} "
                  f"rp={np.abs(rp).max(initial=0):.2e} rd={np.abs(Rd).max(initial=0):.2e}")
        if (abs(pobj - dobj) <= 0.1 * tol and np.abs(rp).max(initial=0) <= 0.1 * tol
                and max(np.abs(Rd).max(initial=0), np.abs(rd).max(initial=0)) <= 0.1 * tol):
            status = "optimal"
            break

        try:
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            diagnostics.append(f"iteration {it}: dual slack lost definiteness")
            break
        Zinv = sla.cho_solve((Lz, True), np.eye(n))
        Zinv = 0.5 * (Zinv + Zinv.T)
        D = x / z
        M = _schur(p, X, Zinv)
        if nl:
            M += (p.A_lin @ sp.diags(D) @ p.A_lin.T).toarray()
        M = 0.5 * (M + M.T)
        msolve = _factor_schur(M, it, diagnostics)
        if msolve is None:
            status = "numerical-failure"
            break

        XRdZ = X @ Rd @ Zinv

        def direction(Rc, r_lin):
            rhs = p.apply(Rc - XRdZ) - rp
            if nl:
                rhs = rhs + p.A_lin @ (r_lin - D * rd)
            dy = msolve(rhs)
            dZ = p.adjoint(dy) + Rd
            dZ = 0.5 * (dZ + dZ.T)
            dX = Rc - X @ dZ @ Zinv
            dX = 0.5 * (dX + dX.T)
            dz = p.A_lin.T @ dy + rd if nl else np.zeros(0)
            dx = r_lin - D * dz if nl else np.zeros(0)
            return dX, dx, dy, dZ, dz

        # predictor
        dXa, dxa, dya, dZa, dza = direction(-X, -x)
        ap = min(1.0, _max_step(X, dXa), _max_step_lin(x, dxa))
        ad = min(1.0, _max_step(Z, dZa), _max_step_lin(z, dza))
        mu_aff = (np.sum((X + ap * dXa) * (Z + ad * dZa)) + (x + ap * dxa) @ (z + ad * dza)) / nu
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0

        # corrector
        Rc = sigma * mu * Zinv - X - dXa @ dZa @ Zinv
        r_lin = (sigma * mu - dxa * dza) / z - x if nl else np.zeros(0)
        dX, dx, dy, dZ, dz = direction(Rc, r_lin)
        gamma = 0.98 if mu > 1e-6 else 0.995
        ap = min(1.0, gamma * _max_step(X, dX), gamma * _max_step_lin(x, dx))
        ad = min(1.0, gamma * _max_step(Z, dZ), gamma * _max_step_lin(z, dz))
        if ap <= 1e-14 and ad <= 1e-14:
            diagnostics.append(f"iteration {it}: step length collapsed")
            break
        # round-off can push a boundary step out of the cone; back off until
        # both slacks still factor
        for _ in range(30):
            Xn = X + ap * dX
            Zn = Z + ad * dZ
            Xn = 0.5 * (Xn + Xn.T)
            Zn = 0.5 * (Zn + Zn.T)
            okx = _is_pd(Xn)
            okz = _is_pd(Zn)
            if okx and okz:
                break
            if not okx:
                ap *= 0.8
            if not okz:
                ad *= 0.8
        else:
            diagnostics.append(f"iteration {it}: could not keep iterates interior")
            break
        xn, yn, zn = x + ap * dx, y + ad * dy, z + ad * dz
        if not all(np.all(np.isfinite(v)) for v in (Xn, Zn, xn, yn, zn)):
            status = "numerical-failure"
            diagnostics.append(f"iteration {it}: iterates became non-finite")
            break
        X, Z, x, y, z = Xn, Zn, xn, yn, zn
        scale = max(np.abs(X).max(initial=0.0), np.abs(y).max(initial=0.0), np.abs(x).max(initial=0.0))
        if scale > 1e12:
            status = "diverged"
            diagnostics.append(f"iteration {it}: iterates diverging (problem infeasible or unbounded?)")
            break
        score = _score(p, X, x, y)
        if score < best[0]:
            best = (score, X, x, y)

    if status != "optimal" and best[1] is not None and best[0] < _score(p, X, x, y):
        diagnostics.append("returned best iterate seen")
        X, x, y = best[1], best[2], best[3]
    pobj, dobj, pinf, dinf, Zc, zc = residuals(p, X, x, y)
    gap = abs(pobj - dobj)
    if status == "optimal" and not (gap <= tol and pinf <= tol and dinf <= tol):
        status = "max-iterations"
    if status != "optimal" and gap <= tol and pinf <= tol and dinf <= tol:
        status = "optimal"
    if status != "optimal" and dobj < pobj - 1e3 * max(tol, dinf + pinf):
        diagnostics.append("dual objective below primal objective beyond residual slack")
    return SdpSolution(X, x, y, Zc, zc, pobj, dobj, gap, pinf, dinf, status, it, diagnostics)
