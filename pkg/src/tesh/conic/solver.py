"""Primal-dual interior-point method for block LP/SDP problems.

Infeasible-start path following with the HKM search direction and a
Mehrotra predictor-corrector step.  Each iteration forms the Schur
complement ``M_ij = tr(A_i X A_j Z^-1)`` (plus the LP contribution) and
factors it once; both the predictor and the corrector reuse the factor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .problem import ConicProblem, symmetrize_coefficients

log = logging.getLogger(__name__)

GAP_TOL = 1e-8
FEAS_TOL = 1e-9
MAX_ITERS = 200
MAX_PSD_SIDE = 1200

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"

_KRON_MAX_SIDE = 40
_CHUNK = 256
_CORRECTIONS = 6
_GAMMA_MAX = 0.99


@dataclass
class ConicSolution:
    status: str
    primal_value: float
    dual_value: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iterations: int
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    relative_gap: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _PsdBlock:
    def __init__(self, d: int, C: np.ndarray, F: sp.csr_matrix):
        self.d = d
        self.C = C
        self.F = F  # m x d^2, full symmetric row-major vec of each A_i
        self.Fc = F.tocsc()
        rows = np.diff(F.indptr) > 0
        self.touched = np.flatnonzero(rows)
        self.FT = F[self.touched]
        if d <= _KRON_MAX_SIDE:
            self.Fdense = self.FT.toarray()
        else:
            self.patterns = []
            for i in self.touched:
                lo, hi = F.indptr[i], F.indptr[i + 1]
                idx = F.indices[lo:hi]
                self.patterns.append((idx // d, idx % d, F.data[lo:hi]))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.F @ X.ravel()

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return (self.F.T @ y).reshape(self.d, self.d)

    def schur(self, X: np.ndarray, Zi: np.ndarray, M: np.ndarray) -> None:
        t = self.touched
        if len(t) == 0:
            return
        if self.d <= _KRON_MAX_SIDE:
            K = np.kron(Zi, X)
            M[np.ix_(t, t)] += self.Fdense @ K @ self.Fdense.T
            return
        d = self.d
        for start in range(0, len(t), _CHUNK):
            pats = self.patterns[start:start + _CHUNK]
            G = np.empty((d * d, len(pats)))
            for col, (P, Q, V) in enumerate(pats):
                G[:, col] = ((X[:, P] * V) @ Zi[Q, :]).ravel()
            M[np.ix_(t, t[start:start + len(pats)])] += self.FT @ G


class _LpBlock:
    def __init__(self, C: np.ndarray, A: sp.csr_matrix):
        self.C = C
        self.A = A  # m x k

    def apply(self, x):
        return self.A @ x

    def adjoint(self, y):
        return self.A.T @ y

    def schur(self, x, zi, M):
        D = sp.diags(x * zi)
        M += (self.A @ D @ self.A.T).toarray()


def _split_problem(p: ConicProblem):
    A = p.A.tocsc()
    blocks = []
    for k, cone in enumerate(p.cones):
        sl = p.block_slice(k)
        Ck = symmetrize_coefficients(cone, p.c[sl])
        Ak = A[:, sl].tocoo()
        if cone.kind == "lp":
            blocks.append(_LpBlock(Ck, Ak.tocsr()))
            continue
        d = cone.size
        iu, ju = np.triu_indices(d)
        pi, pj = iu[Ak.col], ju[Ak.col]
        diag = pi == pj
        vals = np.where(diag, Ak.data, Ak.data / 2.0)
        rows = np.concatenate([Ak.row, Ak.row[~diag]])
        cols = np.concatenate([pi * d + pj, (pj * d + pi)[~diag]])
        data = np.concatenate([vals, vals[~diag]])
        F = sp.csr_matrix((data, (rows, cols)), shape=(p.nconstraints, d * d))
        F.sum_duplicates()
        blocks.append(_PsdBlock(d, Ck, F))
    return blocks


def _independent_rows(p: ConicProblem):
    """Drop linearly dependent equality rows; report inconsistency."""
    m, n = p.A.shape
    if m == 0 or m * n > 4_000_000:
        return np.arange(m), True
    Ad = p.A.toarray()
    _, R, piv = sla.qr(Ad.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0:
        return np.arange(0), bool(np.allclose(p.b, 0))
    rank = int(np.sum(diag > 1e-10 * diag[0]))
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, True
    sol, *_ = np.linalg.lstsq(Ad[keep].T, Ad.T, rcond=None)
    consistent = np.allclose(sol.T @ p.b[keep], p.b, atol=1e-9 * (1 + np.abs(p.b).max()))
    return keep, consistent


def _max_step(X, dX, lp: bool) -> float:
    if lp:
        neg = dX < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(-X[neg] / dX[neg]))
    L = np.linalg.cholesky(X)
    W = sla.solve_triangular(L, dX, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = np.linalg.eigvalsh((W + W.T) / 2).min()
    return np.inf if lam >= 0 else float(-1.0 / lam)


def _sym(A):
    return (A + A.T) / 2.0


def _inner(blocks, U, V) -> float:
    return float(sum(np.sum(u * v) for u, v in zip(U, V)))


def solve(p: ConicProblem, gap_tol: float = GAP_TOL, feas_tol: float = FEAS_TOL,
          max_iters: int = MAX_ITERS) -> ConicSolution:
    """Solve ``min c.x  s.t.  A x = b,  x in K`` and its dual."""
    psd_side = sum(k.size for k in p.cones if k.kind == "psd")
    if psd_side > MAX_PSD_SIDE:
        raise ValueError(f"total PSD side {psd_side} exceeds the guard of {MAX_PSD_SIDE}")

    keep, consistent = _independent_rows(p)
    if not consistent:
        z = np.zeros(p.nvar)
        return ConicSolution(INFEASIBLE, np.nan, np.nan, z, np.zeros(p.nconstraints), z, 0,
                             info={"reason": "inconsistent equality constraints"})
    reduced = p
    if len(keep) < p.nconstraints:
        reduced = ConicProblem(p.c, p.A[keep], p.b[keep], p.cones)
    sol = _solve_full_rank(reduced, gap_tol, feas_tol, max_iters)
    if len(keep) < p.nconstraints:
        y = np.zeros(p.nconstraints)
        y[keep] = sol.y
        sol.y = y
    return sol


def _solve_full_rank(p, gap_tol, feas_tol, max_iters) -> ConicSolution:
    blocks = _split_problem(p)
    m = p.nconstraints
    b = p.b
    lp_flags = [isinstance(bl, _LpBlock) for bl in blocks]

    def A_op(Xs):
        out = np.zeros(m)
        for bl, X in zip(blocks, Xs):
            out += bl.apply(X)
        return out

    def At_op(y):
        return [bl.adjoint(y) for bl in blocks]

    normb = 1.0 + np.linalg.norm(b)
    normC = 1.0 + np.sqrt(sum(np.sum(bl.C ** 2) for bl in blocks))

    # infeasible starting point
    Xs, Zs = [], []
    for bl, lp in zip(blocks, lp_flags):
        if lp:
            k = bl.C.size
            anorm = np.sqrt(np.asarray(bl.A.multiply(bl.A).sum(axis=1)).ravel())
            xi = max(10.0, np.sqrt(k), k * np.max((1 + np.abs(b)) / (1 + anorm)) if m else 10.0)
            eta = max(10.0, np.sqrt(k), np.linalg.norm(bl.C), anorm.max() if m else 0.0)
            Xs.append(np.full(k, xi))
            Zs.append(np.full(k, eta))
        else:
            d = bl.d
            anorm = np.sqrt(np.asarray(bl.F.multiply(bl.F).sum(axis=1)).ravel())
            xi = max(10.0, np.sqrt(d), d * np.max((1 + np.abs(b)) / (1 + anorm)) if m else 10.0)
            eta = max(10.0, np.sqrt(d), np.linalg.norm(bl.C), anorm.max() if m else 0.0)
            Xs.append(xi * np.eye(d))
            Zs.append(eta * np.eye(d))
    y = np.zeros(m)
    nu = sum(X.size if lp else X.shape[0] for X, lp in zip(Xs, lp_flags))

    status = NUMERICAL_FAILURE
    gamma = 0.9
    small_steps = 0
    it = 0
    pinf = dinf = relgap = np.inf
    best = None
    for it in range(max_iters + 1):
        Rp = b - A_op(Xs)
        Aty = At_op(y)
        Rd = [bl.C - Z - a for bl, Z, a in zip(blocks, Zs, Aty)]
        pobj = _inner(blocks, [bl.C for bl in blocks], Xs)
        dobj = float(b @ y)
        mu = _inner(blocks, Xs, Zs) / nu
        pinf = np.linalg.norm(Rp) / normb
        dinf = np.sqrt(sum(np.sum(r ** 2) for r in Rd)) / normC
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        log.debug("it %3d pobj %.10e dobj %.10e gap %.2e pinf %.2e dinf %.2e",
                  it, pobj, dobj, relgap, pinf, dinf)
        merit = max(relgap / gap_tol, pinf / feas_tol, dinf / feas_tol)
        if best is None or merit < best[0]:
            best = (merit, [X.copy() for X in Xs], y.copy(), [Z.copy() for Z in Zs],
                    pobj, dobj, pinf, dinf, relgap, it)
        if relgap <= gap_tol and pinf <= feas_tol and dinf <= feas_tol:
            status = OPTIMAL
            break
        ray = _detect_ray(blocks, lp_flags, Xs, y, b, A_op, At_op, pobj, dobj)
        if ray is not None:
            status = ray
            break
        if it == max_iters or small_steps >= 5:
            break

        try:
            Zinv = [1.0 / Z if lp else np.linalg.inv(np.linalg.cholesky(Z)) for Z, lp in zip(Zs, lp_flags)]
            Zinv = [zi if lp else zi.T @ zi for zi, lp in zip(Zinv, lp_flags)]
            M = np.zeros((m, m))
            for bl, X, zi in zip(blocks, Xs, Zinv):
                bl.schur(X, zi, M)
            factor = _factor(M)
        except np.linalg.LinAlgError:
            log.debug("factorization failed at iteration %d", it)
            break

        def direction(H):
            T = [h - (X * r * zi if lp else X @ r @ zi)
                 for h, X, r, zi, lp in zip(H, Xs, Rd, Zinv, lp_flags)]
            dy = _schur_solve(M, factor, Rp - A_op(T))
            Atdy = At_op(dy)
            dZ = [r - a for r, a in zip(Rd, Atdy)]
            dX = [h - (X * dz * zi if lp else _sym(X @ dz @ zi))
                  for h, X, dz, zi, lp in zip(H, Xs, dZ, Zinv, lp_flags)]
            # correct against the operator path so the step keeps A(dX) = Rp
            prev = np.inf
            for _ in range(_CORRECTIONS):
                r = Rp - A_op(dX)
                rn = np.linalg.norm(r)
                if rn <= 1e-3 * feas_tol * normb or rn >= 0.5 * prev:
                    break
                prev = rn
                ddy = _schur_solve(M, factor, r, refine=0)
                Ad = At_op(ddy)
                dy = dy + ddy
                dZ = [dz - a for dz, a in zip(dZ, Ad)]
                dX = [dx + (X * a * zi if lp else _sym(X @ a @ zi))
                      for dx, X, a, zi, lp in zip(dX, Xs, Ad, Zinv, lp_flags)]
            return dX, dy, dZ

        def steps(dX, dZ):
            ap = min(_max_step(X, d, lp) for X, d, lp in zip(Xs, dX, lp_flags))
            ad = min(_max_step(Z, d, lp) for Z, d, lp in zip(Zs, dZ, lp_flags))
            return min(1.0, gamma * ap), min(1.0, gamma * ad)

        try:
            dXa, dya, dZa = direction([-X for X in Xs])
            ap, ad = steps(dXa, dZa)
            mu_aff = _inner(blocks, [X + ap * d for X, d in zip(Xs, dXa)],
                            [Z + ad * d for Z, d in zip(Zs, dZa)]) / nu
            expon = max(1.0, 3.0 * min(ap, ad) ** 2)
            sigma = min(1.0, max(0.0, mu_aff / mu) ** expon)
            H = [sigma * mu * zi - X - (dx * dz * zi if lp else _sym(dx @ dz @ zi))
                 for X, zi, dx, dz, lp in zip(Xs, Zinv, dXa, dZa, lp_flags)]
            dX, dy, dZ = direction(H)
            ap, ad = steps(dX, dZ)
        except np.linalg.LinAlgError:
            log.debug("step computation failed at iteration %d", it)
            break

        Xs = [X + ap * d for X, d in zip(Xs, dX)]
        Xs = [X if lp else _sym(X) for X, lp in zip(Xs, lp_flags)]
        y = y + ad * dy
        Zs = [Z + ad * d for Z, d in zip(Zs, dZ)]
        Zs = [Z if lp else _sym(Z) for Z, lp in zip(Zs, lp_flags)]
        gamma = 0.9 + (_GAMMA_MAX - 0.9) * min(ap, ad)
        small_steps = small_steps + 1 if min(ap, ad) < 1e-6 else 0

    if status == NUMERICAL_FAILURE and best is not None:
        _, Xs, y, Zs, pobj, dobj, pinf, dinf, relgap, _ = best
    x = p.pack(Xs)
    z = p.pack(Zs)
    return ConicSolution(status, pobj, dobj, x, y, z, it, pinf, dinf, relgap,
                         info={"mu": _inner(blocks, Xs, Zs) / nu})


def _factor(M):
    """Cholesky of the Jacobi-scaled Schur complement, regularized if needed."""
    d = np.sqrt(np.maximum(np.diag(M), 1e-300))
    S = M / d[:, None] / d[None, :]
    try:
        return sla.cho_factor(S, lower=False, check_finite=False), d
    except np.linalg.LinAlgError:
        pass
    for reg in (1e-14, 1e-12, 1e-10):
        try:
            return sla.cho_factor(S + reg * np.eye(S.shape[0]), lower=False, check_finite=False), d
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("Schur complement is not positive definite")


def _schur_solve(M, factor, rhs, refine: int = 2):
    fac, d = factor
    x = sla.cho_solve(fac, rhs / d) / d
    for _ in range(refine):
        r = rhs - M @ x
        x = x + sla.cho_solve(fac, r / d) / d
    return x


def _min_eig(U, lp):
    return float(U.min()) if lp else float(np.linalg.eigvalsh(U).min())


def _detect_ray(blocks, lp_flags, Xs, y, b, A_op, At_op, pobj, dobj):
    """Farkas-style certificates read off diverging iterates."""
    ynorm = np.linalg.norm(y)
    if dobj > 0 and ynorm > 1e6:
        W = [-a for a in At_op(y)]
        scale = max(np.sqrt(sum(np.sum(w ** 2) for w in W)), 1e-300)
        if min(_min_eig(w, lp) for w, lp in zip(W, lp_flags)) >= -1e-8 * scale:
            return INFEASIBLE
    xnorm = np.sqrt(sum(np.sum(X ** 2) for X in Xs))
    if pobj < 0 and xnorm > 1e6:
        if np.linalg.norm(A_op(Xs)) <= 1e-8 * (-pobj):
            return UNBOUNDED
    return None
