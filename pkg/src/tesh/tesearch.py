"""Gradient search for threshold-entangled states.

The cost is ``Theta_eps(psi) = sum_S max(0, theta_eps(spec rho_S))**2`` over
all ``floor(n/2)``-qubit subsets ``S``.  Descent runs on the unit sphere of
``C^(2^n)`` viewed as ``R^(2^(n+1))`` with real coordinates ``[Re psi, Im psi]``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asep import DEFAULT_TOL, half_subsets, theta, verify_te
from .parallel import thread_count
from .qcore import haar_random_state, num_qubits

log = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-8
FD_STEP = 1e-5
KINK_TOL = 1e-12
MIN_N = 4
MAX_N = 9


@dataclass(frozen=True)
class SearchParams:
    max_iters: int = 5000
    initial_step: float = 0.5
    backtrack: float = 0.5
    threshold: float = 1e-14
    gradient: str = "analytic"
    eps: float = 1e-8
    max_backtracks: int = 60

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.gradient not in ("analytic", "finite-difference"):
            raise ValueError("gradient mode must be 'analytic' or 'finite-difference'")
        if self.eps < 0:
            raise ValueError("smoothing eps must be nonnegative")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be positive")


@dataclass
class SearchResult:
    state: np.ndarray
    cost: float
    iterations: int
    converged: bool
    seed: int | None = None
    verified: bool = False
    history: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {"seed": self.seed, "iterations": self.iterations, "cost": self.cost,
                "converged": self.converged, "verified": self.verified}


class _Layout:
    """Index permutations taking the amplitude vector to each marginal's matrix."""

    def __init__(self, n: int):
        self.n = n
        self.subsets = half_subsets(n)
        k = n // 2
        self.shape = (2 ** k, 2 ** (n - k))
        idx = np.arange(2 ** n).reshape((2,) * n)
        self.perms = []
        for S in self.subsets:
            rest = [q for q in range(n) if q not in S]
            self.perms.append(idx.transpose(list(S) + rest).reshape(-1))
        self.perms = np.array(self.perms)

    def matrices(self, psi: np.ndarray) -> np.ndarray:
        return psi[self.perms].reshape((len(self.subsets),) + self.shape)


_layouts: dict[int, _Layout] = {}


def _layout(n: int) -> _Layout:
    if n not in _layouts:
        _layouts[n] = _Layout(n)
    return _layouts[n]


def _eig(psi: np.ndarray):
    lay = _layout(num_qubits(psi))
    M = lay.matrices(psi)
    rho = M @ np.conj(np.swapaxes(M, 1, 2))
    w, V = np.linalg.eigh(rho)
    # eigh is ascending; flip to the non-increasing convention
    return lay, M, w[:, ::-1], V[:, :, ::-1]


def cost(psi, eps: float = 0.0) -> float:
    """Theta_eps summed over half-size marginals (no input validation)."""
    _, _, lam, _ = _eig(np.asarray(psi, dtype=complex))
    t = theta(np.clip(lam, 0.0, None), eps)
    return float(np.sum(np.maximum(t, 0.0) ** 2))


def _to_real(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def _to_complex(x: np.ndarray) -> np.ndarray:
    h = x.size // 2
    return x[:h] + 1j * x[h:]


def _tangent(psi: np.ndarray, g: np.ndarray) -> np.ndarray:
    x = _to_real(psi)
    return g - (g @ x) * x


def analytic_gradient(psi, eps: float = 0.0) -> tuple[np.ndarray, bool]:
    """Euclidean gradient of the cost in real coordinates, and a degeneracy flag.

    The flag is set when an active marginal has eigenvalues closer than
    ``DEGENERACY_GAP`` at one of the four positions entering theta, where
    sorted eigenvalues are not differentiable.
    """
    psi = np.asarray(psi, dtype=complex)
    lay, M, lam, V = _eig(psi)
    lam = np.clip(lam, 0.0, None)
    D = lam.shape[1]
    t = theta(lam, eps)
    grad = np.zeros(psi.size, dtype=complex)
    degenerate = False
    positions = (0, D - 3, D - 2, D - 1)
    for s in np.flatnonzero(t > 0):
        l = lam[s]
        close = any(0 <= j < D and abs(l[i] - l[j]) < DEGENERACY_GAP
                    for i in positions for j in (i - 1, i + 1))
        if close and t[s] <= KINK_TOL:
            # the term 2 theta d(theta) is bounded by a multiple of theta,
            # so an almost inactive kink contributes nothing measurable
            continue
        degenerate |= close
        root = np.sqrt(l[D - 3] * l[D - 1] + eps * eps)
        if root == 0.0:
            degenerate = True
            continue
        coef = {0: 1.0, D - 2: -1.0}
        coef[D - 3] = coef.get(D - 3, 0.0) - l[D - 1] / root
        coef[D - 1] = coef.get(D - 1, 0.0) - l[D - 3] / root
        # d lam_i = 2 Re tr(M^H v v^H dM), so the complex gradient is 2 v v^H M
        G = np.zeros(lay.shape, dtype=complex)
        for i, c in coef.items():
            v = V[s][:, i]
            G += c * np.outer(v, v.conj() @ M[s])
        G *= 2.0 * 2.0 * t[s]
        np.add.at(grad, lay.perms[s], G.reshape(-1))
    return _to_real(grad), degenerate


def fd_gradient(psi, eps: float = 0.0, h: float = FD_STEP) -> np.ndarray:
    """Central differences of the cost in real coordinates (no renormalization)."""
    x = _to_real(np.asarray(psi, dtype=complex))
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (cost(_to_complex(x + e), eps) - cost(_to_complex(x - e), eps)) / (2 * h)
    return g


def cost_gradient(psi, eps: float = 0.0, mode: str = "analytic") -> np.ndarray:
    """Riemannian gradient (tangent to the unit sphere) in real coordinates."""
    psi = np.asarray(psi, dtype=complex)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if mode == "analytic":
        g, degenerate = analytic_gradient(psi, eps)
        if degenerate:
            g = fd_gradient(psi, eps)
    elif mode == "finite-difference":
        g = fd_gradient(psi, eps)
    else:
        raise ValueError(f"unknown gradient mode {mode!r}")
    return _tangent(psi, g)


def minimize(seed_state, params: SearchParams = SearchParams(), seed: int | None = None,
             record: bool = False) -> SearchResult:
    """Projected gradient descent on the sphere with backtracking line search."""
    psi = np.asarray(seed_state, dtype=complex)
    if psi.ndim != 1 or abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("seed state must be a normalized amplitude vector")
    num_qubits(psi)
    f = cost(psi, params.eps)
    f0 = cost(psi)
    history = [f] if record else []
    it = 0
    while it < params.max_iters and f0 > params.threshold:
        g = _to_complex(cost_gradient(psi, params.eps, params.gradient))
        if not np.any(g):
            break
        eta = params.initial_step
        for _ in range(params.max_backtracks):
            trial = psi - eta * g
            trial /= np.linalg.norm(trial)
            ft = cost(trial, params.eps)
            if ft < f:
                break
            eta *= params.backtrack
        else:
            log.debug("line search stalled at iteration %d (cost %.3e)", it, f)
            break
        psi, f = trial, ft
        f0 = cost(psi)
        it += 1
        if record:
            history.append(f)
    return SearchResult(state=psi, cost=f0, iterations=it, converged=f0 <= params.threshold,
                        seed=seed, history=history)


def derive_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


@dataclass
class SearchSummary:
    n: int
    master_seed: int
    results: list
    successes: int

    def to_dict(self) -> dict:
        return {"n": self.n, "master_seed": self.master_seed, "successes": self.successes,
                "runs": [r.summary() for r in self.results]}


def search_te(n: int, num_seeds: int, master_seed: int = 0,
              params: SearchParams = SearchParams()) -> SearchSummary:
    """Descend from Haar-random seeds and re-verify every converged run."""
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"n must be in [{MIN_N}, {MAX_N}]")
    if num_seeds < 1:
        raise ValueError("num_seeds must be positive")

    def run(i):
        s = derive_seed(master_seed, i)
        res = minimize(haar_random_state(n, s), params, seed=s)
        if res.converged:
            res.verified = verify_te(res.state, DEFAULT_TOL).verdict
        return res

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(run, range(num_seeds)))
    return SearchSummary(n, master_seed, results, sum(r.verified for r in results))
