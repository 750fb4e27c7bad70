"""Weight enumerators, shadow enumerators and the LP bound on marginal purity.

For an n-qubit pure state, ``a'_j`` is the sum of the purities of all its
j-qubit marginals.  The Pauli-weight enumerator ``A_j`` and the shadow
enumerator ``S_j`` are linear transforms of ``a'``; physical states have
``A_j >= 0``, ``S_j >= 0`` and ``S_j = 0`` for odd ``n - j``.  Minimizing
the normalized ``a'_{floor(n/2)}`` over these constraints bounds the
average half-marginal purity of any pure state from below.
"""
from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import conic
from .qcore import num_qubits, subset_purity

MIN_N = 2
MAX_N = 12
FEASIBILITY_TOL = 1e-8
CERTIFICATE_GAP_TOL = 1e-7


def krawtchouk(n: int, m: int, k: int) -> int:
    """K_m(k) = sum_a C(n-k, m-a) C(k, a) (-1)^a, in exact integers."""
    for name, v in (("n", n), ("m", m), ("k", k)):
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
            raise TypeError(f"{name} must be an integer")
    if n < 0 or not (0 <= m <= n and 0 <= k <= n):
        raise ValueError(f"need 0 <= m, k <= n, got n={n}, m={m}, k={k}")
    return sum((-1) ** a * comb(n - k, m - a) * comb(k, a) for a in range(m + 1))


def krawtchouk_matrix(n: int) -> np.ndarray:
    """Integer matrix with rows j and columns k holding K_{n-j}(k)."""
    return np.array([[krawtchouk(n, n - j, k) for k in range(n + 1)] for j in range(n + 1)],
                    dtype=np.int64)


def weight_matrix(n: int) -> np.ndarray:
    """Integer matrix T with A = T a', T[j, r] = (-1)^(j-r) 2^r C(n-r, n-j)."""
    T = np.zeros((n + 1, n + 1), dtype=np.int64)
    for j in range(n + 1):
        for r in range(j + 1):
            T[j, r] = (-1) ** (j - r) * 2 ** r * comb(n - r, n - j)
    return T


@dataclass
class EnumeratorVector:
    n: int
    aprime: np.ndarray

    def __post_init__(self):
        self.aprime = np.asarray(self.aprime, dtype=float)
        if self.aprime.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} enumerator entries, got {self.aprime.shape}")
        if abs(self.aprime[0] - 1.0) > 1e-12:
            raise ValueError("a'_0 must equal 1")
        if np.any(self.aprime < 0):
            raise ValueError("summed purities must be nonnegative")


def aprime_from_state(psi) -> EnumeratorVector:
    psi = np.asarray(psi, dtype=complex)
    n = num_qubits(psi)
    ap = np.empty(n + 1)
    ap[0] = ap[n] = 1.0
    for j in range(1, n):
        ap[j] = sum(subset_purity(psi, S) for S in itertools.combinations(range(n), j))
    return EnumeratorVector(n, ap)


def a_from_aprime(e: EnumeratorVector) -> np.ndarray:
    return weight_matrix(e.n).astype(float) @ e.aprime


def shadow_from_aprime(e: EnumeratorVector) -> np.ndarray:
    return krawtchouk_matrix(e.n).astype(float) @ e.aprime


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not MIN_N <= n <= MAX_N:
        raise ValueError(f"n must be an integer in [{MIN_N}, {MAX_N}], got {n!r}")


def _parametrization(n: int):
    """a' = P t + q with t_j = a'_j = a'_{n-j} for 1 <= j <= floor(n/2)."""
    h = n // 2
    P = np.zeros((n + 1, h))
    q = np.zeros(n + 1)
    q[0] = q[n] = 1.0
    for j in range(1, h + 1):
        P[j, j - 1] = 1.0
        P[n - j, j - 1] = 1.0
    return P, q


def _constraint_rows(n: int, extra_cuts: bool):
    """Inequalities ``G t + g >= 0`` in the symmetric parameters, with labels.

    The odd shadow equalities are identically zero once a' is symmetric:
    the row of K_{n-j} for odd n - j is antisymmetric under k -> n - k.
    They are checked here rather than imposed, which would leave the LP
    without an interior point.
    """
    P, q = _parametrization(n)
    T = weight_matrix(n).astype(float)
    K = krawtchouk_matrix(n).astype(float)
    rows, consts, labels = [], [], []
    for j in range(n + 1):
        rows.append(T[j] @ P)
        consts.append(T[j] @ q)
        labels.append(f"A_{j}")
    for j in range(n + 1):
        lin, c0 = K[j] @ P, K[j] @ q
        if (n - j) % 2:
            if np.abs(lin).max() > 0 or c0 != 0:
                raise AssertionError(f"odd shadow S_{j} is not implied by symmetry")
            continue
        rows.append(lin)
        consts.append(c0)
        labels.append(f"S_{j}")
    if extra_cuts:
        for j in range(1, n // 2 + 1):
            e = np.zeros(n // 2)
            e[j - 1] = 1.0
            rows.append(-e)
            consts.append(float(comb(n, j)))
            labels.append(f"purity<=1 ({j})")
            rows.append(e)
            consts.append(-comb(n, j) / 2.0 ** j)
            labels.append(f"purity>=2^-{j} ({j})")
    G = np.array(rows)
    g = np.array(consts)
    # rows that are constant carry no information but would break strict
    # feasibility when their constant is zero
    live = np.abs(G).max(axis=1) > 0
    if np.any(g[~live] < 0):
        raise AssertionError("a constant constraint row is violated")
    return G[live], g[live], [lab for lab, ok in zip(labels, live) if ok]


def build_lp(n: int, extra_cuts: bool = False) -> conic.ConicProblem:
    """The lower-bound LP in conic form; its dual value is minus the bound.

    Dual variables are the free enumerators ``t_j = a'_j`` for
    ``1 <= j <= floor(n/2)``; each inequality is one LP cone entry.
    """
    _check_n(n)
    G, g, _ = _constraint_rows(n, extra_cuts)
    h = n // 2
    bld = conic.AffineConicBuilder(h)
    blk = bld.add_lp(len(g))
    for r in range(len(g)):
        terms = {None: g[r]}
        terms.update({v: G[r, v] for v in range(h) if G[r, v] != 0})
        bld.add_affine(blk, r, r, terms)
    objective = np.zeros(h)
    objective[h - 1] = -1.0 / comb(n, h)
    return bld.build(objective)


@dataclass
class LPCertificate:
    n: int
    value: float | None
    aprime: np.ndarray | None
    status: str
    gap: float
    iterations: int = 0
    seconds: float = 0.0
    extra_cuts: bool = False
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == conic.OPTIMAL

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "value": self.value,
            "aprime": None if self.aprime is None else [float(v) for v in self.aprime],
            "status": self.status,
            "gap": self.gap,
            "iterations": self.iterations,
            "seconds": self.seconds,
            "extra_cuts": self.extra_cuts,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def lp_lower_bound(n: int, extra_cuts: bool = False) -> LPCertificate:
    """Minimum of a'_{floor(n/2)} / C(n, floor(n/2)) over the enumerator LP."""
    _check_n(n)
    t0 = time.perf_counter()
    sol = conic.solve(build_lp(n, extra_cuts))
    dt = time.perf_counter() - t0
    gap = abs(sol.primal_value - sol.dual_value)
    if sol.status != conic.OPTIMAL or gap > CERTIFICATE_GAP_TOL:
        status = sol.status if sol.status != conic.OPTIMAL else conic.NUMERICAL_FAILURE
        return LPCertificate(n, None, None, status, gap, sol.iterations, dt, extra_cuts)
    P, q = _parametrization(n)
    return LPCertificate(n, -sol.dual_value, P @ sol.y + q, sol.status, gap,
                         sol.iterations, dt, extra_cuts)


def lp_ame_feasible(n: int, tol: float = FEASIBILITY_TOL) -> bool:
    """Whether the AME purities a'_j = C(n, j) 2^-j (j <= n/2) satisfy the LP.

    Fixing these entries fixes every LP variable, so feasibility reduces
    to evaluating the constraint rows at that point.
    """
    _check_n(n)
    h = n // 2
    t = np.array([comb(n, j) / 2.0 ** j for j in range(1, h + 1)])
    G, g, _ = _constraint_rows(n, extra_cuts=False)
    return bool(np.all(G @ t + g >= -tol))
