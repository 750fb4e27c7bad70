"""Maximal purity of spectra that are absolutely separable across 1|m-1 cuts.

The upper bound comes from a Lasserre moment relaxation of

    max  sum_i lam_i^2
    s.t. lam_1 >= ... >= lam_D >= 0,  sum_i lam_i = 1,
         4 lam_D lam_{D-2} - (lam_1 - lam_{D-1})^2 >= 0,
         [[2 lam_D, lam_{D-1} - lam_1], [lam_{D-1} - lam_1, 2 lam_{D-2}]] psd,

with ``D = 2**m``.  The normalization is used to eliminate ``lam_D``, so the
moments live on monomials in ``lam_1 .. lam_{D-1}``; keeping all ``D``
variables makes every feasible moment matrix singular.

A multi-start ascent over the same feasible set gives an independent lower
witness for the true maximum.
"""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from math import comb

import numpy as np
from scipy.optimize import minimize

from . import conic
from .asep import theta
from .parallel import thread_count

log = logging.getLogger(__name__)

MAX_MOMENT_SIDE = 1000
MAX_MOMENTS = 20000


# Polynomials are dicts {exponent tuple: coefficient} over the reduced variables.

def _padd(*polys):
    out: dict = {}
    for p in polys:
        for k, v in p.items():
            out[k] = out.get(k, 0.0) + v
    return {k: v for k, v in out.items() if v != 0.0}


def _pscale(p, s):
    return {k: s * v for k, v in p.items()}


def _pmul(p, q):
    out: dict = {}
    for a, u in p.items():
        for b, v in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, 0.0) + u * v
    return {k: v for k, v in out.items() if v != 0.0}


def _pdeg(p):
    return max((sum(k) for k in p), default=0)


def monomials(nvars: int, degree: int) -> list[tuple]:
    """Exponent tuples of degree <= ``degree``, graded then lexicographic."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


@dataclass
class MomentRelaxation:
    m: int
    D: int
    level: int
    problem: conic.ConicProblem
    index: dict  # monomial -> position in y (constant monomial excluded)
    basis: list  # moment-matrix row monomials
    offset: float  # constant term of the objective
    polys: dict = field(default_factory=dict)

    @property
    def moment_side(self) -> int:
        return len(self.basis)

    def moment_vector(self, lam) -> np.ndarray:
        """Moments of the point mass at spectrum ``lam`` (full length D)."""
        lam = np.asarray(lam, dtype=float)[: self.D - 1]
        y = np.empty(len(self.index))
        for mono, k in self.index.items():
            y[k] = np.prod(lam ** np.array(mono))
        return y

    def blocks_at(self, y) -> list[np.ndarray]:
        return self.problem.slack(np.asarray(y, dtype=float))

    def min_eigenvalue_at(self, y) -> float:
        vals = []
        for cone, B in zip(self.problem.cones, self.blocks_at(y)):
            vals.append(B.min() if cone.kind == "lp" else np.linalg.eigvalsh(B).min())
        return float(min(vals))


def _spectrum_polys(D: int):
    n = D - 1
    one = {(0,) * n: 1.0}
    lam = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        lam.append({tuple(e): 1.0})
    lam.append(_padd(one, *[_pscale(p, -1.0) for p in lam]))
    return one, lam


class RelaxationTooLarge(ValueError):
    """Refusal to assemble a relaxation above the configured size caps."""

    def __init__(self, report: dict):
        self.report = report
        super().__init__(f"relaxation too large: moment matrix side {report['moment_side']}, "
                         f"{report['moments']} moments (m={report['m']}, level={report['level']})")


def size_report(m: int, level: int) -> dict:
    n = 2 ** m - 1
    return {
        "m": m,
        "level": level,
        "moment_side": comb(n + level, level),
        "moments": comb(n + 2 * level, 2 * level) - 1,
        "localizing_side": comb(n + level - 1, level - 1),
    }


def assemble_relaxation(m: int, level: int, max_moment_side: int = MAX_MOMENT_SIDE,
                        max_moments: int = MAX_MOMENTS) -> MomentRelaxation:
    if m not in (2, 3, 4):
        raise ValueError("marginal size m must be 2, 3 or 4")
    if level < 1:
        raise ValueError("relaxation level must be at least 1")
    report = size_report(m, level)
    if report["moment_side"] > max_moment_side or report["moments"] > max_moments:
        raise RelaxationTooLarge(report)

    D = 2 ** m
    n = D - 1
    one, lam = _spectrum_polys(D)
    moms = monomials(n, 2 * level)
    index = {mono: k - 1 for k, mono in enumerate(moms) if k > 0}
    b = conic.AffineConicBuilder(len(index))

    def linear_form(poly):
        return {index.get(mono): coef for mono, coef in poly.items()}

    def localizing(block, row0, col0, poly, order, sym=True):
        basis = monomials(n, order)
        for i, a in enumerate(basis):
            for j, c in enumerate(basis):
                if sym and j < i:
                    continue
                shifted = {tuple(x + y + z for x, y, z in zip(a, c, mono)): coef
                           for mono, coef in poly.items()}
                terms: dict = {}
                for mono, coef in shifted.items():
                    key = index.get(mono)
                    terms[key] = terms.get(key, 0.0) + coef
                b.add_affine(block, row0 + i, col0 + j, terms)
        return len(basis)

    lp_rows = []  # polynomials whose moment functional must be >= 0
    psd_specs = []  # (poly, order) for scalar localizing blocks of side > 1

    # moment matrix
    basis = monomials(n, level)
    blk = b.add_psd(len(basis))
    localizing(blk, 0, 0, one, level)

    ordering = [_padd(lam[i], _pscale(lam[i + 1], -1.0)) for i in range(D - 1)]
    linear = ordering + [lam[D - 1]]
    i1, iDm2, iDm1, iD = 0, D - 3, D - 2, D - 1
    as_quad = _padd(
        _pscale(_pmul(lam[iD], lam[iDm2]), 4.0),
        _pscale(_pmul(lam[iDm1], lam[iDm1]), -1.0),
        _pscale(_pmul(lam[i1], lam[iDm1]), 2.0),
        _pscale(_pmul(lam[i1], lam[i1]), -1.0),
    )
    # redundant on the simplex; bounds the top-degree moments so the
    # relaxation is compact and its certificate side strictly feasible
    ball = _padd(one, *[_pscale(_pmul(p, p), -1.0) for p in lam])
    for g in linear + [as_quad, ball]:
        if level - 1 == 0:
            lp_rows.append(g)
        else:
            psd_specs.append((g, level - 1))

    # products of pairs: nonnegativity and elementwise ordering of lam_i lam_j
    for i in range(D):
        for j in range(i, D):
            lp_rows.append(_pmul(lam[i], lam[j]))
    for i in range(D - 1):
        for j in range(D):
            lp_rows.append(_padd(_pmul(lam[i], lam[j]), _pscale(_pmul(lam[i + 1], lam[j]), -1.0)))

    for g, order in psd_specs:
        side = comb(n + order, order)
        blk = b.add_psd(side)
        localizing(blk, 0, 0, g, order)

    # AS in matrix form, localized
    order = level - 1
    s = comb(n + order, order)
    g11 = _pscale(lam[iD], 2.0)
    g12 = _padd(lam[iDm1], _pscale(lam[i1], -1.0))
    g22 = _pscale(lam[iDm2], 2.0)
    blk = b.add_psd(2 * s)
    localizing(blk, 0, 0, g11, order)
    localizing(blk, s, s, g22, order)
    localizing(blk, 0, s, g12, order, sym=False)

    lp = b.add_lp(len(lp_rows))
    for r, g in enumerate(lp_rows):
        b.add_affine(lp, r, r, linear_form(g))

    purity = _padd(*[_pmul(p, p) for p in lam])
    objective = np.zeros(len(index))
    offset = 0.0
    for mono, coef in purity.items():
        if mono in index:
            objective[index[mono]] += coef
        else:
            offset += coef
    problem = b.build(objective)
    return MomentRelaxation(m=m, D=D, level=level, problem=problem, index=index, basis=basis,
                            offset=offset, polys={"as_quad": as_quad, "ball": ball, "purity": purity})


@dataclass
class UpperBoundResult:
    m: int
    level: int
    value: float
    dual_value: float
    status: str
    iterations: int
    seconds: float
    moment_side: int
    moments: int

    @property
    def ok(self) -> bool:
        return self.status == conic.OPTIMAL


def upper_bound(m: int, level: int, **kwargs) -> UpperBoundResult:
    """Certified upper bound on the purity of AS_{1|m-1} spectra."""
    t0 = time.perf_counter()
    rel = assemble_relaxation(m, level, **kwargs)
    sol = conic.solve(rel.problem)
    dt = time.perf_counter() - t0
    log.info("upper bound m=%d level=%d: %.10f (%s, %d its, %.1fs)", m, level,
             sol.primal_value + rel.offset, sol.status, sol.iterations, dt)
    return UpperBoundResult(m=m, level=level, value=sol.primal_value + rel.offset,
                            dual_value=sol.dual_value + rel.offset, status=sol.status,
                            iterations=sol.iterations, seconds=dt,
                            moment_side=rel.moment_side, moments=len(rel.index))


@dataclass
class OracleResult:
    spectrum: np.ndarray
    purity: float
    restarts: int
    theta: float


def _pav_decreasing(v: np.ndarray) -> np.ndarray:
    """Least-squares projection onto non-increasing sequences (pool adjacent violators)."""
    vals, counts = [], []
    for x in v:
        vals.append(float(x))
        counts.append(1)
        while len(vals) > 1 and vals[-2] < vals[-1]:
            c = counts[-2] + counts[-1]
            vals[-2] = (vals[-2] * counts[-2] + vals[-1] * counts[-1]) / c
            counts[-2] = c
            vals.pop()
            counts.pop()
    return np.repeat(vals, counts)


def project_sorted_simplex(v: np.ndarray) -> np.ndarray:
    """Projection onto {x_1 >= ... >= x_D >= 0, sum x = 1}.

    Isotonic regression commutes with constant shifts and keeps the order
    after clipping at zero, so the simplex threshold can be read off the
    pooled sequence directly.
    """
    iso = _pav_decreasing(np.asarray(v, dtype=float))
    k = np.arange(1, iso.size + 1)
    tau = (np.cumsum(iso) - 1.0) / k
    r = np.nonzero(iso > tau)[0]
    r = r[-1] if r.size else 0
    return np.maximum(iso - tau[r], 0.0)


def _theta_grad(lam, eps):
    D = lam.size
    g = np.zeros(D)
    root = np.sqrt(lam[D - 3] * lam[D - 1] + eps * eps)
    g[0] += 1.0
    g[D - 2] -= 1.0
    g[D - 3] -= lam[D - 1] / root
    g[D - 1] -= lam[D - 3] / root
    return g


def _repair(lam: np.ndarray) -> np.ndarray:
    """Shrink toward the maximally mixed spectrum until theta <= 0."""
    if theta(lam) <= 0:
        return lam
    u = np.full(lam.size, 1.0 / lam.size)
    lo, hi = 0.0, 1.0  # hi is feasible
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if theta((1 - mid) * lam + mid * u) <= 0:
            hi = mid
        else:
            lo = mid
    return (1 - hi) * lam + hi * u


def _ascend(lam, iters=150, step=0.05, eps=1e-12):
    w = 10.0
    for _ in range(16):
        for _ in range(iters):
            t = theta(lam, eps)
            grad = 2.0 * lam
            if t > 0:
                grad = grad - 2.0 * w * t * _theta_grad(lam, eps)
            new = project_sorted_simplex(lam + step / (1.0 + w * 1e-2) * grad)
            if np.abs(new - lam).max() < 1e-13:
                break
            lam = new
        if theta(lam) <= 1e-10:
            break
        w *= 2.0
    return _repair(lam)


def _polish(lam):
    D = lam.size
    cons = [
        {"type": "eq", "fun": lambda x: x.sum() - 1.0, "jac": lambda x: np.ones(D)},
        {"type": "ineq", "fun": lambda x: x[:-1] - x[1:]},
        {"type": "ineq", "fun": lambda x: x[-1:]},
        {"type": "ineq",
         "fun": lambda x: np.array([4 * x[D - 1] * x[D - 3] - (x[0] - x[D - 2]) ** 2])},
    ]
    res = minimize(lambda x: -np.dot(x, x), lam, jac=lambda x: -2 * x, method="SLSQP",
                   constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
    if not np.all(np.isfinite(res.x)) or np.abs(res.x).max() > 2.0:
        return lam
    cand = _repair(project_sorted_simplex(res.x))
    return cand if np.dot(cand, cand) > np.dot(lam, lam) else lam


def _restart(D: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    # spread the Dirichlet concentration so that both peaked and nearly
    # flat starting spectra are sampled
    alpha = 10.0 ** rng.uniform(-1.0, 1.0)
    start = rng.dirichlet(np.full(D, alpha))
    if not np.all(np.isfinite(start)):
        start = rng.dirichlet(np.ones(D))
    start = np.sort(start)[::-1]
    return _polish(_ascend(start))


def oracle_max_purity(m: int, restarts: int = 200, seed: int = 0) -> OracleResult:
    """Best AS_{1|m-1} spectrum found by multi-start penalized projected ascent.

    Each restart has its own child seed, so the result does not depend on
    the number of worker threads.
    """
    if m not in (2, 3, 4):
        raise ValueError("marginal size m must be 2, 3 or 4")
    if restarts < 1:
        raise ValueError("at least one restart is needed")
    D = 2 ** m
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        found = list(pool.map(lambda s: _restart(D, s), seeds))
    purities = [float(np.dot(lam, lam)) for lam in found]
    i = int(np.argmax(purities))
    best = found[i]
    return OracleResult(spectrum=best, purity=purities[i], restarts=restarts,
                        theta=float(theta(best)))
