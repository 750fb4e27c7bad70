"""Conic problem container and an affine builder for dual-form models.

A :class:`ConicProblem` is stored in standard primal form::

    minimize    c . x
    subject to  A x = b,   x in K_1 x ... x K_r

where every cone ``K_i`` is either a nonnegative orthant of size ``k`` or a
PSD cone of side ``d``.  A PSD block contributes ``d (d + 1) / 2`` variables,
its upper-triangle entries ``X[i, j]`` (``i <= j``) in row-major order,
unscaled.  A coefficient on an off-diagonal variable therefore multiplies
the single entry ``X[i, j]``, not the pair.

The associated dual is ``maximize b . y  s.t.  C - sum_k y_k A_k in K``,
which is the natural shape of moment relaxations and of LPs in free
variables; :class:`AffineConicBuilder` assembles problems from that side.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Cone:
    kind: str  # "lp" or "psd"
    size: int

    def __post_init__(self):
        if self.kind not in ("lp", "psd"):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("cone size must be positive")

    @property
    def nvar(self) -> int:
        if self.kind == "lp":
            return self.size
        return self.size * (self.size + 1) // 2


def triu_index(d: int, i: int, j: int) -> int:
    """Offset of entry (i, j) in the row-major upper-triangle vectorization."""
    if i > j:
        i, j = j, i
    return i * d - i * (i - 1) // 2 + (j - i)


def triu_pairs(d: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(d)


@dataclass
class ConicProblem:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    cones: list[Cone]
    offsets: list[int] = field(init=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.offsets = list(np.cumsum([0] + [k.nvar for k in self.cones])[:-1])
        self.validate()

    @property
    def nvar(self) -> int:
        return sum(k.nvar for k in self.cones)

    @property
    def nconstraints(self) -> int:
        return self.A.shape[0]

    def validate(self) -> None:
        n = self.nvar
        if self.c.shape != (n,):
            raise ValueError(f"objective has {self.c.shape} entries, cones need {n}")
        if self.A.shape[1] != n:
            raise ValueError(f"constraint matrix has {self.A.shape[1]} columns, cones need {n}")
        if self.b.shape != (self.A.shape[0],):
            raise ValueError("right-hand side length does not match constraint rows")

    def block_slice(self, k: int) -> slice:
        return slice(self.offsets[k], self.offsets[k] + self.cones[k].nvar)

    def unpack(self, x: np.ndarray) -> list[np.ndarray]:
        """Split a vectorized point into per-cone arrays (PSD blocks as full matrices)."""
        out = []
        for k, cone in enumerate(self.cones):
            v = x[self.block_slice(k)]
            if cone.kind == "lp":
                out.append(np.array(v))
            else:
                d = cone.size
                M = np.zeros((d, d))
                iu = np.triu_indices(d)
                M[iu] = v
                M = M + np.triu(M, 1).T
                out.append(M)
        return out

    def pack(self, blocks: list[np.ndarray]) -> np.ndarray:
        parts = []
        for cone, B in zip(self.cones, blocks):
            if cone.kind == "lp":
                parts.append(np.asarray(B, dtype=float).ravel())
            else:
                parts.append(np.asarray(B, dtype=float)[np.triu_indices(cone.size)])
        return np.concatenate(parts) if parts else np.zeros(0)

    def slack(self, y: np.ndarray) -> list[np.ndarray]:
        """Dual slack ``C - A^T y`` per cone, PSD blocks as symmetric matrices."""
        return [symmetrize_coefficients(cone, v)
                for cone, v in zip(self.cones, self._split(self.c - self.A.T @ y))]

    def _split(self, v: np.ndarray) -> list[np.ndarray]:
        return [v[self.block_slice(k)] for k in range(len(self.cones))]


def symmetrize_coefficients(cone: Cone, v: np.ndarray) -> np.ndarray:
    """Turn objective-style coefficients into the matrix they pair with.

    A coefficient ``a`` on off-diagonal variable ``X[i, j]`` equals the trace
    inner product with a symmetric matrix holding ``a / 2`` at (i, j) and (j, i).
    """
    if cone.kind == "lp":
        return np.array(v, dtype=float)
    d = cone.size
    M = np.zeros((d, d))
    iu = np.triu_indices(d)
    M[iu] = v
    off = np.triu(M, 1) / 2.0
    return np.diag(np.diag(M)) + off + off.T


class AffineConicBuilder:
    """Collects dual-form constraints ``G_k(y) = C_k - sum_j y_j A_{k,j} in K_k``.

    Entries are added as ``G[i, j] += coef * y[var]`` (``var=None`` for the
    constant part).  Only one triangle of a PSD block needs to be given;
    the other is implied by symmetry.
    """

    def __init__(self, nvars: int):
        self.nvars = nvars
        self.cones: list[Cone] = []
        self._rows: list[int] = []  # variable index, -1 for constant
        self._cols: list[int] = []  # global vectorized column
        self._vals: list[float] = []
        self._nvec = 0

    def add_psd(self, d: int) -> int:
        self.cones.append(Cone("psd", d))
        self._nvec += d * (d + 1) // 2
        return len(self.cones) - 1

    def add_lp(self, k: int) -> int:
        self.cones.append(Cone("lp", k))
        self._nvec += k
        return len(self.cones) - 1

    def _offset(self, block: int) -> int:
        return sum(k.nvar for k in self.cones[:block])

    def add_entry(self, block: int, i: int, j: int, var: int | None, coef: float) -> None:
        cone = self.cones[block]
        if cone.kind == "lp":
            if i != j:
                raise ValueError("LP blocks are diagonal")
            col = self._offset(block) + i
            scale = 1.0
        else:
            col = self._offset(block) + triu_index(cone.size, i, j)
            scale = 1.0 if i == j else 2.0
        self._rows.append(-1 if var is None else var)
        self._cols.append(col)
        self._vals.append(scale * coef)

    def add_affine(self, block: int, i: int, j: int, terms: dict) -> None:
        """Add a linear form ``{var or None: coef}`` at position (i, j)."""
        for var, coef in terms.items():
            if coef != 0.0:
                self.add_entry(block, i, j, var, coef)

    def build(self, objective: np.ndarray) -> ConicProblem:
        """Problem whose dual maximizes ``objective . y``."""
        rows = np.asarray(self._rows, dtype=np.int64)
        cols = np.asarray(self._cols, dtype=np.int64)
        vals = np.asarray(self._vals, dtype=float)
        const = rows < 0
        c = np.zeros(self._nvec)
        np.add.at(c, cols[const], vals[const])
        # G = C - A^T y, so the stored A carries the negated coefficients
        A = sp.csr_matrix((-vals[~const], (rows[~const], cols[~const])),
                          shape=(self.nvars, self._nvec))
        A.sum_duplicates()
        return ConicProblem(c=c, A=A, b=np.asarray(objective, dtype=float), cones=list(self.cones))
