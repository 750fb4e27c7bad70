"""SDPA sparse format (``.dat-s``) export and import.

SDPA describes ``max F0 . Y  s.t.  Fi . Y = ci,  Y psd`` (its "dual"), which is
our standard form with ``Fi = A_i``, ``ci = b_i`` and ``F0 = -C``.  LP cones
become diagonal blocks written with a negative size.  Only upper-triangle
entries are written; floats use ``repr`` so values survive a round trip.
"""
from __future__ import annotations

import io
import os
import re

import numpy as np
import scipy.sparse as sp

from .problem import Cone, ConicProblem, symmetrize_coefficients, triu_index


def _entries(cone: Cone, v: np.ndarray):
    """Upper-triangle (i, j, value) of the matrix paired with coefficients ``v``."""
    M = symmetrize_coefficients(cone, v)
    if cone.kind == "lp":
        for i in np.flatnonzero(M):
            yield i, i, M[i]
        return
    iu, ju = np.triu_indices(cone.size)
    for i, j in zip(iu, ju):
        if M[i, j] != 0.0:
            yield i, j, M[i, j]


def dumps(p: ConicProblem, comment: str = "") -> str:
    out = io.StringIO()
    for line in comment.splitlines() or [""]:
        out.write(f'"{line}\n' if line else '"\n')
    out.write(f"{p.nconstraints}\n{len(p.cones)}\n")
    out.write(" ".join(str(k.size if k.kind == "psd" else -k.size) for k in p.cones) + "\n")
    out.write(" ".join(repr(float(v)) for v in p.b) + "\n")

    A = p.A.tocsr()
    for k, cone in enumerate(p.cones):
        sl = p.block_slice(k)
        for i, j, v in _entries(cone, -p.c[sl]):
            out.write(f"0 {k + 1} {i + 1} {j + 1} {float(v)!r}\n")
    Ac = A.tocsc()
    for k, cone in enumerate(p.cones):
        sl = p.block_slice(k)
        blk = Ac[:, sl].tocsr()
        for r in range(p.nconstraints):
            lo, hi = blk.indptr[r], blk.indptr[r + 1]
            if lo == hi:
                continue
            row = np.zeros(cone.nvar)
            row[blk.indices[lo:hi]] = blk.data[lo:hi]
            for i, j, v in _entries(cone, row):
                out.write(f"{r + 1} {k + 1} {i + 1} {j + 1} {float(v)!r}\n")
    return out.getvalue()


def export_sdpa(p: ConicProblem, destination, comment: str = "") -> None:
    """Write ``p`` in SDPA sparse format to a path or a text stream."""
    text = dumps(p, comment)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w") as fh:
            fh.write(text)
    else:
        destination.write(text)


_SPLIT = re.compile(r"[\s,{}()]+")


def loads(text: str) -> ConicProblem:
    lines = [ln for ln in text.splitlines() if ln.strip() and ln.lstrip()[0] not in '"*']
    tokens = lambda ln: [t for t in _SPLIT.split(ln.strip()) if t]
    m = int(tokens(lines[0])[0])
    nblocks = int(tokens(lines[1])[0])
    sizes = [int(t) for t in tokens(lines[2])[:nblocks]]
    cones = [Cone("psd", s) if s > 0 else Cone("lp", -s) for s in sizes]
    rest = [t for ln in lines[3:] for t in tokens(ln)]
    b = np.array([float(t) for t in rest[:m]])
    data = np.array(rest[m:], dtype=float).reshape(-1, 5) if len(rest) > m else np.zeros((0, 5))

    offsets = np.cumsum([0] + [k.nvar for k in cones])
    nvar = int(offsets[-1])
    c = np.zeros(nvar)
    rows, cols, vals = [], [], []
    for matno, blk, i, j, v in data:
        k = int(blk) - 1
        i, j = int(i) - 1, int(j) - 1
        cone = cones[k]
        if cone.kind == "lp":
            col = offsets[k] + i
            coef = v
        else:
            col = offsets[k] + triu_index(cone.size, i, j)
            coef = v if i == j else 2.0 * v
        if int(matno) == 0:
            c[col] -= coef
        else:
            rows.append(int(matno) - 1)
            cols.append(col)
            vals.append(coef)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, nvar))
    return ConicProblem(c=c, A=A, b=b, cones=cones)


def import_sdpa(source) -> ConicProblem:
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return loads(fh.read())
    return loads(source.read())
