"""Absolute separability of marginals and threshold-entanglement checks."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .qcore import num_qubits, partial_trace, spectrum

DEFAULT_TOL = 1e-9
REPORT_FORMAT = "tesh-report-v1"


def theta(lam, eps: float = 0.0) -> float:
    """Spectral AS criterion; ``<= 0`` means AS across every qubit-vs-rest cut.

    ``lam`` must be sorted non-increasingly.  ``eps`` smooths the square root
    as ``sqrt(lam_{D-2} lam_D + eps^2)`` and is zero for certification.
    """
    lam = np.asarray(lam, dtype=float)
    D = lam.shape[-1]
    if D < 4:
        raise ValueError("theta needs a spectrum with at least four entries")
    prod = lam[..., D - 3] * lam[..., D - 1]
    return lam[..., 0] - lam[..., D - 2] - 2.0 * np.sqrt(np.maximum(prod, 0.0) + eps * eps)


def is_as(lam, tol: float = DEFAULT_TOL) -> bool:
    return bool(theta(lam) <= tol)


def half_subsets(n: int):
    return list(itertools.combinations(range(n), n // 2))


def marginal_spectra(psi) -> list[tuple[tuple, np.ndarray]]:
    n = num_qubits(np.asarray(psi))
    return [(S, spectrum(partial_trace(psi, S))) for S in half_subsets(n)]


def cost_theta(psi, eps: float = 0.0) -> float:
    n = num_qubits(np.asarray(psi))
    if n < 4:
        raise ValueError("the cost needs at least four qubits")
    return float(sum(max(0.0, theta(lam, eps)) ** 2 for _, lam in marginal_spectra(psi)))


@dataclass
class SubsetRecord:
    subset: tuple
    size: int
    theta: float
    absolutely_separable: bool


@dataclass
class TEReport:
    n: int
    records: list[SubsetRecord]
    verdict: bool
    tolerance: float
    certified: str = "AS_{1|rest} certified"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "n": self.n,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "certified": self.certified,
            "max_theta": max(r.theta for r in self.records),
            "records": [dict(asdict(r), subset=list(r.subset)) for r in self.records],
            **self.extra,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def verify_te(psi, tol: float = DEFAULT_TOL) -> TEReport:
    """Check theta <= tol on every marginal of floor(n/2) qubits.

    Smaller marginals need no separate check: if a state on s qubits is
    AS across 1|s-1, each of its (s-1)-qubit marginals is AS across 1|s-2.
    """
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    n = num_qubits(np.asarray(psi))
    if n < 4:
        raise ValueError("TE verification needs at least four qubits")
    records = []
    for S, lam in marginal_spectra(psi):
        t = float(theta(lam))
        records.append(SubsetRecord(S, len(S), t, t <= tol))
    return TEReport(n=n, records=records, verdict=all(r.absolutely_separable for r in records),
                    tolerance=tol)
