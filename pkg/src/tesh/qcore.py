"""Pure-state numerics: construction, marginals, spectra, Pauli expectations.

Qubit 0 is the most significant bit of the amplitude index, so the label
``|0011>`` is amplitude index 3.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb

import numpy as np

MAX_QUBITS = 20
NORM_TOL = 1e-10
STATE_FORMAT = "tesh-state-v1"


class StateFormatError(ValueError):
    """A state file that does not follow the ``tesh-state-v1`` layout."""


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters or any(ch not in "IXYZ" for ch in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    def __str__(self):
        return self.letters


@dataclass(frozen=True)
class GraphSpec:
    n: int
    edges: frozenset

    def __init__(self, n: int, edges):
        norm = set()
        for a, b in edges:
            if a == b:
                raise ValueError("graph states do not allow self-loops")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) outside vertex range [0, {n})")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(norm))


def _check_n(n: int) -> None:
    if n < 1 or n > MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")


def num_qubits(psi: np.ndarray) -> int:
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 2 ** n != dim:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


def check_state(psi, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state must be a 1-d amplitude vector")
    num_qubits(psi)
    if abs(np.vdot(psi, psi).real - 1.0) > tol:
        raise ValueError("state is not normalized")
    return psi


def basis_state(bits: str) -> np.ndarray:
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def haar_random_state(n: int, seed: int) -> np.ndarray:
    _check_n(n)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    return z / np.linalg.norm(z)


def phi4_state() -> np.ndarray:
    w = np.exp(2j * np.pi / 3)
    psi = np.zeros(16, dtype=complex)
    for label, amp in (("0011", 1), ("1100", 1), ("0101", w), ("1010", w),
                       ("0110", w * w), ("1001", w * w)):
        psi[int(label, 2)] = amp
    return psi / np.sqrt(6)


def graph_state(g: GraphSpec) -> np.ndarray:
    n = g.n
    _check_n(n)
    idx = np.arange(2 ** n)
    bits = [(idx >> (n - 1 - i)) & 1 for i in range(n)]
    sign = np.ones(2 ** n)
    for a, b in sorted(g.edges):
        sign *= 1 - 2 * (bits[a] & bits[b])
    return sign.astype(complex) / np.sqrt(2 ** n)


def cycle_graph(n: int) -> GraphSpec:
    return GraphSpec(n, [(i, (i + 1) % n) for i in range(n)])


def _split(psi: np.ndarray, subset) -> np.ndarray:
    """Amplitudes reshaped to (2^|S|, 2^|S^c|) with the subset qubits as rows."""
    n = num_qubits(psi)
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    if any(q < 0 or q >= n for q in subset) or any(a >= b for a, b in zip(subset, subset[1:])):
        raise ValueError(f"subset {subset} must be strictly increasing indices below {n}")
    rest = [q for q in range(n) if q not in subset]
    t = psi.reshape((2,) * n).transpose(subset + rest)
    return t.reshape(2 ** len(subset), -1)


def partial_trace(psi, subset) -> np.ndarray:
    """Reduced density matrix on ``subset`` (complement traced out)."""
    M = _split(np.asarray(psi, dtype=complex), subset)
    return M @ M.conj().T


def spectrum(rho, tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues of a density matrix in non-increasing order."""
    rho = np.asarray(rho)
    herm_err = np.abs(rho - rho.conj().T).max()
    if herm_err > 1e-12 * max(1.0, np.abs(rho).max()):
        raise np.linalg.LinAlgError(f"matrix is not Hermitian (deviation {herm_err:.2e})")
    lam = np.linalg.eigvalsh(rho)[::-1]
    if lam.min() < -tol or lam.max() > 1 + tol:
        raise np.linalg.LinAlgError(f"eigenvalues outside [0, 1] beyond {tol}: {lam}")
    return np.clip(lam, 0.0, 1.0)


def purity(rho) -> float:
    return float(np.real(np.sum(np.abs(rho) ** 2)))


def subset_purity(psi, subset) -> float:
    M = _split(np.asarray(psi, dtype=complex), subset)
    # purity of M M^dag equals that of M^dag M; use the smaller Gram matrix
    G = M @ M.conj().T if M.shape[0] <= M.shape[1] else M.conj().T @ M
    return float(np.sum(np.abs(G) ** 2))


def average_marginal_purity(psi, k: int) -> float:
    n = num_qubits(np.asarray(psi))
    if not 1 <= k <= n:
        raise ValueError(f"subset size must be in [1, {n}]")
    total = sum(subset_purity(psi, S) for S in itertools.combinations(range(n), k))
    return total / comb(n, k)


def apply_pauli(psi, p: PauliString | str) -> np.ndarray:
    if isinstance(p, str):
        p = PauliString(p)
    psi = np.asarray(psi, dtype=complex)
    n = num_qubits(psi)
    if p.n != n:
        raise ValueError(f"Pauli string acts on {p.n} qubits, state has {n}")
    t = psi.reshape((2,) * n)
    for q, ch in enumerate(p.letters):
        if ch == "I":
            continue
        if ch in "XY":
            t = np.flip(t, axis=q)
        if ch in "ZY":
            # after the flip, index 0 along q holds the old |1> amplitude
            sl = [slice(None)] * n
            sl[q] = 0 if ch == "Y" else 1
            t = t.copy()
            t[tuple(sl)] *= -1
        if ch == "Y":
            t = t * 1j
    return t.reshape(-1)


def pauli_expectation(psi, p: PauliString | str) -> float:
    psi = np.asarray(psi, dtype=complex)
    val = np.vdot(psi, apply_pauli(psi, p))
    if abs(val.imag) > 1e-9:
        raise ArithmeticError(f"Pauli expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def write_state(psi, path) -> None:
    psi = np.asarray(psi, dtype=complex)
    doc = {
        "format": STATE_FORMAT,
        "n": num_qubits(psi),
        "amplitudes": [[float(a.real), float(a.imag)] for a in psi],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def read_state(path) -> np.ndarray:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"{path}: invalid JSON ({exc})") from exc
    return state_from_dict(doc, source=str(path))


def state_from_dict(doc, source: str = "<state>") -> np.ndarray:
    if not isinstance(doc, dict) or doc.get("format") != STATE_FORMAT:
        raise StateFormatError(f"{source}: expected format {STATE_FORMAT!r}")
    n = doc.get("n")
    amps = doc.get("amplitudes")
    if not isinstance(n, int) or not 1 <= n <= MAX_QUBITS:
        raise StateFormatError(f"{source}: bad qubit count {n!r}")
    if not isinstance(amps, list) or len(amps) != 2 ** n:
        raise StateFormatError(f"{source}: expected {2 ** n} amplitudes")
    try:
        psi = np.array([complex(float(re), float(im)) for re, im in amps])
    except (TypeError, ValueError) as exc:
        raise StateFormatError(f"{source}: amplitudes must be [re, im] pairs") from exc
    if abs(np.vdot(psi, psi).real - 1.0) > NORM_TOL:
        raise StateFormatError(f"{source}: state is not normalized")
    return psi
