"""Stabilizer Renyi entropies and Pauli stabilizers by full Pauli enumeration.

A Pauli string is indexed by bit masks ``(x, z)`` as ``i^{|x & z|} X^x Z^z``,
which is Hermitian with the usual letters ``I, X, Z, Y`` for bit pairs
``00, 10, 01, 11``.  Qubit 0 is the most significant bit.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import hadamard

from .parallel import thread_count
from .qcore import PauliString, haar_random_state, num_qubits

MAX_QUBITS = 8
HAAR_MAX_QUBITS = 7
PURITY_TOL = 1e-8


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64)
    c = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        c += (a & np.uint64(1)).astype(np.int64)
        a >>= np.uint64(1)
    return c


def pauli_expectations(psi) -> np.ndarray:
    """Real matrix ``E[x, z] = <psi| i^{|x&z|} X^x Z^z |psi>`` over all 4^n strings."""
    psi = np.asarray(psi, dtype=complex)
    n = num_qubits(psi)
    if n > MAX_QUBITS:
        raise ValueError(f"Pauli enumeration is limited to n <= {MAX_QUBITS}, got {n}")
    N = 2 ** n
    k = np.arange(N)
    F = np.conj(psi)[None, :] * psi[k[None, :] ^ k[:, None]]  # F[x, k] = psi_k^* psi_{k^x}
    W = F @ hadamard(N)
    phase = (-1j) ** (_popcount(k[:, None] & k[None, :]) % 4)
    E = phase * W
    if np.abs(E.imag).max() > 1e-9:
        raise ArithmeticError("Pauli expectations came out complex")
    return E.real


def pauli_label(x: int, z: int, n: int) -> str:
    letters = []
    for q in range(n):
        bit = n - 1 - q
        letters.append("IXZY"[((x >> bit) & 1) | (((z >> bit) & 1) << 1)])
    return "".join(letters)


@dataclass
class MagicReport:
    n: int
    alpha: float
    entropy: float
    moment_sum: float
    bound: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def magic_bound(n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    return float(np.log2(2.0 ** n + 1) - 1)


def stabilizer_renyi(psi, alpha: float = 2.0) -> MagicReport:
    """S_alpha = log2(sum_P <P>^(2 alpha) / 2^n) / (1 - alpha)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha == 1:
        raise ValueError("alpha = 1 (the Shannon limit) is not supported")
    psi = np.asarray(psi, dtype=complex)
    n = num_qubits(psi)
    E2 = pauli_expectations(psi) ** 2
    total = E2.sum()
    if abs(total - 2 ** n) > PURITY_TOL * 2 ** n:
        raise ArithmeticError(f"sum of squared Pauli expectations is {total}, expected {2 ** n}")
    moments = float(np.sum(E2 ** alpha))
    entropy = float(np.log2(moments / 2 ** n) / (1 - alpha))
    # exact stabilizer states can land a rounding error below zero
    if abs(entropy) < 1e-12:
        entropy = 0.0
    return MagicReport(n=n, alpha=float(alpha), entropy=entropy, moment_sum=moments,
                       bound=magic_bound(n))


def find_pauli_stabilizers(psi, tol: float = 1e-9) -> list[tuple[PauliString, int]]:
    """Non-identity Pauli strings with ``|<P>| >= 1 - tol``, with their signs."""
    psi = np.asarray(psi, dtype=complex)
    n = num_qubits(psi)
    E = pauli_expectations(psi)
    out = []
    for x, z in zip(*np.nonzero(np.abs(E) >= 1 - tol)):
        if x == 0 and z == 0:
            continue
        out.append((PauliString(pauli_label(int(x), int(z), n)), int(np.sign(E[x, z]))))
    return sorted(out, key=lambda t: t[0].letters)


def haar_magic_stats(n: int, samples: int, seed: int = 0, alpha: float = 2.0):
    """Mean and sample standard deviation of S_alpha over Haar-random states."""
    if not 1 <= n <= HAAR_MAX_QUBITS:
        raise ValueError(f"n must be in [1, {HAAR_MAX_QUBITS}]")
    if samples < 1:
        raise ValueError("samples must be positive")
    seeds = [int(s.generate_state(1, np.uint64)[0])
             for s in np.random.SeedSequence(seed).spawn(samples)]

    def one(s):
        return stabilizer_renyi(haar_random_state(n, s), alpha).entropy

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        vals = np.array(list(pool.map(one, seeds)))
    std = float(vals.std(ddof=1)) if samples > 1 else 0.0
    return float(vals.mean()), std
