"""Reference states shipped with the package as ``tesh-state-v1`` files.

``phi4``    four-qubit state with marginal spectrum (1/2, 1/6, 1/6, 1/6)
``c5``      graph state of the 5-cycle, an AME(5, 2) state
``wheel6``  graph state of the 6-vertex wheel, an AME(6, 2) state
``te7``     seven-qubit state found by the gradient search (master seed 0)
``zeroN``   the product state |0...0> for N = 2..9
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from ..qcore import read_state

# fixtures that certify existence of TE states at a given n
TE_FIXTURES = {4: "phi4", 5: "c5", 6: "wheel6", 7: "te7"}
KNOWN_AME = {5: "c5", 6: "wheel6"}


def fixture_path(name: str):
    path = resources.files(__name__).joinpath(f"{name}.json")
    if not path.is_file():
        raise FileNotFoundError(f"no fixture named {name!r}")
    return path


def load_fixture(name: str) -> np.ndarray:
    with resources.as_file(fixture_path(name)) as p:
        return read_state(p)


def available() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir()
                  if p.name.endswith(".json"))
