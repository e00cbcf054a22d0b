"""Truncated bosonic Fock spaces."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np


@dataclass(frozen=True)
class FockSpace:
    """``m`` modes, each truncated at occupation ``n_max``.

    Modes are ordered left to right in the tensor product, so mode 1 is the
    slowest-varying index.
    """

    m: int
    n_max: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("number of modes must be non-negative")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def dim(self) -> int:
        return (self.n_max + 1) ** self.m

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def vacuum_dm(self) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho

    def single_excitation_index(self, k: int) -> int:
        """Basis index of one quantum in mode ``k`` (1-based), vacuum elsewhere."""
        if not 1 <= k <= self.m:
            raise ValueError(f"mode index {k} out of range 1..{self.m}")
        return (self.n_max + 1) ** (self.m - k)


def destroy(n_max: int) -> np.ndarray:
    """Single-mode annihilation operator on ``n_max + 1`` levels."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def build_bath_ops(space: FockSpace, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Ladder operators ``(a_k, a_k^dag)`` of mode ``k`` (1-based) on the full bath space."""
    if not 1 <= k <= space.m:
        raise ValueError(f"mode index {k} out of range 1..{space.m}")
    eye = np.eye(space.n_max + 1, dtype=complex)
    factors = [eye] * space.m
    factors[k - 1] = destroy(space.n_max)
    a = reduce(np.kron, factors)
    return a, a.conj().T


def number_op(space: FockSpace) -> np.ndarray:
    """Total occupation ``sum_k a_k^dag a_k``."""
    n = np.zeros((space.dim, space.dim), dtype=complex)
    for k in range(1, space.m + 1):
        a, ad = build_bath_ops(space, k)
        n += ad @ a
    return n
