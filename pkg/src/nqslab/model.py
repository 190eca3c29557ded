"""Ring geometry, power-law couplings and Kac normalization.

The Hamiltonian studied throughout the package is the long-range
transverse-field Ising chain on a periodic ring,

    H = -(J / N(L, alpha)) * sum_{i != j} s_i s_j / d(i,j)^alpha
        - g * sum_i S^x_i,

where d(i, j) is the minimum-image distance and N(L, alpha) is the Kac
factor that keeps the energy extensive for any interaction range.
alpha = 0 reproduces the fully-connected model exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelSpec",
    "SpinConfig",
    "pbc_distance",
    "harmonic_number",
    "pair_sum",
    "triple_sum",
    "kac_factor",
]


def pbc_distance(i: int, j: int, L: int) -> int:
    """Minimum-image distance between two distinct sites on a ring of L sites."""
    if not (0 <= i < L and 0 <= j < L):
        raise ValueError(f"site indices must lie in [0, {L}), got ({i}, {j})")
    if i == j:
        raise ValueError("self-coupling is excluded (i == j)")
    d = abs(i - j)
    return min(d, L - d)


def harmonic_number(n: int, r: float) -> float:
    """Generalized harmonic number H_{n,r} = sum_{k=1..n} k**(-r).

    n = 0 returns 0 (empty sum).  Summation runs from the smallest terms
    upward so the accumulation stays well conditioned for large n.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0.0
    k = np.arange(n, 0, -1, dtype=np.float64)
    return float(np.sum(k ** (-float(r))))


def pair_sum(L: int, alpha: float) -> float:
    """Ordered-pair sum over distinct sites of 1 / d(i,j)^alpha.

    For odd L every distance class 1..L//2 occurs twice per site; for even
    L the antipodal distance L/2 occurs only once per site, which is the
    over-counting correction to the naive 2*L*H term.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    m = L // 2
    total = 2.0 * L * harmonic_number(m, alpha)
    if L % 2 == 0:
        total -= L * float(m) ** (-float(alpha))
    return total


def triple_sum(L: int, alpha: float) -> float:
    """Sum over ordered triples of pairwise-distinct sites of
    1 / (d(i,j)^alpha * d(j,k)^alpha).

    Evaluated in O(L) through per-site distance sums: fixing the middle
    index j, the i and k sums factorize up to the i == k diagonal.
    """
    if L < 3:
        raise ValueError("L must be >= 3")
    p1 = pair_sum(L, alpha) / L          # per-site sum of d^-alpha
    p2 = pair_sum(L, 2.0 * alpha) / L    # per-site sum of d^-2alpha
    return L * (p1 * p1 - p2)


def kac_factor(L: int, alpha: float) -> float:
    """Kac normalization N(L, alpha) = pair_sum / (L - 1); equals L at alpha=0."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return pair_sum(L, alpha) / (L - 1)


@dataclass(frozen=True)
class ModelSpec:
    """Immutable Hamiltonian specification with cached coupling data."""

    L: int
    J: float = 1.0
    g: float = 1.0
    alpha: float = 0.0
    kac: float = field(init=False)
    # coupling_by_distance[d] = J / (kac * d^alpha) for d = 1..L//2 (index 0 unused)
    coupling_by_distance: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError("L must be an integer >= 2")
        if self.J <= 0:
            raise ValueError("J must be positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        object.__setattr__(self, "kac", kac_factor(self.L, self.alpha))
        d = np.arange(0, self.L // 2 + 1, dtype=np.float64)
        with np.errstate(divide="ignore"):
            cbd = (self.J / self.kac) * d ** (-float(self.alpha))
        cbd[0] = 0.0
        cbd.setflags(write=False)
        object.__setattr__(self, "coupling_by_distance", cbd)

    def coupling_matrix(self) -> np.ndarray:
        """Full L x L table J / (kac * d_ij^alpha) with zero diagonal."""
        L = self.L
        C = np.zeros((L, L))
        for i in range(L):
            for j in range(L):
                if i != j:
                    C[i, j] = self.coupling_by_distance[pbc_distance(i, j, L)]
        return C


@dataclass
class SpinConfig:
    """A length-L array of +-1 spins with cached total magnetization."""

    spins: np.ndarray
    m: int

    @classmethod
    def from_spins(cls, spins) -> "SpinConfig":
        s = np.asarray(spins, dtype=np.int8)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("spins must be a 1-D array of length >= 2")
        if not np.all(np.abs(s) == 1):
            raise ValueError("spin entries must be +1 or -1")
        return cls(spins=s, m=int(s.sum()))

    def flipped(self, i: int) -> "SpinConfig":
        """Copy of this configuration with spin i flipped."""
        s = self.spins.copy()
        s[i] = -s[i]
        return SpinConfig(spins=s, m=self.m + 2 * int(s[i]))
