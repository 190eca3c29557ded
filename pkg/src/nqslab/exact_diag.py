"""Reference ground-state energies.

ed_full diagonalizes the 2^L Hamiltonian matrix-free (dense for small L);
ed_dicke works in the (L+1)-dimensional maximal-spin sector available for
the fully-connected model, which reaches L in the thousands.  Every result
passes a hard residual gate, so these energies are trustworthy references
for relative-error measurements.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import NumericalError, ResourceCapError
from .kernels import apply_hamiltonian, zz_batch
from .sampler import enumerate_configs

__all__ = ["EDResult", "ed_full", "ed_dicke"]

ED_FULL_L_CAP = 14
DENSE_CUTOFF = 10
RESIDUAL_GATE = 1e-8


@dataclass(frozen=True)
class EDResult:
    ground_energy: float
    method: str
    L: int
    residual_norm: float


def _diagonal(model) -> np.ndarray:
    spins, _ = enumerate_configs(model.L)
    return -zz_batch(spins, model)


def ed_full(model, l_cap: int = ED_FULL_L_CAP) -> EDResult:
    """Lowest eigenvalue of the full 2^L Hamiltonian."""
    L = model.L
    if L > l_cap:
        raise ResourceCapError(f"L={L} exceeds the exact-diagonalization cap ({l_cap})")
    diag = _diagonal(model)
    n = diag.size
    flip_index = [np.arange(n) ^ (1 << i) for i in range(L)]
    if L <= DENSE_CUTOFF:
        h = np.diag(diag)
        rows = np.arange(n)
        for i in range(L):
            h[rows, flip_index[i]] = -model.g
        energies, vectors = np.linalg.eigh(h)
        e0, v0 = float(energies[0]), vectors[:, 0]
        method = "dense-full"
    else:
        op = LinearOperator(
            (n, n), dtype=np.float64,
            matvec=lambda v: apply_hamiltonian(
                np.asarray(v, dtype=np.float64).ravel(), diag, model.g, L,
                flip_index=flip_index))
        # the ground state has uniform sign, so an all-ones start always overlaps
        v_start = np.full(n, 1.0 / np.sqrt(n))
        vals, vecs = eigsh(op, k=1, which="SA", v0=v_start, tol=1e-10,
                           maxiter=50_000)
        e0, v0 = float(vals[0]), vecs[:, 0]
        method = "iterative-full"
    residual = float(np.linalg.norm(
        apply_hamiltonian(v0, diag, model.g, L, flip_index=flip_index) - e0 * v0))
    if residual > RESIDUAL_GATE:
        raise NumericalError(f"eigenpair residual {residual} exceeds {RESIDUAL_GATE}")
    return EDResult(ground_energy=e0, method=method, L=L, residual_norm=residual)


def ed_dicke(model) -> EDResult:
    """Ground energy from the maximal-total-spin sector (alpha = 0 only).

    Basis |n> with n up-spins, m = 2n - L.  The interaction is diagonal,
    -(J/L)(m^2 - L); the transverse field connects neighbours with matrix
    element -g * sqrt((n + 1)(L - n)).
    """
    if model.alpha != 0:
        raise ValueError("the collective-spin sector requires alpha = 0")
    L = model.L
    n = np.arange(L + 1, dtype=np.float64)
    m = 2.0 * n - L
    diag = -(model.J / model.kac) * (m ** 2 - L)
    off = -model.g * np.sqrt((n[:-1] + 1.0) * (L - n[:-1]))
    energies, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    e0, v0 = float(energies[0]), vectors[:, 0]
    hv = diag * v0
    hv[:-1] += off * v0[1:]
    hv[1:] += off * v0[:-1]
    residual = float(np.linalg.norm(hv - e0 * v0))
    if residual > RESIDUAL_GATE:
        raise NumericalError(f"eigenpair residual {residual} exceeds {RESIDUAL_GATE}")
    return EDResult(ground_energy=e0, method="dicke-sector", L=L, residual_norm=residual)
