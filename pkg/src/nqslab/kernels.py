"""Hot numeric kernels with numba acceleration and pure-numpy fallbacks.

Set the environment variable NQSLAB_NUMBA=0 before import to force the
numpy/python paths; the public dispatchers (zz_batch, metropolis_sweep,
apply_hamiltonian) then route around numba entirely.  All randomness is
generated by the caller, so results are identical across backends.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAS_NUMBA",
    "NUMBA_ENABLED",
    "backend",
    "zz_batch",
    "zz_batch_numpy",
    "zz_batch_numba",
    "metropolis_sweep",
    "metropolis_sweep_python",
    "sector_energy",
    "sector_energy_python",
    "apply_hamiltonian",
    "apply_hamiltonian_numpy",
    "apply_hamiltonian_numba",
]

_flag = os.environ.get("NQSLAB_NUMBA", "1").lower() not in ("0", "false", "no")
try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*a, **k):
        def wrap(fn):
            return fn

        return wrap


NUMBA_ENABLED = _flag and HAS_NUMBA


def backend() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# Batch Ising interaction sum: I(s) = sum_{ordered i != j} c_{d(i,j)} s_i s_j


def zz_batch_numpy(spins: np.ndarray, coupling_matrix: np.ndarray) -> np.ndarray:
    s = spins.astype(np.float64, copy=False)
    return np.einsum("ni,ij,nj->n", s, coupling_matrix, s)


def _zz_batch_loop(spins, cbd, half, even):
    n_states, L = spins.shape
    out = np.zeros(n_states)
    for n in range(n_states):
        acc = 0.0
        for d in range(1, half + 1):
            corr = 0.0
            for i in range(L):
                j = i + d
                if j >= L:
                    j -= L
                corr += spins[n, i] * spins[n, j]
            if even and d == half:
                acc += cbd[d] * corr  # antipodal shift already covers both orders
            else:
                acc += 2.0 * cbd[d] * corr
        out[n] = acc
    return out


_zz_batch_jit = njit(cache=True)(_zz_batch_loop) if HAS_NUMBA else _zz_batch_loop


def zz_batch_numba(spins: np.ndarray, cbd: np.ndarray, L: int) -> np.ndarray:
    if not HAS_NUMBA:
        raise RuntimeError("numba is not available")
    return _zz_batch_jit(np.ascontiguousarray(spins, dtype=np.int8),
                         np.ascontiguousarray(cbd), L // 2, L % 2 == 0)


def zz_batch(spins: np.ndarray, model) -> np.ndarray:
    """Interaction sum (including the J/kac prefactor) for a batch of configs."""
    if NUMBA_ENABLED:
        return zz_batch_numba(spins, model.coupling_by_distance, model.L)
    return zz_batch_numpy(spins, model.coupling_matrix())


# ---------------------------------------------------------------------------
# Metropolis single-spin-flip sweep.  Acceptance min(1, exp(2 * dlog)) with
# dlog read from the magnetization-indexed log-amplitude table.


def _sweep(spins, m, logpsi, uniforms, sites):
    L = spins.shape[0]
    accepted = 0
    for t in range(sites.shape[0]):
        i = sites[t]
        s = spins[i]
        m_new = m - 2 * s
        dlog = logpsi[m_new + L] - logpsi[m + L]
        if dlog >= 0.0 or uniforms[t] < np.exp(2.0 * dlog):
            spins[i] = -s
            m = m_new
            accepted += 1
    return m, accepted


metropolis_sweep_python = _sweep
_sweep_jit = njit(cache=True)(_sweep) if HAS_NUMBA else _sweep


def metropolis_sweep(spins, m, logpsi, uniforms, sites):
    """One sweep of len(sites) proposed flips; mutates spins, returns (m, accepted)."""
    fn = _sweep_jit if NUMBA_ENABLED else metropolis_sweep_python
    return fn(spins, m, logpsi, uniforms, sites)


# ---------------------------------------------------------------------------
# Fused magnetization-sector energy for the fully-connected model: one pass
# over the L + 1 sectors computing amplitudes, weights, and local energies.
# Activation codes: 0 = logcosh, 1 = abs, 2 = linear.

_LOG2 = 0.6931471805599453


def _sector_energy_loop(weights, act, log_binom, j_eff, g, L):
    n = L + 1
    lp = np.empty(n)
    for i in range(n):
        m = 2.0 * i - L
        acc = 0.0
        for k in range(weights.shape[0]):
            x = weights[k] * m
            if act == 0:
                ax = abs(x)
                acc += ax - _LOG2 + np.log1p(np.exp(-2.0 * ax))
            elif act == 1:
                acc += abs(x)
            else:
                acc += x
        lp[i] = acc
    max_lw = -np.inf
    for i in range(n):
        lw = log_binom[i] + 2.0 * lp[i]
        if lw > max_lw:
            max_lw = lw
    w_sum = 0.0
    e_sum = 0.0
    e2_sum = 0.0
    for i in range(n):
        w = np.exp(log_binom[i] + 2.0 * lp[i] - max_lw)
        m = 2.0 * i - L
        e = -j_eff * (m * m - L)
        t = 0.0
        if i > 0:  # i up-spins, each flip lowers m by 2
            t += i * np.exp(lp[i - 1] - lp[i])
        if i < L:  # L - i down-spins, each flip raises m by 2
            t += (L - i) * np.exp(lp[i + 1] - lp[i])
        e -= g * t
        w_sum += w
        e_sum += w * e
        e2_sum += w * e * e
    return e_sum / w_sum, e2_sum / w_sum


sector_energy_python = _sector_energy_loop
_sector_energy_jit = njit(cache=True)(_sector_energy_loop) if HAS_NUMBA \
    else _sector_energy_loop


def sector_energy(weights, act_code, log_binom, j_eff, g, L):
    """Sector-summed (<E>, <E^2>) of the fully-connected model; O(K L)."""
    fn = _sector_energy_jit if NUMBA_ENABLED else sector_energy_python
    return fn(weights, act_code, log_binom, float(j_eff), float(g), L)


# ---------------------------------------------------------------------------
# Matrix-free Hamiltonian application on the full 2^L basis:
# (Hv)[a] = diag[a] v[a] - g * sum_i v[a ^ (1 << i)]


def apply_hamiltonian_numpy(v, diag, g, L, flip_index=None):
    out = diag * v
    if g != 0.0:
        idx = np.arange(v.shape[0])
        for i in range(L):
            flips = flip_index[i] if flip_index is not None else idx ^ (1 << i)
            out -= g * v[flips]
    return out


def _matvec_loop(v, diag, g, L):
    n = v.shape[0]
    out = np.empty(n)
    for a in range(n):
        acc = diag[a] * v[a]
        for i in range(L):
            acc -= g * v[a ^ (1 << i)]
        out[a] = acc
    return out


_matvec_jit = njit(cache=True)(_matvec_loop) if HAS_NUMBA else _matvec_loop


def apply_hamiltonian_numba(v, diag, g, L):
    if not HAS_NUMBA:
        raise RuntimeError("numba is not available")
    return _matvec_jit(np.ascontiguousarray(v, dtype=np.float64),
                       np.ascontiguousarray(diag), float(g), L)


def apply_hamiltonian(v, diag, g, L, flip_index=None):
    if NUMBA_ENABLED:
        return apply_hamiltonian_numba(v, diag, g, L)
    return apply_hamiltonian_numpy(v, diag, g, L, flip_index)
