"""Expectation values over |psi(s)|^2.

Three routes: full 2^L enumeration, O(L) magnetization-sector summation
(valid for observables that are pure functions of m, i.e. the alpha = 0
local energy), and single-spin-flip Metropolis for sizes beyond enumeration.

Observable callables use a batch signature
    local_fn(spins: (n, L) int8 array, ms: (n,) int array) -> (n,) floats
so the same function serves every route.  Sector-route observables take
only the ms array.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .ansatz import log_amplitude_table
from .errors import NumericalError, ResourceCapError
from .kernels import metropolis_sweep

__all__ = [
    "EstimatedValue",
    "SamplerConfig",
    "enumerate_configs",
    "expect_exact_full",
    "expect_exact_sector",
    "metropolis_series",
    "metropolis_sample",
    "sector_magnetizations",
    "sector_log_binomials",
    "sector_log_weights",
]

EXACT_FULL_L_CAP = 20


@dataclass(frozen=True)
class EstimatedValue:
    """Mean, variance of the mean, and sample count of an estimator.

    variance_of_mean is exactly 0 for the exact-summation routes.
    """

    mean: float
    variance_of_mean: float
    n_samples: int

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.variance_of_mean))


@dataclass(frozen=True)
class SamplerConfig:
    mode: str = "exact-full"  # exact-full | exact-sector | metropolis
    n_chains: int = 8
    n_sweeps: int = 2000
    n_burnin: int | None = None  # None -> 10 * L sweeps
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact-full", "exact-sector", "metropolis"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.n_chains < 1 or self.n_sweeps < 1:
            raise ValueError("n_chains and n_sweeps must be positive")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return replace(self, rng_seed=int(seed))


def enumerate_configs(L: int):
    """All 2^L spin configurations as a (2^L, L) +-1 int8 matrix plus m values."""
    states = np.arange(2 ** L, dtype=np.int64)
    bits = (states[:, None] >> np.arange(L)) & 1
    spins = (2 * bits - 1).astype(np.int8)
    return spins, spins.sum(axis=1).astype(np.int64)


def _normalized_weights(log_w: np.ndarray) -> np.ndarray:
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


def expect_exact_full(model, params, local_fn, l_cap: int = EXACT_FULL_L_CAP) -> EstimatedValue:
    """Exact weighted average of local_fn over the full basis."""
    if model.L > l_cap:
        raise ResourceCapError(
            f"L={model.L} exceeds the full-enumeration cap ({l_cap}); "
            "use the metropolis sampler mode")
    spins, ms = enumerate_configs(model.L)
    lp = log_amplitude_table(params, model.L)
    w = _normalized_weights(2.0 * lp[ms + model.L])
    values = np.asarray(local_fn(spins, ms), dtype=np.float64)
    return EstimatedValue(mean=float(w @ values), variance_of_mean=0.0,
                          n_samples=spins.shape[0])


def sector_magnetizations(L: int) -> np.ndarray:
    return np.arange(-L, L + 1, 2, dtype=np.int64)


@lru_cache(maxsize=None)
def sector_log_binomials(L: int) -> np.ndarray:
    """log C(L, n_up) for n_up = 0..L; cached since it depends only on L."""
    n_up = np.arange(L + 1, dtype=np.float64)
    out = gammaln(L + 1) - gammaln(n_up + 1) - gammaln(L - n_up + 1)
    out.setflags(write=False)
    return out


def sector_log_weights(model, params) -> tuple[np.ndarray, np.ndarray]:
    """Magnetization values and unnormalized log weights log C(L, n_up) + 2 log psi."""
    L = model.L
    ms = sector_magnetizations(L)
    lp = log_amplitude_table(params, L)
    return ms, sector_log_binomials(L) + 2.0 * lp[ms + L]


def expect_exact_sector(model, params, local_fn) -> EstimatedValue:
    """O(L) exact average over magnetization sectors (alpha = 0 only).

    local_fn takes the array of sector magnetizations and must depend on
    configurations only through m.
    """
    if model.alpha != 0:
        raise ValueError("sector summation requires alpha = 0")
    ms, log_w = sector_log_weights(model, params)
    w = _normalized_weights(log_w)
    values = np.asarray(local_fn(ms), dtype=np.float64)
    return EstimatedValue(mean=float(w @ values), variance_of_mean=0.0,
                          n_samples=ms.size)


def metropolis_series(model, params, cfg: SamplerConfig, local_fns) -> np.ndarray:
    """Raw per-sweep observable values from independent Metropolis chains.

    Returns an array of shape (len(local_fns), n_chains, n_sweeps); one
    sample per sweep (L proposed flips) after burn-in.  Deterministic for a
    fixed rng_seed: all randomness comes from one PCG64 seed sequence, so
    the stream is identical for the numba and numpy kernel backends.
    """
    L = model.L
    lp = log_amplitude_table(params, L)
    if not np.all(np.isfinite(lp)):
        raise NumericalError(
            f"non-finite log-amplitude table for weights {params.weights}")
    n_burn = cfg.n_burnin if cfg.n_burnin is not None else 10 * L
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_chains)
    out = np.empty((len(local_fns), cfg.n_chains, cfg.n_sweeps))
    for c in range(cfg.n_chains):
        rng = np.random.default_rng(seeds[c])
        spins = np.where(rng.random(L) < 0.5, -1, 1).astype(np.int8)
        m = int(spins.sum())
        for _ in range(n_burn):
            m, _acc = metropolis_sweep(spins, m, lp, rng.random(L),
                                       rng.integers(0, L, size=L))
        batch = spins[None, :]
        for t in range(cfg.n_sweeps):
            m, _acc = metropolis_sweep(spins, m, lp, rng.random(L),
                                       rng.integers(0, L, size=L))
            marr = np.array([m], dtype=np.int64)
            for f, fn in enumerate(local_fns):
                out[f, c, t] = np.asarray(fn(batch, marr), dtype=np.float64)[0]
        if not np.all(np.isfinite(out[:, c, :])):
            raise NumericalError(
                f"non-finite observable in chain {c} (m={m}, "
                f"weights={params.weights})")
    return out


def metropolis_sample(model, params, cfg: SamplerConfig, local_fn) -> EstimatedValue:
    """Chain-averaged Metropolis estimate with variance from per-chain means."""
    series = metropolis_series(model, params, cfg, [local_fn])[0]
    return _reduce_chains(series)


def _reduce_chains(series: np.ndarray) -> EstimatedValue:
    n_chains, n_sweeps = series.shape
    chain_means = series.mean(axis=1)
    mean = float(chain_means.mean())
    if n_chains > 1:
        var = float(chain_means.var(ddof=1) / n_chains)
    else:
        var = float(series.var(ddof=1) / n_sweeps)
    return EstimatedValue(mean=mean, variance_of_mean=var,
                          n_samples=n_chains * n_sweeps)
