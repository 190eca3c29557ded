"""Local energy and derived diagnostics.

The local energy of a configuration s is

    E_loc(s) = -(J/kac) sum_{i != j} s_i s_j / d^alpha
               - g sum_i psi(s with spin i flipped) / psi(s),

evaluated with the exact activation (no linearization).  Because the
ansatz reads only the total magnetization, the off-diagonal part is a pure
function of m, which the batch paths exploit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sampler as smp
from .ansatz import log_amplitude_table
from .errors import NumericalError
from . import kernels
from .kernels import zz_batch

__all__ = [
    "LocalEnergyTerms",
    "local_energy",
    "local_energy_fn",
    "sector_local_energy_fn",
    "transverse_from_m",
    "energy",
    "sector_energy",
    "relative_energy_error",
    "fluctuation_density",
    "magnetization",
    "abs_magnetization",
]


@dataclass(frozen=True)
class LocalEnergyTerms:
    zz: float
    transverse: float
    total: float


def transverse_from_m(model, logpsi_table: np.ndarray, ms: np.ndarray) -> np.ndarray:
    """Off-diagonal local-energy part as a function of magnetization.

    Flipping one of the n_up up-spins lowers m by 2, flipping one of the
    L - n_up down-spins raises it by 2; the amplitude ratio depends only
    on m before and after.
    """
    L = model.L
    ms = np.asarray(ms, dtype=np.int64)
    idx = ms + L
    n_up = (ms + L) // 2
    lo = logpsi_table[np.clip(idx - 2, 0, 2 * L)] - logpsi_table[idx]
    hi = logpsi_table[np.clip(idx + 2, 0, 2 * L)] - logpsi_table[idx]
    return -model.g * (n_up * np.exp(lo) + (L - n_up) * np.exp(hi))


def local_energy(model, params, config) -> LocalEnergyTerms:
    """Local energy of a single configuration, split into its two parts."""
    lp = log_amplitude_table(params, model.L)
    zz = -float(zz_batch(config.spins[None, :], model)[0])
    trans = float(transverse_from_m(model, lp, np.array([config.m]))[0])
    return LocalEnergyTerms(zz=zz, transverse=trans, total=zz + trans)


def local_energy_fn(model, params):
    """Batch local-energy observable: (spins, ms) -> per-configuration totals."""
    lp = log_amplitude_table(params, model.L)

    def fn(spins, ms):
        return -zz_batch(spins, model) + transverse_from_m(model, lp, ms)

    return fn


def sector_local_energy_fn(model, params):
    """Magnetization-only local energy, valid for the fully-connected model."""
    if model.alpha != 0:
        raise ValueError("sector local energy requires alpha = 0")
    lp = log_amplitude_table(params, model.L)
    j_eff = model.J / model.kac

    def fn(ms):
        ms = np.asarray(ms, dtype=np.float64)
        zz = -j_eff * (ms ** 2 - model.L)
        return zz + transverse_from_m(model, lp, ms.astype(np.int64))

    return fn


def _dispatch(model, params, cfg, full_fn, sector_fn):
    if cfg.mode == "exact-full":
        return smp.expect_exact_full(model, params, full_fn)
    if cfg.mode == "exact-sector":
        return smp.expect_exact_sector(model, params, sector_fn)
    return smp.metropolis_sample(model, params, cfg, full_fn)


ACTIVATION_CODES = {"logcosh": 0, "abs": 1, "linear": 2}


def sector_energy(model, params) -> smp.EstimatedValue:
    """Exact sector-summed energy via the fused O(K L) kernel."""
    if model.alpha != 0:
        raise ValueError("sector summation requires alpha = 0")
    e_mean, _ = kernels.sector_energy(
        params.weights, ACTIVATION_CODES[params.activation],
        smp.sector_log_binomials(model.L), model.J / model.kac, model.g,
        model.L)
    return smp.EstimatedValue(mean=float(e_mean), variance_of_mean=0.0,
                              n_samples=model.L + 1)


def energy(model, params, cfg) -> smp.EstimatedValue:
    """Variational energy <E_loc> under |psi|^2."""
    if cfg.mode == "exact-sector":
        return sector_energy(model, params)
    return _dispatch(model, params, cfg, local_energy_fn(model, params), None)


def relative_energy_error(e_nqs: float, e_ed: float) -> float:
    """|e_nqs - e_ed| / |e_ed| (absolute-value denominator, so always >= 0)."""
    if e_ed == 0:
        raise ValueError("reference energy must be nonzero")
    return abs(e_nqs - e_ed) / abs(e_ed)


def fluctuation_density(model, params, cfg) -> smp.EstimatedValue:
    """(<H^2> - <H>^2) / L with <H^2> taken as the E_loc^2 average.

    Exact under full/sector summation; under Metropolis it is the standard
    variational estimator, with errors from per-chain values.
    """
    L = model.L
    e_fn = local_energy_fn(model, params)
    if cfg.mode == "metropolis":
        series = smp.metropolis_series(
            model, params, cfg, [e_fn, lambda s, m: e_fn(s, m) ** 2])
        per_chain = (series[1].mean(axis=1) - series[0].mean(axis=1) ** 2) / L
        n_chains = per_chain.size
        mean = float(per_chain.mean())
        var = float(per_chain.var(ddof=1) / n_chains) if n_chains > 1 else 0.0
        est = smp.EstimatedValue(mean=mean, variance_of_mean=var,
                                 n_samples=series.shape[1] * series.shape[2])
    else:
        if cfg.mode == "exact-sector":
            s_fn = sector_local_energy_fn(model, params)
            e1 = smp.expect_exact_sector(model, params, s_fn)
            e2 = smp.expect_exact_sector(model, params, lambda ms: s_fn(ms) ** 2)
        else:
            e1 = smp.expect_exact_full(model, params, e_fn)
            e2 = smp.expect_exact_full(model, params, lambda s, m: e_fn(s, m) ** 2)
        mean = (e2.mean - e1.mean ** 2) / L
        est = smp.EstimatedValue(mean=mean, variance_of_mean=0.0,
                                 n_samples=e1.n_samples)
    floor = 3.0 * est.stderr + 1e-12 * (1.0 + abs(est.mean))
    if est.mean < -floor:
        raise NumericalError(
            f"negative fluctuation density {est.mean} beyond noise ({floor})")
    return est


def magnetization(model, params, cfg) -> smp.EstimatedValue:
    """<m>/L under |psi|^2; zero by parity for even activations."""
    return _dispatch(model, params, cfg,
                     lambda spins, ms: np.asarray(ms, dtype=np.float64) / model.L,
                     lambda ms: np.asarray(ms, dtype=np.float64) / model.L)


def abs_magnetization(model, params, cfg) -> smp.EstimatedValue:
    """<|m|>/L, the parity-insensitive companion to magnetization()."""
    return _dispatch(model, params, cfg,
                     lambda spins, ms: np.abs(ms).astype(np.float64) / model.L,
                     lambda ms: np.abs(ms).astype(np.float64) / model.L)
