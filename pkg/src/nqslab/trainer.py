"""Stochastic-reconfiguration ground-state search.

Each step solves (S + shift*I) dW = F for the natural-gradient direction,
with S the covariance of the log-derivatives and F the force (covariance
of local energy with the log-derivatives), then updates W <- W - lr * dW.
Expectations come from the sampler module; with exact summation the whole
optimization is deterministic.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ansatz import AnsatzParams, log_derivatives_m
from .errors import NumericalError
from .observables import local_energy_fn, sector_local_energy_fn
from .sampler import (EstimatedValue, SamplerConfig, enumerate_configs,
                      metropolis_series, sector_log_weights)
from .ansatz import log_amplitude_table

log = logging.getLogger(__name__)

__all__ = ["TrainerConfig", "TrainRecord", "SRQuantities", "sr_step", "train"]


@dataclass(frozen=True)
class TrainerConfig:
    n_iterations: int = 500
    learning_rate: float = 0.02
    sr_shift: float = 1e-2
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    seed: int = 0
    checkpoint_every: int = 50

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.sr_shift < 0:
            raise ValueError("sr_shift must be non-negative")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be positive")


@dataclass
class TrainRecord:
    iteration: int
    energy: EstimatedValue
    eps_rel: float | None
    sigma2: float
    params_snapshot: np.ndarray


@dataclass(frozen=True)
class SRQuantities:
    """Weighted moments needed for one SR update."""

    e_mean: float
    e_var_of_mean: float
    e2_mean: float
    o_mean: np.ndarray
    oo_mean: np.ndarray
    eo_mean: np.ndarray
    n_samples: int

    @property
    def covariance(self) -> np.ndarray:
        s = self.oo_mean - np.outer(self.o_mean, self.o_mean)
        return 0.5 * (s + s.T)

    @property
    def force(self) -> np.ndarray:
        return self.eo_mean - self.e_mean * self.o_mean

    @property
    def energy(self) -> EstimatedValue:
        return EstimatedValue(mean=self.e_mean, variance_of_mean=self.e_var_of_mean,
                              n_samples=self.n_samples)

    @property
    def sigma2_density(self) -> float:
        return self.e2_mean - self.e_mean ** 2


def _weighted_quantities(w, e, o, n_samples) -> SRQuantities:
    return SRQuantities(
        e_mean=float(w @ e),
        e_var_of_mean=0.0,
        e2_mean=float(w @ (e * e)),
        o_mean=w @ o,
        oo_mean=o.T @ (w[:, None] * o),
        eo_mean=(w * e) @ o,
        n_samples=n_samples,
    )


def sr_quantities(model, params, scfg: SamplerConfig) -> SRQuantities:
    """Expectations of E_loc, O_k and their cross moments under |psi|^2."""
    L = model.L
    if scfg.mode == "exact-sector":
        ms, log_w = sector_log_weights(model, params)
        w = np.exp(log_w - log_w.max())
        w /= w.sum()
        e = np.asarray(sector_local_energy_fn(model, params)(ms))
        o = log_derivatives_m(params, ms)
        return _weighted_quantities(w, e, o, ms.size)
    if scfg.mode == "exact-full":
        spins, ms = enumerate_configs(L)
        lp = log_amplitude_table(params, L)
        log_w = 2.0 * lp[ms + L]
        w = np.exp(log_w - log_w.max())
        w /= w.sum()
        e = np.asarray(local_energy_fn(model, params)(spins, ms))
        o = log_derivatives_m(params, ms)
        return _weighted_quantities(w, e, o, spins.shape[0])
    e_fn = local_energy_fn(model, params)
    series = metropolis_series(model, params, scfg,
                               [e_fn, lambda s, m: m.astype(np.float64)])
    e = series[0].ravel()
    ms = series[1].ravel()
    o = log_derivatives_m(params, ms)
    n = e.size
    w = np.full(n, 1.0 / n)
    q = _weighted_quantities(w, e, o, n)
    chain_means = series[0].mean(axis=1)
    n_chains = chain_means.size
    e_var = float(chain_means.var(ddof=1) / n_chains) if n_chains > 1 else 0.0
    return SRQuantities(e_mean=q.e_mean, e_var_of_mean=e_var, e2_mean=q.e2_mean,
                        o_mean=q.o_mean, oo_mean=q.oo_mean, eo_mean=q.eo_mean,
                        n_samples=n)


def sr_step(model, params: AnsatzParams, cfg: TrainerConfig,
            scfg: SamplerConfig | None = None):
    """One parameter update; returns (new_params, SRQuantities)."""
    q = sr_quantities(model, params, scfg or cfg.sampler)
    s_matrix = q.covariance + cfg.sr_shift * np.eye(params.K)
    try:
        delta = np.linalg.solve(s_matrix, q.force)
    except np.linalg.LinAlgError:
        log.warning("SR linear solve failed; falling back to a plain gradient step")
        delta = q.force
    new_weights = params.weights - cfg.learning_rate * delta
    if not np.all(np.isfinite(new_weights)):
        raise NumericalError(f"parameter update diverged: {new_weights}")
    return params.with_weights(new_weights), q


def _maybe_jitter(params: AnsatzParams, seed: int) -> AnsatzParams:
    """Identical initial weights make S rank-1; break the tie with a small
    relative perturbation."""
    if params.K > 1 and np.ptp(params.weights) == 0:
        rng = np.random.default_rng(seed)
        w = params.weights * (1.0 + 1e-3 * rng.standard_normal(params.K))
        return params.with_weights(w)
    return params


def train(model, initial: AnsatzParams, cfg: TrainerConfig,
          ed_reference: float | None = None, callback=None) -> list[TrainRecord]:
    """Run SR for n_iterations; deterministic for a fixed seed.

    Record i carries the energy of the parameters entering iteration i and
    a snapshot of those parameters.  If the energy turns non-finite the run
    stops early and the records collected so far are returned.
    """
    params = _maybe_jitter(initial, cfg.seed)
    records: list[TrainRecord] = []
    for it in range(cfg.n_iterations):
        scfg = cfg.sampler
        if scfg.mode == "metropolis":
            seed = np.random.SeedSequence([cfg.seed, it]).generate_state(1)[0]
            scfg = scfg.with_seed(int(seed))
        try:
            new_params, q = sr_step(model, params, cfg, scfg)
        except NumericalError as exc:
            log.warning("training diverged at iteration %d (%s); keeping the "
                        "last valid checkpoint", it, exc)
            break
        if not np.isfinite(q.e_mean):
            log.warning("training diverged at iteration %d; keeping the last "
                        "valid checkpoint", it)
            break
        eps = None
        if ed_reference is not None:
            eps = abs(q.e_mean - ed_reference) / abs(ed_reference)
        record = TrainRecord(iteration=it, energy=q.energy, eps_rel=eps,
                             sigma2=q.sigma2_density / model.L,
                             params_snapshot=params.weights.copy())
        records.append(record)
        if callback is not None:
            callback(record)
        params = new_params
    return records
