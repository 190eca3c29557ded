import numpy as np
import pytest

from nqslab.ansatz import AnsatzParams, log_amplitude_m
from nqslab.exact_diag import ed_dicke
from nqslab.model import ModelSpec
from nqslab.sampler import SamplerConfig, enumerate_configs
from nqslab.trainer import TrainerConfig, sr_quantities, sr_step, train

SECTOR = SamplerConfig(mode="exact-sector")
FULL = SamplerConfig(mode="exact-full")


def brute_sr_quantities(model, params):
    """Definition-level moments by direct 2^L enumeration with explicit
    per-configuration amplitudes and finite-difference log-derivatives."""
    from nqslab.observables import local_energy
    from nqslab.model import SpinConfig

    spins, ms = enumerate_configs(model.L)
    logp = np.array([2.0 * log_amplitude_m(params, int(m)) for m in ms])
    w = np.exp(logp - logp.max())
    w /= w.sum()
    e = np.array([local_energy(model, params, SpinConfig.from_spins(s)).total
                  for s in spins])
    h = 1e-6
    o = np.empty((spins.shape[0], params.K))
    for k in range(params.K):
        wp = params.weights.copy()
        wm = params.weights.copy()
        wp[k] += h
        wm[k] -= h
        for n, m in enumerate(ms):
            o[n, k] = (log_amplitude_m(params.with_weights(wp), int(m))
                       - log_amplitude_m(params.with_weights(wm), int(m))) / (2 * h)
    e_mean = w @ e
    o_mean = w @ o
    s_matrix = o.T @ (w[:, None] * o) - np.outer(o_mean, o_mean)
    force = (w * e) @ o - e_mean * o_mean
    return e_mean, s_matrix, force


def test_sr_quantities_match_brute_force():
    model = ModelSpec(L=6, J=1.0, g=0.9, alpha=0.0)
    params = AnsatzParams(weights=[0.2, 0.45])
    q = sr_quantities(model, params, FULL)
    e_mean, s_matrix, force = brute_sr_quantities(model, params)
    assert q.e_mean == pytest.approx(e_mean, rel=1e-10)
    assert np.allclose(q.covariance, s_matrix, atol=1e-7)
    assert np.allclose(q.force, force, atol=1e-7)


def test_sr_quantities_sector_matches_full():
    model = ModelSpec(L=9, alpha=0.0, g=0.7)
    params = AnsatzParams(weights=[0.3, 0.1, 0.5])
    qs = sr_quantities(model, params, SECTOR)
    qf = sr_quantities(model, params, FULL)
    assert qs.e_mean == pytest.approx(qf.e_mean, abs=1e-11)
    assert np.allclose(qs.covariance, qf.covariance, atol=1e-12)
    assert np.allclose(qs.force, qf.force, atol=1e-12)


def test_covariance_is_symmetric_psd_along_training():
    model = ModelSpec(L=10, alpha=0.0)
    params = AnsatzParams(weights=[0.05, 0.08, 0.03])
    cfg = TrainerConfig(n_iterations=30, sampler=SECTOR)
    for _ in range(30):
        params, q = sr_step(model, params, cfg)
        s = q.covariance
        assert np.allclose(s, s.T, atol=1e-12)
        eigs = np.linalg.eigvalsh(s)
        assert eigs.min() >= -1e-10


def test_training_converges_toward_ed_reference():
    model = ModelSpec(L=12, alpha=0.0)
    e_ed = ed_dicke(model).ground_energy
    cfg = TrainerConfig(n_iterations=500, sampler=SECTOR, seed=1)
    records = train(model, AnsatzParams(weights=[0.05]), cfg, ed_reference=e_ed)
    assert len(records) == 500
    assert records[-1].eps_rel < 1e-2
    assert records[-1].eps_rel < records[0].eps_rel


def test_energy_is_monotone_at_small_learning_rate():
    model = ModelSpec(L=10, alpha=0.0)
    cfg = TrainerConfig(n_iterations=120, learning_rate=0.01, sampler=SECTOR)
    records = train(model, AnsatzParams(weights=[0.05]), cfg)
    energies = np.array([r.energy.mean for r in records])
    assert np.all(np.diff(energies) <= 1e-9)


def test_classical_limit_reaches_exact_polarized_energy():
    # g = 0: ground state is the fully polarized product state, E = -J(L-1);
    # tiny SR shift plus a larger step converge essentially to machine precision
    model = ModelSpec(L=12, J=1.0, g=0.0, alpha=0.0)
    cfg = TrainerConfig(n_iterations=1000, learning_rate=0.1, sr_shift=1e-8,
                        sampler=SECTOR)
    records = train(model, AnsatzParams(weights=[0.05]), cfg)
    e_exact = -11.0
    assert abs(records[-1].energy.mean - e_exact) / abs(e_exact) < 1e-8


def test_train_is_deterministic_for_fixed_seed():
    model = ModelSpec(L=8, alpha=0.0)
    scfg = SamplerConfig(mode="metropolis", n_chains=2, n_sweeps=100)
    cfg = TrainerConfig(n_iterations=5, sampler=scfg, seed=7)
    init = AnsatzParams(weights=[0.05])
    a = train(model, init, cfg)
    b = train(model, init, cfg)
    assert all(ra.energy.mean == rb.energy.mean for ra, rb in zip(a, b))
    assert all(np.array_equal(ra.params_snapshot, rb.params_snapshot)
               for ra, rb in zip(a, b))


def test_equal_initial_weights_are_jittered_apart():
    model = ModelSpec(L=8, alpha=0.0)
    cfg = TrainerConfig(n_iterations=2, sampler=SECTOR)
    records = train(model, AnsatzParams(weights=[0.05, 0.05]), cfg)
    assert np.ptp(records[0].params_snapshot) > 0


def test_records_snapshot_parameters_entering_each_iteration():
    model = ModelSpec(L=8, alpha=0.0)
    cfg = TrainerConfig(n_iterations=3, sampler=SECTOR)
    init = AnsatzParams(weights=[0.07])
    records = train(model, init, cfg)
    assert np.array_equal(records[0].params_snapshot, init.weights)
    # successive snapshots differ while training is in progress
    assert not np.array_equal(records[1].params_snapshot,
                              records[0].params_snapshot)


def test_callback_sees_every_record():
    model = ModelSpec(L=8, alpha=0.0)
    cfg = TrainerConfig(n_iterations=4, sampler=SECTOR)
    seen = []
    records = train(model, AnsatzParams(weights=[0.05]), cfg,
                    callback=seen.append)
    assert seen == records


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergent_run_returns_partial_records():
    # an absurd step size drives W into exp-overflow territory for the
    # product-state branch, turning the local energy non-finite
    model = ModelSpec(L=8, alpha=0.0)
    cfg = TrainerConfig(n_iterations=200, learning_rate=1e4, sr_shift=0.0,
                        sampler=SECTOR)
    records = train(model, AnsatzParams(weights=[0.3], activation="linear"),
                    cfg)
    assert len(records) < 200


def test_trainer_config_validation():
    with pytest.raises(ValueError):
        TrainerConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainerConfig(sr_shift=-1e-3)
    with pytest.raises(ValueError):
        TrainerConfig(n_iterations=0)


def test_metropolis_training_improves_energy():
    model = ModelSpec(L=10, alpha=0.0)
    e_ed = ed_dicke(model).ground_energy
    scfg = SamplerConfig(mode="metropolis", n_chains=4, n_sweeps=300)
    cfg = TrainerConfig(n_iterations=60, sampler=scfg, seed=3)
    records = train(model, AnsatzParams(weights=[0.05]), cfg, ed_reference=e_ed)
    assert records[-1].eps_rel < records[0].eps_rel
    assert records[-1].eps_rel < 0.05
    assert records[-1].energy.stderr > 0
