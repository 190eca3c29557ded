"""Experiment runner.

Subcommands: train, ed, analytic, scan-fluctuations, bench.  Each takes a
YAML config file; any config field can be overridden on the command line
with dotted flags, e.g. --trainer.learning_rate=0.01.  Results land as CSV
files plus a meta.json run record in the output directory (config key
output.directory, env NQSLAB_OUTDIR, or ./runs/<subcommand>).

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 resource cap.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__, analytic, kernels, observables
from .ansatz import ACTIVATIONS, AnsatzParams, initial_params, save_params
from .errors import ConfigError, NumericalError, ResourceCapError
from .exact_diag import ED_FULL_L_CAP, ed_dicke, ed_full
from .model import ModelSpec
from .sampler import SamplerConfig, expect_exact_full, expect_exact_sector, metropolis_sample
from .trainer import TrainerConfig, train

SCHEMA_VERSION = 1

TRAIN_COLUMNS = ["iteration", "energy", "energy_err", "eps_rel", "sigma2", "wallclock_s"]
FLUCT_COLUMNS = ["alpha", "L", "sigma2", "sigma2_over_J", "sigma2_over_J2", "sigma2_tdl"]
ED_COLUMNS = ["L", "alpha", "J", "g", "method", "energy", "residual"]
ANALYTIC_COLUMNS = ["alpha", "L", "J", "g", "W", "sigma2", "sigma2_tdl", "formula"]
BENCH_COLUMNS = ["task", "backend", "seconds", "value"]


# ---------------------------------------------------------------------------
# config handling


def _set_dotted(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {dotted}: {key} is not a block")
    node[keys[-1]] = value


def load_config(path: str, overrides: list[str]) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping of blocks")
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument {item!r} "
                              "(overrides look like --section.key=value)")
        dotted, raw = item[2:].split("=", 1)
        _set_dotted(cfg, dotted, yaml.safe_load(raw))
    return cfg


def _require(cfg: dict, block: str) -> dict:
    node = cfg.get(block)
    if not isinstance(node, dict):
        raise ConfigError(f"missing or invalid config block {block!r}")
    return node


def _field(block: dict, block_name: str, key: str, kind, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError(f"missing config field {block_name}.{key}")
        return default
    value = block[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field {block_name}.{key}={value!r}: {exc}") from exc


def build_model(cfg: dict) -> ModelSpec:
    block = _require(cfg, "model")
    try:
        return ModelSpec(
            L=_field(block, "model", "L", int, required=True),
            J=_field(block, "model", "J", float, 1.0),
            g=_field(block, "model", "g", float, 1.0),
            alpha=_field(block, "model", "alpha", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"model block: {exc}") from exc


def build_sampler(cfg: dict, default_mode: str = "exact-full") -> SamplerConfig:
    block = cfg.get("sampler") or {}
    burnin = block.get("n_burnin")
    try:
        return SamplerConfig(
            mode=_field(block, "sampler", "mode", str, default_mode),
            n_chains=_field(block, "sampler", "n_chains", int, 8),
            n_sweeps=_field(block, "sampler", "n_sweeps", int, 2000),
            n_burnin=None if burnin is None else int(burnin),
            rng_seed=_field(block, "sampler", "rng_seed", int, 0),
        )
    except ValueError as exc:
        raise ConfigError(f"sampler block: {exc}") from exc


def build_trainer(cfg: dict, sampler: SamplerConfig) -> TrainerConfig:
    block = cfg.get("trainer") or {}
    try:
        return TrainerConfig(
            n_iterations=_field(block, "trainer", "n_iterations", int, 500),
            learning_rate=_field(block, "trainer", "learning_rate", float, 0.02),
            sr_shift=_field(block, "trainer", "sr_shift", float, 1e-2),
            sampler=sampler,
            seed=_field(block, "trainer", "seed", int, 0),
            checkpoint_every=_field(block, "trainer", "checkpoint_every", int, 50),
        )
    except ValueError as exc:
        raise ConfigError(f"trainer block: {exc}") from exc


def build_ansatz(cfg: dict, seed: int) -> AnsatzParams:
    block = _require(cfg, "ansatz")
    k = _field(block, "ansatz", "K", int, required=True)
    if k < 1:
        raise ConfigError(f"config field ansatz.K must be >= 1, got {k}")
    activation = _field(block, "ansatz", "activation", str, "logcosh")
    if activation not in ACTIVATIONS:
        raise ConfigError(f"config field ansatz.activation must be one of "
                          f"{ACTIVATIONS}, got {activation!r}")
    return initial_params(k, activation, np.random.default_rng(seed))


def output_dir(cfg: dict, subcommand: str) -> Path:
    block = cfg.get("output") or {}
    directory = block.get("directory") or os.environ.get("NQSLAB_OUTDIR") \
        or os.path.join("runs", block.get("run_id", subcommand))
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_id() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return f"nqslab-{__version__}"


def write_meta(outdir: Path, subcommand: str, cfg: dict, seed: int, extra: dict | None = None):
    meta = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "seed": seed,
        "config": cfg,
        "build_id": _build_id(),
        "kernel_backend": kernels.backend(),
    }
    if extra:
        meta.update(extra)
    with open(outdir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# subcommands


def _ed_reference(model: ModelSpec) -> float | None:
    if model.alpha == 0:
        return ed_dicke(model).ground_energy
    if model.L <= ED_FULL_L_CAP:
        return ed_full(model).ground_energy
    return None


def run_train(cfg: dict) -> int:
    model = build_model(cfg)
    sampler = build_sampler(cfg, default_mode="exact-sector" if model.alpha == 0
                            else "exact-full")
    tcfg = build_trainer(cfg, sampler)
    params = build_ansatz(cfg, tcfg.seed)
    reference = _ed_reference(model)
    outdir = output_dir(cfg, "train")
    write_meta(outdir, "train", cfg, tcfg.seed,
               {"ed_reference": reference, "activation": params.activation,
                "K": params.K})
    header = TRAIN_COLUMNS + [f"w{k + 1}" for k in range(params.K)]
    t0 = time.perf_counter()
    csv_path = outdir / "train.csv"
    state = {"latest": params}
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)

        def on_record(rec):
            writer.writerow(
                [rec.iteration, _fmt(rec.energy.mean), _fmt(rec.energy.stderr),
                 _fmt(rec.eps_rel), _fmt(rec.sigma2),
                 _fmt(time.perf_counter() - t0)]
                + [_fmt(w) for w in rec.params_snapshot])
            state["latest"] = params.with_weights(rec.params_snapshot)
            if (rec.iteration + 1) % tcfg.checkpoint_every == 0:
                save_params(outdir / "checkpoint.params", state["latest"])

        try:
            records = train(model, params, tcfg, ed_reference=reference,
                            callback=on_record)
        except Exception:
            fh.write("# INCOMPLETE\n")
            raise
        if len(records) < tcfg.n_iterations:
            fh.write("# INCOMPLETE\n")
            save_params(outdir / "checkpoint.params", state["latest"])
            raise NumericalError(
                f"training stopped after {len(records)} iterations "
                f"(diverged); last checkpoint kept")
    save_params(outdir / "checkpoint.params", state["latest"])
    print(f"train: wrote {csv_path} ({len(records)} iterations)")
    return 0


def run_ed(cfg: dict) -> int:
    model = build_model(cfg)
    method = (cfg.get("ed") or {}).get("method", "auto")
    if method == "auto":
        method = "dicke-sector" if model.alpha == 0 else "full"
    if method == "dicke-sector":
        result = ed_dicke(model)
    elif method in ("full", "dense-full", "iterative-full"):
        result = ed_full(model)
    else:
        raise ConfigError(f"config field ed.method: unknown method {method!r}")
    outdir = output_dir(cfg, "ed")
    write_meta(outdir, "ed", cfg, 0)
    with open(outdir / "ed.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ED_COLUMNS)
        writer.writerow([model.L, _fmt(model.alpha), _fmt(model.J), _fmt(model.g),
                         result.method, _fmt(result.ground_energy),
                         _fmt(result.residual_norm)])
    print(f"ed: L={model.L} alpha={model.alpha} method={result.method} "
          f"energy={result.ground_energy!r} residual={result.residual_norm:.2e}")
    return 0


def _parse_length(raw):
    if raw in ("inf", "infinite", math.inf):
        return analytic.INFINITE_L
    return int(raw)


def run_analytic(cfg: dict) -> int:
    model_block = _require(cfg, "model")
    J = _field(model_block, "model", "J", float, 1.0)
    g = _field(model_block, "model", "g", float, 1.0)
    alpha = _field(model_block, "model", "alpha", float, 0.0)
    L = _parse_length(model_block.get("L", "inf"))
    block = cfg.get("analytic") or {}
    w_spec = block.get("W", "gs")
    ws = w_spec if isinstance(w_spec, list) else [w_spec]
    outdir = output_dir(cfg, "analytic")
    write_meta(outdir, "analytic", cfg, 0)
    tdl = analytic.sigma2_tdl(J, g, alpha)
    rows = []
    for w_raw in ws:
        w = analytic.w_ground_state(J, g, L) if w_raw == "gs" else float(w_raw)
        if L == analytic.INFINITE_L:
            rows.append([_fmt(alpha), "inf", _fmt(J), _fmt(g), _fmt(w),
                         _fmt(tdl), _fmt(tdl), "tdl-zeta-ratio"])
        else:
            s2 = analytic.sigma2_general(J, g, L, alpha, w)
            rows.append([_fmt(alpha), L, _fmt(J), _fmt(g), _fmt(w),
                         _fmt(s2), _fmt(tdl), "general-alpha"])
    with open(outdir / "analytic.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANALYTIC_COLUMNS)
        writer.writerows(rows)
    try:
        w_gs = analytic.w_ground_state(J, g, L)
        print(f"analytic: W_gs={w_gs!r} magnetization={math.tanh(2 * w_gs)!r}")
    except ValueError as exc:
        print(f"analytic: paramagnetic side ({exc})")
    sat = analytic.saturation_values(J, g)
    print(f"analytic: saturation candidates {sat} (they differ unless g^2 = 4J)")
    return 0


def _alpha_grid(scan: dict):
    alphas = scan.get("alphas")
    if isinstance(alphas, dict):
        start, stop, step = (float(alphas.get(k, d)) for k, d in
                             (("start", 0.0), ("stop", 3.0), ("step", 0.1)))
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    if isinstance(alphas, list) and alphas:
        return [float(a) for a in alphas]
    raise ConfigError("config field scan.alphas must be a non-empty list or "
                      "a {start, stop, step} mapping")


def run_scan_fluctuations(cfg: dict) -> int:
    scan = _require(cfg, "scan")
    model_block = cfg.get("model") or {}
    J = _field(model_block, "model", "J", float, 1.0)
    g = _field(model_block, "model", "g", float, 1.0)
    alphas = _alpha_grid(scan)
    lengths = scan.get("Ls")
    if not isinstance(lengths, list) or not lengths:
        raise ConfigError("config field scan.Ls must be a non-empty list")
    lengths = [int(x) for x in lengths]
    outdir = output_dir(cfg, "scan-fluctuations")
    write_meta(outdir, "scan-fluctuations", cfg, 0,
               {"L_parity": {str(L): "odd" if L % 2 else "even" for L in lengths}})
    with open(outdir / "fluct.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FLUCT_COLUMNS)
        for L in lengths:
            w = analytic.w_ground_state(J, g, L)
            for a in alphas:
                s2 = analytic.sigma2_general(J, g, L, a, w)
                tdl = analytic.sigma2_tdl(J, g, a)
                writer.writerow([_fmt(a), L, _fmt(s2), _fmt(s2 / J),
                                 _fmt(s2 / J ** 2), _fmt(tdl)])
        for a in alphas:
            tdl = analytic.sigma2_tdl(J, g, a)
            writer.writerow([_fmt(a), "inf", _fmt(tdl), _fmt(tdl / J),
                             _fmt(tdl / J ** 2), _fmt(tdl)])
    n_rows = len(lengths) * len(alphas) + len(alphas)
    print(f"scan-fluctuations: wrote {outdir / 'fluct.csv'} ({n_rows} rows)")
    return 0


def _best_time(fn, repeats: int = 5) -> tuple[float, float]:
    best, value = math.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def run_bench(cfg: dict) -> int:
    model = build_model(cfg)
    params = build_ansatz(cfg, seed=0) if "ansatz" in cfg else \
        AnsatzParams(weights=np.array([0.4]))
    rows = []
    e_fn = observables.local_energy_fn(model, params)
    t, v = _best_time(lambda: expect_exact_full(model, params, e_fn).mean)
    rows.append(["energy", "exact-full", t, v])
    if model.alpha == 0:
        observables.sector_energy(model, params)  # warm-up (jit compile)
        t, v = _best_time(lambda: observables.sector_energy(model, params).mean)
        rows.append(["energy", "exact-sector", t, v])
    base = build_sampler(cfg, default_mode="metropolis")
    mcfg = SamplerConfig(mode="metropolis", n_chains=base.n_chains,
                         n_sweeps=base.n_sweeps, n_burnin=base.n_burnin,
                         rng_seed=base.rng_seed)
    t, v = _best_time(lambda: metropolis_sample(model, params, mcfg, e_fn).mean,
                      repeats=2)
    rows.append(["energy", "metropolis", t, v])

    from .sampler import enumerate_configs
    spins, _ = enumerate_configs(min(model.L, 14))
    small = ModelSpec(L=min(model.L, 14), J=model.J, g=model.g, alpha=model.alpha)
    t, v = _best_time(lambda: float(kernels.zz_batch_numpy(
        spins, small.coupling_matrix()).sum()))
    rows.append(["zz_batch", "numpy", t, v])
    if kernels.HAS_NUMBA:
        kernels.zz_batch_numba(spins[:2], small.coupling_by_distance, small.L)  # warm-up
        t, v = _best_time(lambda: float(kernels.zz_batch_numba(
            spins, small.coupling_by_distance, small.L).sum()))
        rows.append(["zz_batch", "numba", t, v])

    outdir = output_dir(cfg, "bench")
    write_meta(outdir, "bench", cfg, 0)
    with open(outdir / "bench.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
        for task, backend_name, seconds, value in rows:
            writer.writerow([task, backend_name, _fmt(seconds), _fmt(value)])
    for task, backend_name, seconds, value in rows:
        print(f"bench: {task:10s} {backend_name:12s} {seconds:.6f}s value={value!r}")
    return 0


# ---------------------------------------------------------------------------
# entry point


_SUBCOMMANDS = {
    "train": run_train,
    "ed": run_ed,
    "analytic": run_analytic,
    "scan-fluctuations": run_scan_fluctuations,
    "bench": run_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nqslab",
        description="Ground-state experiments for the long-range "
                    "transverse-field Ising chain")
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    parser.add_argument("config", help="path to a YAML experiment config")
    args, overrides = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config, overrides)
        return _SUBCOMMANDS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"{args.subcommand}: config error: {exc}", file=sys.stderr)
        return 2
    except ResourceCapError as exc:
        print(f"{args.subcommand}: resource cap: {exc}", file=sys.stderr)
        return 4
    except (NumericalError, ValueError, FloatingPointError, ArithmeticError) as exc:
        print(f"{args.subcommand}: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
