"""Permutation-invariant wave-function amplitudes.

The amplitude reads the configuration only through its total magnetization:

    log psi(s) = sum_k f(W_k * m(s)),

with f a pluggable activation.  "logcosh" is the standard choice; "abs" is
its asymptotically linear twin used by the closed-form checks; "linear"
(f(x) = x) selects the W > 0 product-state branch of "abs", for which all
appendix-style expectations factorize exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ACTIVATIONS",
    "AnsatzParams",
    "DenseWeights",
    "SymmetryViolation",
    "symmetrize_weights",
    "log_amplitude",
    "log_amplitude_m",
    "log_amplitude_table",
    "log_derivatives",
    "log_derivatives_m",
    "log_amplitude_ratio",
    "initial_params",
    "save_params",
    "load_params",
]

ACTIVATIONS = ("logcosh", "abs", "linear")

_LOG2 = float(np.log(2.0))


def _activation(name: str, x: np.ndarray) -> np.ndarray:
    if name == "logcosh":
        ax = np.abs(x)
        # overflow-safe: log cosh x = |x| - log 2 + log(1 + exp(-2|x|))
        return ax - _LOG2 + np.log1p(np.exp(-2.0 * ax))
    if name == "abs":
        return np.abs(x)
    if name == "linear":
        return np.asarray(x, dtype=np.float64)
    raise ValueError(f"unknown activation {name!r}")


def _activation_prime(name: str, x: np.ndarray) -> np.ndarray:
    if name == "logcosh":
        return np.tanh(x)
    if name == "abs":
        return np.sign(x).astype(np.float64)
    if name == "linear":
        return np.ones_like(np.asarray(x, dtype=np.float64))
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class AnsatzParams:
    """K real weights plus the activation selector."""

    weights: np.ndarray
    activation: str = "logcosh"

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64)).copy()
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-D array")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def K(self) -> int:
        return self.weights.size

    def with_weights(self, weights) -> "AnsatzParams":
        return AnsatzParams(weights=np.asarray(weights, dtype=np.float64),
                            activation=self.activation)


@dataclass(frozen=True)
class DenseWeights:
    """Unconstrained K x L weight matrix of the pre-symmetrization network."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class SymmetryViolation:
    """Report returned when a dense weight matrix is not row-constant."""

    rows: tuple
    max_deviation: float


def symmetrize_weights(dense: DenseWeights, tol: float = 1e-8,
                       activation: str = "logcosh"):
    """Collapse a row-constant K x L matrix to its K row values.

    Returns AnsatzParams when every row is constant within tol, otherwise a
    SymmetryViolation listing the offending rows and the worst deviation.
    """
    mat = dense.matrix
    row_means = mat.mean(axis=1)
    dev = np.abs(mat - row_means[:, None]).max(axis=1)
    bad = np.nonzero(dev > tol)[0]
    if bad.size:
        return SymmetryViolation(rows=tuple(int(r) for r in bad),
                                 max_deviation=float(dev.max()))
    return AnsatzParams(weights=row_means, activation=activation)


def log_amplitude_m(params: AnsatzParams, m) -> np.ndarray:
    """log psi as a function of total magnetization (scalar or array)."""
    m = np.asarray(m, dtype=np.float64)
    x = params.weights[:, None] * m.reshape(1, -1)
    out = _activation(params.activation, x).sum(axis=0)
    return out if m.ndim else float(out[0])


def log_amplitude(params: AnsatzParams, config) -> float:
    """log psi(s); depends on the configuration only through m(s)."""
    return float(log_amplitude_m(params, config.m))


def log_amplitude_table(params: AnsatzParams, L: int) -> np.ndarray:
    """log psi for every magnetization value, indexed by m + L (0..2L)."""
    mvals = np.arange(-L, L + 1, dtype=np.float64)
    return np.asarray(log_amplitude_m(params, mvals))


def log_derivatives_m(params: AnsatzParams, m) -> np.ndarray:
    """d log psi / d W_k = m * f'(W_k m); shape (n, K) for array m."""
    m = np.asarray(m, dtype=np.float64)
    x = m.reshape(-1, 1) * params.weights[None, :]
    out = m.reshape(-1, 1) * _activation_prime(params.activation, x)
    return out if m.ndim else out[0]


def log_derivatives(params: AnsatzParams, config) -> np.ndarray:
    return np.asarray(log_derivatives_m(params, config.m))


def log_amplitude_ratio(params: AnsatzParams, config, flip_site: int) -> float:
    """log psi(s with spin flip_site flipped) - log psi(s), from m alone."""
    if not (0 <= flip_site < config.spins.size):
        raise ValueError("flip_site out of range")
    m_new = config.m - 2 * int(config.spins[flip_site])
    return float(log_amplitude_m(params, m_new)) - float(log_amplitude_m(params, config.m))


def initial_params(K: int, activation: str = "logcosh",
                   rng: np.random.Generator | None = None) -> AnsatzParams:
    """Training start: small positive weights, away from the W=0 stationary point."""
    rng = rng or np.random.default_rng()
    return AnsatzParams(weights=rng.uniform(0.01, 0.1, size=K),
                        activation=activation)


def save_params(path, params: AnsatzParams) -> None:
    """Checkpoint: header with K and activation, then one weight per line."""
    with open(path, "w") as fh:
        fh.write(f"K={params.K} activation={params.activation}\n")
        for w in params.weights:
            fh.write(f"{float(w)!r}\n")


def load_params(path) -> AnsatzParams:
    with open(path) as fh:
        header = fh.readline().split()
        fields = dict(item.split("=", 1) for item in header)
        weights = [float(line) for line in fh if line.strip()]
    if len(weights) != int(fields["K"]):
        raise ValueError(f"checkpoint {path}: expected {fields['K']} weights, "
                         f"found {len(weights)}")
    return AnsatzParams(weights=np.array(weights), activation=fields["activation"])
