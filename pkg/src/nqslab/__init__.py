"""Ground-state laboratory for the long-range transverse-field Ising chain
with permutation-invariant neural-quantum-state ansatze."""

from .ansatz import AnsatzParams, DenseWeights, symmetrize_weights
from .exact_diag import EDResult, ed_dicke, ed_full
from .model import ModelSpec, SpinConfig
from .sampler import EstimatedValue, SamplerConfig
from .trainer import TrainerConfig, TrainRecord, train

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams",
    "DenseWeights",
    "EDResult",
    "EstimatedValue",
    "ModelSpec",
    "SamplerConfig",
    "SpinConfig",
    "TrainRecord",
    "TrainerConfig",
    "ed_dicke",
    "ed_full",
    "symmetrize_weights",
    "train",
    "__version__",
]
