"""
Morbidity Model - Bayesian spatio-temporal logistic engine for chronic
multi-morbidity survey data, with a NUTS sampler, PSIS-LOO/WAIC model
comparison and a pseudo-panel survey simulator.
"""

__version__ = "0.1.0"

from .config import ModelConfig, RunConfig, SamplerConfig, SimConfig
from .schemas import KernelSpec, ModelVariant, RespondentRecord

__all__ = [
    "ModelConfig",
    "RunConfig",
    "SamplerConfig",
    "SimConfig",
    "KernelSpec",
    "ModelVariant",
    "RespondentRecord",
]
