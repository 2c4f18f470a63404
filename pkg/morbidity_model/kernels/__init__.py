"""Location kernels and their convex mixtures."""

from .covariance import JITTER_LADDER, CovarianceModel, cholesky_psd, mixture_covariance
from .functions import (
    KernelBasis,
    KernelParams,
    contiguity_kernel,
    distance_kernel,
    kernel_matrix,
    partition_kernel,
)

__all__ = [
    "KernelParams",
    "KernelBasis",
    "partition_kernel",
    "contiguity_kernel",
    "distance_kernel",
    "kernel_matrix",
    "CovarianceModel",
    "mixture_covariance",
    "cholesky_psd",
    "JITTER_LADDER",
]
