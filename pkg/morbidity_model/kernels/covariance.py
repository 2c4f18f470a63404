"""Convex kernel mixtures and their Cholesky factors."""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from ..errors import ConstraintViolation, NotPositiveDefinite

logger = logging.getLogger(__name__)

# Multiples of max(diag) tried in order before giving up.
JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class CovarianceModel:
    """Location correlation matrix C = sum_m w_m K_m with its lower Cholesky factor."""

    weights: np.ndarray
    kernel_matrices: Tuple[np.ndarray, ...]
    mixture: np.ndarray
    cholesky: np.ndarray
    jitter_applied: float

    def reconstruction_error(self) -> float:
        n = self.mixture.shape[0]
        target = self.mixture + self.jitter_applied * np.eye(n)
        return float(np.max(np.abs(self.cholesky @ self.cholesky.T - target)))


def cholesky_psd(C: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Lower Cholesky factor with a bounded jitter ladder.

    Args:
        C: Symmetric matrix

    Returns:
        Tuple of (L, jitter) with L L^T = C + jitter I

    Raises:
        NotPositiveDefinite: If every rung of the ladder fails
    """
    C = np.asarray(C, dtype=float)
    scale = float(np.max(np.diag(C))) if C.size else 1.0
    n = C.shape[0]
    for rung in JITTER_LADDER:
        jitter = rung * scale
        try:
            L = linalg.cholesky(C + jitter * np.eye(n), lower=True, check_finite=True)
        except (linalg.LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(L)) or np.any(np.diag(L) <= 0):
            continue
        if jitter > 0:
            logger.debug(f"Cholesky needed jitter {jitter:.3g}")
        return L, jitter
    raise NotPositiveDefinite(JITTER_LADDER[-1] * scale)


def mixture_covariance(weights: Sequence[float], kernel_matrices: Sequence[np.ndarray]) -> CovarianceModel:
    """
    Combine kernel matrices with simplex weights and factor the result.

    Args:
        weights: Length-n_f simplex vector
        kernel_matrices: n_f symmetric matrices with unit diagonal

    Returns:
        CovarianceModel
    """
    w = np.asarray(weights, dtype=float)
    if len(kernel_matrices) != w.size:
        raise ConstraintViolation("omega", f"has {w.size} weights for {len(kernel_matrices)} kernels")
    if np.any(w < 0) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise ConstraintViolation("omega", "must lie on the simplex")
    stack = np.stack([np.asarray(K, dtype=float) for K in kernel_matrices])
    C = np.tensordot(w, stack, axes=1)
    L, jitter = cholesky_psd(C)
    if jitter > 0:
        logger.warning(f"Kernel mixture needed jitter {jitter:.3g} to factor")
    return CovarianceModel(
        weights=w,
        kernel_matrices=tuple(stack),
        mixture=C,
        cholesky=L,
        jitter_applied=jitter,
    )
