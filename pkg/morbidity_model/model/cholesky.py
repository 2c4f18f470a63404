"""Reverse-mode derivative of the Cholesky factorization."""

import numpy as np
from scipy import linalg


def _phi(A: np.ndarray) -> np.ndarray:
    """Lower triangle with the diagonal halved."""
    out = np.tril(A)
    out[np.diag_indices_from(out)] *= 0.5
    return out


def cholesky_adjoint(L: np.ndarray, L_bar: np.ndarray) -> np.ndarray:
    """
    Pull a gradient with respect to L = chol(C) back onto C.

    Args:
        L: Lower Cholesky factor of C
        L_bar: Gradient with respect to L (only the lower triangle is read)

    Returns:
        Symmetric gradient with respect to C, each off-diagonal pair split evenly
    """
    P = _phi(L.T @ np.tril(L_bar))
    left = linalg.solve_triangular(L, P, trans="T", lower=True)
    S = linalg.solve_triangular(L, left.T, trans="T", lower=True).T
    return 0.5 * (S + S.T)
