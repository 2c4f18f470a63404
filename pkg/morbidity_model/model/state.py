"""Constrained parameter state."""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .layout import ParameterLayout


@dataclass
class ParameterState:
    """
    Every model parameter on its natural scale.

    Groups a variant does not sample hold their fixed value: zero for the
    lambda and seed arrays, None for theta, omega and alpha.

    ``omega`` has shape (n_d, levels, K_active); ``z1`` is (n_d, n_p, n_l) for
    linear dynamics and (n_d, n_p, n_c - 1, n_l) for the random walk.
    """

    phi: np.ndarray
    psi: np.ndarray
    delta: np.ndarray
    lambda0: np.ndarray
    lambda1: np.ndarray
    gamma: np.ndarray
    z0: np.ndarray
    z1: np.ndarray
    epsilon: np.ndarray
    alpha_lambda0: Optional[float] = None
    alpha_lambda1: Optional[float] = None
    theta_region: Optional[np.ndarray] = None
    theta_contiguity: Optional[float] = None
    omega: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, layout: ParameterLayout) -> "ParameterState":
        """Fixed values for every masked group; sampled groups at neutral points."""
        n_d, n_p, r, n_l = layout.num_diseases, layout.num_predictors, layout.rank, layout.num_locations
        omega = None
        if layout.num_active_kernels:
            k = layout.num_active_kernels
            omega = np.full((n_d, layout.omega_levels, k), 1.0 / k)
        gamma = np.zeros(n_d)
        gamma[0] = 1.0
        return cls(
            phi=np.zeros((n_d, r)),
            psi=np.zeros((r, n_p)),
            delta=np.ones(r),
            lambda0=np.zeros((n_d, n_p)),
            lambda1=np.zeros((n_d, n_p)),
            gamma=gamma,
            z0=np.zeros((n_d, n_p, n_l)),
            z1=np.zeros(layout.z1_shape),
            epsilon=np.zeros(layout.num_respondents),
            alpha_lambda0=1.0 if layout.has("log_alpha_lambda0") else None,
            alpha_lambda1=1.0 if layout.has("log_alpha_lambda1") else None,
            theta_region=np.full(layout.num_regions, 0.5) if layout.has("logit_theta_region") else None,
            theta_contiguity=0.5 if layout.has("logit_theta_contiguity") else None,
            omega=omega,
        )

    @property
    def B0(self) -> np.ndarray:
        return self.phi @ np.diag(self.delta) @ self.psi

    def copy(self, **changes) -> "ParameterState":
        return replace(self, **changes)
