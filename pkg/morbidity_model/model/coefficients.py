"""Regression coefficient fields beta_jh(l, c) and linear predictors."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from ..kernels.covariance import cholesky_psd
from ..kernels.functions import KernelBasis, KernelParams
from ..schemas import DynamicsMode, RespondentRecord
from .layout import ParameterLayout
from .state import ParameterState


@dataclass(frozen=True)
class FactorizedMean:
    """National mean B0 = Phi diag(Delta) Psi with r_max = min(n_d, n_p)."""

    phi: np.ndarray
    delta: np.ndarray
    psi: np.ndarray


def assemble_B0(fm: FactorizedMean) -> np.ndarray:
    return (fm.phi * fm.delta[None, :]) @ fm.psi


def correlate_deviations(z: np.ndarray, L: np.ndarray) -> np.ndarray:
    """xi = L z over the trailing location axis."""
    return np.einsum("lk,...k->...l", L, z)


@dataclass(frozen=True)
class LocationFactors:
    """Cholesky factors per (disease, weight level) with the matrices they came from."""

    cholesky: np.ndarray
    kernels: np.ndarray
    jitter: np.ndarray


def location_factors(state: ParameterState, layout: ParameterLayout, basis: KernelBasis) -> LocationFactors:
    """
    Factor every location correlation matrix the state implies.

    Variants without kernels use C = I.

    Returns:
        LocationFactors with cholesky of shape (n_d, levels, n_l, n_l)
    """
    n_d, n_l, levels = layout.num_diseases, layout.num_locations, layout.omega_levels
    if not layout.mask.kernels:
        eye = np.broadcast_to(np.eye(n_l), (n_d, levels, n_l, n_l))
        return LocationFactors(cholesky=eye, kernels=np.eye(n_l)[None], jitter=np.zeros((n_d, levels)))

    params = KernelParams(theta_region=state.theta_region, theta_contiguity=state.theta_contiguity)
    kernels = np.stack([basis.matrix(spec, params) for spec in layout.active_kernels])
    omega = state.omega if state.omega is not None else np.ones((n_d, levels, 1))
    L = np.empty((n_d, levels, n_l, n_l))
    jitter = np.zeros((n_d, levels))
    for j in range(n_d):
        for s in range(levels):
            C = np.tensordot(omega[j, s], kernels, axes=1)
            L[j, s], jitter[j, s] = cholesky_psd(C)
    return LocationFactors(cholesky=L, kernels=kernels, jitter=jitter)


@dataclass(frozen=True)
class DeviationField:
    """Local deviation scales and correlated seeds."""

    lambda0: np.ndarray
    lambda1: np.ndarray
    xi0: np.ndarray
    xi1: np.ndarray


def deviation_field(state: ParameterState, factors: LocationFactors, layout: ParameterLayout) -> DeviationField:
    L0 = factors.cholesky[:, layout.omega_level(0)]
    L1 = factors.cholesky[:, layout.omega_level(1)]
    xi0 = np.einsum("jlk,jhk->jhl", L0, state.z0)
    if state.z1.ndim == 4:
        xi1 = np.einsum("jlk,jhck->jhcl", L1, state.z1)
    else:
        xi1 = np.einsum("jlk,jhk->jhl", L1, state.z1)
    return DeviationField(lambda0=state.lambda0, lambda1=state.lambda1, xi0=xi0, xi1=xi1)


def cohort_shift(xi1: np.ndarray, num_cohorts: int, dynamics: DynamicsMode) -> np.ndarray:
    """
    Cumulative temporal shift per (j, h, l, c).

    Linear: xi1(l) * c. Random walk: sum of xi1(l, c') for 1 <= c' <= c.
    """
    if dynamics == DynamicsMode.RANDOM_WALK:
        n_d, n_p, _, n_l = xi1.shape
        steps = np.concatenate([np.zeros((n_d, n_p, 1, n_l)), np.cumsum(xi1, axis=2)], axis=2)
        return np.moveaxis(steps, 2, 3)
    return xi1[..., None] * np.arange(num_cohorts, dtype=float)


@dataclass(frozen=True)
class CoefficientField:
    """beta[j, h, l, c] over every disease, predictor, location and cohort."""

    beta: np.ndarray

    def at(self, j: int, h: int, l: int, c: int) -> float:
        return float(self.beta[j, h, l, c])


def coefficient_field(B0: np.ndarray, deviations: DeviationField, num_cohorts: int,
                      dynamics: DynamicsMode) -> CoefficientField:
    base = B0[..., None] + deviations.lambda0[:, :, None] * deviations.xi0
    shift = cohort_shift(deviations.xi1, num_cohorts, dynamics)
    beta = base[..., None] + deviations.lambda1[:, :, None, None] * shift
    return CoefficientField(beta=beta)


def coefficient_at(j: int, h: int, l: int, c: int, field: CoefficientField) -> float:
    return field.at(j, h, l, c)


def state_coefficients(state: ParameterState, layout: ParameterLayout, basis: KernelBasis) -> CoefficientField:
    """Coefficient field implied by a constrained state."""
    factors = location_factors(state, layout, basis)
    deviations = deviation_field(state, factors, layout)
    fm = FactorizedMean(phi=state.phi, delta=state.delta, psi=state.psi)
    return coefficient_field(assemble_B0(fm), deviations, layout.num_cohorts, layout.dynamics)


def linear_predictor(record: RespondentRecord, field: CoefficientField, gamma: np.ndarray,
                     epsilon: float) -> np.ndarray:
    """eta_i = B(l_i, c_i) x_i + gamma eps_i."""
    B = field.beta[:, :, record.location, record.cohort]
    return B @ np.asarray(record.covariates) + np.asarray(gamma) * epsilon


def linear_predictors(X: np.ndarray, location: np.ndarray, cohort: np.ndarray, field: CoefficientField,
                      gamma: np.ndarray, epsilon: np.ndarray) -> np.ndarray:
    """Vectorized eta for every respondent; shape (n_s, n_d)."""
    B = field.beta[:, :, location, cohort]
    return np.einsum("jhi,ih->ij", B, X) + np.outer(epsilon, gamma)


def inverse_logit(eta):
    return special.expit(eta)


def bernoulli_logit_logpmf(y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """y * eta - log(1 + exp(eta)) in the stable form."""
    return y * eta - np.logaddexp(0.0, eta)


def design_arrays(records) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(X, Y, location, cohort) arrays from records."""
    X = np.asarray([r.covariates for r in records], dtype=float)
    Y = np.asarray([r.responses for r in records], dtype=float)
    location = np.asarray([r.location for r in records], dtype=int)
    cohort = np.asarray([r.cohort for r in records], dtype=int)
    return X, Y, location, cohort
