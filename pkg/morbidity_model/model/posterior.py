"""Joint log posterior over the unconstrained vector with its analytic gradient."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse, special

from ..config import ModelConfig
from ..errors import IndexOutOfRange, NonFiniteDensity
from ..ingest.locations import LocationTable
from ..kernels.functions import KernelBasis
from ..schemas import DynamicsMode, KernelKind, RespondentRecord
from .cholesky import cholesky_adjoint
from .coefficients import (
    CoefficientField,
    DeviationField,
    FactorizedMean,
    LocationFactors,
    assemble_B0,
    bernoulli_logit_logpmf,
    coefficient_field,
    cohort_shift,
    design_arrays,
    deviation_field,
    linear_predictors,
    location_factors,
)
from .layout import ParameterLayout
from .priors import from_unconstrained, log_prior_unconstrained
from .state import ParameterState

logger = logging.getLogger(__name__)


@dataclass
class ForwardPass:
    """Intermediate quantities of one density evaluation."""

    state: ParameterState
    factors: LocationFactors
    deviations: DeviationField
    coefficients: CoefficientField
    eta: np.ndarray
    loglik: np.ndarray


class PosteriorTarget:
    """
    Log posterior of one dataset under one model configuration.

    The target is read-only after construction apart from its evaluation
    counters, so chains in separate processes can each hold a copy.
    """

    def __init__(self, records: Sequence[RespondentRecord], table: LocationTable, config: ModelConfig):
        self.records = list(records)
        self.table = table
        self.config = config
        self.layout = ParameterLayout(config, table.num_locations, table.num_regions, len(self.records))
        self.basis = KernelBasis(table) if self.layout.mask.kernels else None
        self.X, self.Y, self.location, self.cohort = design_arrays(self.records)
        if self.X.shape[1] != config.num_predictors or self.Y.shape[1] != config.num_diseases:
            raise ValueError("records do not match the configured predictors or diseases")
        if np.any(self.location >= table.num_locations):
            i = int(np.argmax(self.location >= table.num_locations))
            raise IndexOutOfRange("location", i + 2, int(self.location[i]), table.num_locations)
        if np.any(self.cohort >= config.num_cohorts):
            i = int(np.argmax(self.cohort >= config.num_cohorts))
            raise IndexOutOfRange("cohort", i + 2, int(self.cohort[i]), config.num_cohorts)

        n_s = len(self.records)
        n_cells = table.num_locations * config.num_cohorts
        cells = self.location * config.num_cohorts + self.cohort
        # Respondent -> (location, cohort) cell aggregation
        self._cells = sparse.csr_matrix((np.ones(n_s), (cells, np.arange(n_s))), shape=(n_cells, n_s))

        self.num_evaluations = 0
        self.num_jittered = 0
        self.last_jitter = 0.0

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def num_respondents(self) -> int:
        return len(self.records)

    # Forward pass

    def forward_state(self, state: ParameterState) -> ForwardPass:
        factors = location_factors(state, self.layout, self.basis)
        deviations = deviation_field(state, factors, self.layout)
        B0 = assemble_B0(FactorizedMean(phi=state.phi, delta=state.delta, psi=state.psi))
        coefficients = coefficient_field(B0, deviations, self.layout.num_cohorts, self.layout.dynamics)
        eta = linear_predictors(self.X, self.location, self.cohort, coefficients, state.gamma, state.epsilon)
        loglik = bernoulli_logit_logpmf(self.Y, eta)
        return ForwardPass(state=state, factors=factors, deviations=deviations,
                           coefficients=coefficients, eta=eta, loglik=loglik)

    def forward(self, vec: np.ndarray) -> ForwardPass:
        fwd = self.forward_state(from_unconstrained(vec, self.layout))
        self.num_evaluations += 1
        jitter = float(np.max(fwd.factors.jitter)) if fwd.factors.jitter.size else 0.0
        self.last_jitter = jitter
        if jitter > 0:
            self.num_jittered += 1
            logger.debug(f"Evaluation {self.num_evaluations} used Cholesky jitter {jitter:.3g}")
        return fwd

    # Densities

    def log_density(self, vec: np.ndarray) -> float:
        """Log posterior value without the gradient."""
        fwd = self.forward(vec)
        prior, _ = log_prior_unconstrained(vec, self.layout)
        return float(fwd.loglik.sum()) + prior

    def log_posterior(self, vec: np.ndarray) -> Tuple[float, np.ndarray]:
        """
        Log likelihood + log prior + log Jacobian, with the analytic gradient.

        Raises:
            NonFiniteDensity: If the value or gradient is not finite
        """
        fwd = self.forward(vec)
        prior, prior_grad = log_prior_unconstrained(vec, self.layout)
        value = float(fwd.loglik.sum()) + prior
        if not np.isfinite(value):
            raise NonFiniteDensity(value)
        grad = self.likelihood_gradient(fwd) + prior_grad
        if not np.all(np.isfinite(grad)):
            raise NonFiniteDensity(value)
        return value, grad

    __call__ = log_posterior

    def pointwise(self, vec: np.ndarray, by_disease: bool = False) -> np.ndarray:
        """Per-respondent (or per respondent-disease) log likelihood at a vector."""
        loglik = self.forward(vec).loglik
        return loglik.reshape(-1) if by_disease else loglik.sum(axis=1)

    # Backward pass

    def likelihood_gradient(self, fwd: ForwardPass) -> np.ndarray:
        layout = self.layout
        state = fwd.state
        n_s = self.num_respondents
        n_d, n_p, n_l, n_c = layout.num_diseases, layout.num_predictors, layout.num_locations, layout.num_cohorts
        grad: Dict[str, np.ndarray] = {}

        R = self.Y - special.expit(fwd.eta)
        grad["epsilon"] = R @ state.gamma
        d_gamma = R.T @ state.epsilon
        grad["log_gamma1"] = np.asarray(d_gamma[0] * state.gamma[0])
        grad["gamma_rest"] = d_gamma[1:]

        RX = (R[:, :, None] * self.X[:, None, :]).reshape(n_s, n_d * n_p)
        G = np.asarray(self._cells @ RX).reshape(n_l, n_c, n_d, n_p).transpose(2, 3, 0, 1)

        dB0 = G.sum(axis=(2, 3))
        grad["phi"] = (dB0 @ state.psi.T) * state.delta[None, :]
        grad["psi"] = state.delta[:, None] * (state.phi.T @ dB0)
        d_delta = np.einsum("jr,jh,rh->r", state.phi, dB0, state.psi)
        grad["log_delta"] = d_delta * state.delta

        L = fwd.factors.cholesky
        L_bar = np.zeros((n_d, layout.omega_levels, n_l, n_l))
        if layout.has("z0"):
            lev = layout.omega_level(0)
            G_l = G.sum(axis=3)
            grad["log_lambda0"] = (fwd.deviations.xi0 * G_l).sum(axis=-1) * state.lambda0
            d_xi0 = state.lambda0[:, :, None] * G_l
            grad["z0"] = np.einsum("jlk,jhl->jhk", L[:, lev], d_xi0)
            L_bar[:, lev] += np.einsum("jhl,jhk->jlk", d_xi0, state.z0)
        if layout.has("z1"):
            lev = layout.omega_level(1)
            xi1 = fwd.deviations.xi1
            if layout.dynamics == DynamicsMode.RANDOM_WALK:
                shift = cohort_shift(xi1, n_c, layout.dynamics)
                d_lambda1 = (shift * G).sum(axis=(2, 3))
                tail = np.flip(np.cumsum(np.flip(G, axis=-1), axis=-1), axis=-1)
                d_xi1 = np.moveaxis(state.lambda1[:, :, None, None] * tail[..., 1:], 3, 2)
                grad["z1"] = np.einsum("jlk,jhcl->jhck", L[:, lev], d_xi1)
                L_bar[:, lev] += np.einsum("jhcl,jhck->jlk", d_xi1, state.z1)
            else:
                G_c = G @ np.arange(n_c, dtype=float)
                d_lambda1 = (xi1 * G_c).sum(axis=-1)
                d_xi1 = state.lambda1[:, :, None] * G_c
                grad["z1"] = np.einsum("jlk,jhl->jhk", L[:, lev], d_xi1)
                L_bar[:, lev] += np.einsum("jhl,jhk->jlk", d_xi1, state.z1)
            grad["log_lambda1"] = d_lambda1 * state.lambda1

        if layout.mask.kernels:
            self._kernel_gradient(fwd, L_bar, grad)

        for name in layout.block_names():
            if name not in grad:
                grad[name] = np.zeros(layout.entry(name).shape)
        return layout.pack(grad)

    def _kernel_gradient(self, fwd: ForwardPass, L_bar: np.ndarray, grad: Dict[str, np.ndarray]) -> None:
        layout = self.layout
        state = fwd.state
        kernels = fwd.factors.kernels
        K = layout.num_active_kernels
        omega = state.omega if state.omega is not None else np.ones((layout.num_diseases, layout.omega_levels, 1))
        has_partition = layout.has("logit_theta_region")
        has_contiguity = layout.has("logit_theta_contiguity")
        k_part = layout.kernel_position(KernelKind.PARTITION) if has_partition else None
        k_cont = layout.kernel_position(KernelKind.CONTIGUITY) if has_contiguity else None

        d_omega = np.zeros((layout.num_diseases, layout.omega_levels, K))
        d_theta_region = np.zeros(layout.num_regions)
        d_theta_c = 0.0
        for j in range(layout.num_diseases):
            for s in range(layout.omega_levels):
                if not np.any(L_bar[j, s]):
                    continue
                C_bar = cholesky_adjoint(fwd.factors.cholesky[j, s], L_bar[j, s])
                d_omega[j, s] = np.einsum("kab,ab->k", kernels, C_bar)
                if has_partition:
                    d_theta_region += omega[j, s, k_part] * np.einsum("rab,ab->r", self.basis.region_pairs, C_bar)
                if has_contiguity:
                    d_theta_c += omega[j, s, k_cont] * float(np.sum(self.basis.contiguity_weights * C_bar))

        if layout.has("alr_omega"):
            weighted = np.sum(omega * d_omega, axis=-1, keepdims=True)
            grad["alr_omega"] = omega[..., :-1] * (d_omega[..., :-1] - weighted)
        if has_partition:
            theta = state.theta_region
            grad["logit_theta_region"] = d_theta_region * theta * (1.0 - theta)
        if has_contiguity:
            theta_c = state.theta_contiguity
            grad["logit_theta_contiguity"] = np.asarray(d_theta_c * theta_c * (1.0 - theta_c))


def log_likelihood(target: PosteriorTarget, state: ParameterState) -> float:
    """Sum over respondents and diseases of the Bernoulli-logit log density."""
    return float(target.forward_state(state).loglik.sum())


def pointwise_loglik(target: PosteriorTarget, state: ParameterState, by_disease: bool = False) -> np.ndarray:
    """Per-respondent log likelihood summed over diseases (or per respondent-disease)."""
    loglik = target.forward_state(state).loglik
    return loglik.reshape(-1) if by_disease else loglik.sum(axis=1)


def log_posterior(target: PosteriorTarget, vec: np.ndarray) -> Tuple[float, np.ndarray]:
    return target.log_posterior(vec)


@dataclass
class GradientCheckReport:
    """Worst finite-difference disagreement over the checked points."""

    max_relative_error: float
    worst_coordinate: str
    points: int
    per_block: Dict[str, float] = field(default_factory=dict)


def check_gradients(target: PosteriorTarget, points: int = 20, step: float = 1e-5, floor: float = 1e-8,
                    radius: float = 1.0, rng: Optional[np.random.Generator] = None) -> GradientCheckReport:
    """
    Compare the analytic gradient with central finite differences.

    Components with |analytic| below ``floor`` are scored by absolute error,
    all others by relative error.

    Args:
        target: Posterior target
        points: Number of random points
        step: Finite-difference step
        floor: Magnitude below which absolute error is used
        radius: Points are uniform in [-radius, radius] per coordinate
        rng: Random generator

    Returns:
        GradientCheckReport
    """
    rng = rng or np.random.default_rng(0)
    names = target.layout.coordinate_names()
    block_of = [n.split("[")[0] for n in names]
    worst, worst_name = 0.0, ""
    per_block: Dict[str, float] = {}
    for _ in range(points):
        x = rng.uniform(-radius, radius, size=target.dim)
        _, analytic = target.log_posterior(x)
        for k in range(target.dim):
            e = np.zeros(target.dim)
            e[k] = step
            fd = (target.log_density(x + e) - target.log_density(x - e)) / (2.0 * step)
            a = analytic[k]
            err = abs(a - fd) if abs(a) < floor else abs(a - fd) / abs(a)
            per_block[block_of[k]] = max(per_block.get(block_of[k], 0.0), err)
            if err > worst:
                worst, worst_name = err, names[k]
    return GradientCheckReport(max_relative_error=worst, worst_coordinate=worst_name, points=points,
                               per_block=per_block)
