"""Prior densities, constraint transforms and prior sampling."""

import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import special, stats

from ..errors import ConstraintViolation
from ..utils.rng import make_rng
from .layout import ParameterLayout
from .state import ParameterState

LOG_2PI = math.log(2.0 * math.pi)

STANDARD_NORMAL_BLOCKS = ("phi", "psi", "gamma_rest", "z0", "z1", "epsilon")

TINY = np.finfo(float).tiny


# Transforms

def alr(omega: np.ndarray) -> np.ndarray:
    """Additive log-ratio with the last component as reference."""
    log_w = np.log(omega)
    return log_w[..., :-1] - log_w[..., -1:]


def alr_inverse(y: np.ndarray) -> np.ndarray:
    full = np.concatenate([y, np.zeros(y.shape[:-1] + (1,))], axis=-1)
    return np.exp(full - special.logsumexp(full, axis=-1, keepdims=True))


def _scalar(value) -> float:
    return float(np.asarray(value).reshape(()))


def to_unconstrained(state: ParameterState, layout: ParameterLayout) -> np.ndarray:
    """
    Map a constrained state onto the flat vector.

    Raises:
        ConstraintViolation: If a sampled parameter is outside its support
    """
    _check_support(state, layout)
    blocks: Dict[str, np.ndarray] = {
        "phi": state.phi,
        "psi": state.psi,
        "log_delta": np.log(state.delta),
        "log_gamma1": np.log(state.gamma[0]),
        "gamma_rest": state.gamma[1:],
        "z0": state.z0,
        "z1": state.z1,
        "epsilon": state.epsilon,
    }
    if layout.has("log_lambda0"):
        blocks["log_lambda0"] = np.log(state.lambda0)
        blocks["log_alpha_lambda0"] = np.log(state.alpha_lambda0)
    if layout.has("log_lambda1"):
        blocks["log_lambda1"] = np.log(state.lambda1)
        blocks["log_alpha_lambda1"] = np.log(state.alpha_lambda1)
    if layout.has("logit_theta_region"):
        blocks["logit_theta_region"] = special.logit(state.theta_region)
    if layout.has("logit_theta_contiguity"):
        blocks["logit_theta_contiguity"] = special.logit(state.theta_contiguity)
    if layout.has("alr_omega"):
        blocks["alr_omega"] = alr(state.omega)
    return layout.pack({name: blocks[name] for name in layout.block_names()})


def from_unconstrained(vec: np.ndarray, layout: ParameterLayout) -> ParameterState:
    """
    Map the flat vector back to a constrained state.

    Raises:
        ConstraintViolation: If any entry is not finite
    """
    vec = np.asarray(vec, dtype=float)
    if not np.all(np.isfinite(vec)):
        raise ConstraintViolation("unconstrained vector", "has non-finite entries")
    p = layout.unpack(vec)
    state = ParameterState.zeros(layout)
    state.phi = p["phi"].copy()
    state.psi = p["psi"].copy()
    state.delta = np.exp(p["log_delta"])
    gamma = np.empty(layout.num_diseases)
    gamma[0] = math.exp(_scalar(p["log_gamma1"]))
    if layout.num_diseases > 1:
        gamma[1:] = p["gamma_rest"]
    state.gamma = gamma
    state.epsilon = p["epsilon"].copy()
    if layout.has("log_lambda0"):
        state.lambda0 = np.exp(p["log_lambda0"])
        state.alpha_lambda0 = math.exp(_scalar(p["log_alpha_lambda0"]))
        state.z0 = p["z0"].copy()
    if layout.has("log_lambda1"):
        state.lambda1 = np.exp(p["log_lambda1"])
        state.alpha_lambda1 = math.exp(_scalar(p["log_alpha_lambda1"]))
        state.z1 = p["z1"].copy()
    if layout.has("logit_theta_region"):
        state.theta_region = special.expit(p["logit_theta_region"])
    if layout.has("logit_theta_contiguity"):
        state.theta_contiguity = float(special.expit(_scalar(p["logit_theta_contiguity"])))
    if layout.has("alr_omega"):
        state.omega = alr_inverse(p["alr_omega"])
    return state


def _check_support(state: ParameterState, layout: ParameterLayout) -> None:
    def positive(name, value):
        value = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(value)) or np.any(value <= 0):
            raise ConstraintViolation(name, "must be positive and finite")

    def unit_interval(name, value):
        value = np.asarray(value, dtype=float)
        if not np.all((value > 0) & (value < 1)):
            raise ConstraintViolation(name, "must lie strictly inside (0, 1)")

    positive("delta", state.delta)
    positive("gamma[0]", state.gamma[0])
    if layout.has("log_lambda0"):
        positive("lambda0", state.lambda0)
        positive("alpha_lambda0", state.alpha_lambda0)
    if layout.has("log_lambda1"):
        positive("lambda1", state.lambda1)
        positive("alpha_lambda1", state.alpha_lambda1)
    if layout.has("logit_theta_region"):
        unit_interval("theta_region", state.theta_region)
    if layout.has("logit_theta_contiguity"):
        unit_interval("theta_contiguity", state.theta_contiguity)
    if layout.num_active_kernels > 1:
        omega = np.asarray(state.omega, dtype=float)
        if np.any(omega <= 0) or np.any(np.abs(omega.sum(axis=-1) - 1.0) > 1e-12):
            raise ConstraintViolation("omega", "must lie in the open simplex")


def _lambda_rate(alpha: float, layout: ParameterLayout) -> float:
    priors = layout.config.priors
    return alpha / (priors.sigma2_zeta * layout.config.rho)


# Densities

def log_prior(state: ParameterState, layout: ParameterLayout) -> float:
    """
    Log prior density of the constrained parameters (no Jacobians).

    The lambda term is the Gamma density of lambda squared.

    Raises:
        ConstraintViolation: If any support condition fails
    """
    _check_support(state, layout)
    priors = layout.config.priors
    total = 0.0
    total += stats.norm.logpdf(state.phi).sum() + stats.norm.logpdf(state.psi).sum()
    total += stats.gamma.logpdf(state.delta, a=priors.a_delta, scale=1.0 / priors.b_delta).sum()
    for s, lam, alpha in ((0, state.lambda0, state.alpha_lambda0), (1, state.lambda1, state.alpha_lambda1)):
        if not layout.has(f"log_lambda{s}"):
            continue
        rate = _lambda_rate(alpha, layout)
        total += stats.gamma.logpdf(lam ** 2, a=alpha, scale=1.0 / rate).sum()
        total += stats.expon.logpdf(alpha)
        total += stats.norm.logpdf(state.z0 if s == 0 else state.z1).sum()
    if layout.has("logit_theta_region"):
        total += stats.beta.logpdf(state.theta_region, priors.beta_a, priors.beta_b).sum()
    if layout.has("logit_theta_contiguity"):
        total += stats.beta.logpdf(state.theta_contiguity, priors.beta_a, priors.beta_b)
    if layout.num_active_kernels > 1:
        concentration = np.full(layout.num_active_kernels, priors.a_omega)
        for w in state.omega.reshape(-1, layout.num_active_kernels):
            total += stats.dirichlet.logpdf(w, concentration)
    total += stats.halfnorm.logpdf(state.gamma[0], scale=priors.gamma1_scale)
    total += stats.norm.logpdf(state.gamma[1:]).sum()
    total += stats.norm.logpdf(state.epsilon).sum()
    return float(total)


def log_jacobian(vec: np.ndarray, layout: ParameterLayout) -> float:
    """log |d constrained / d unconstrained| summed over every transformed block."""
    p = layout.unpack(vec)
    total = float(p["log_delta"].sum()) + _scalar(p["log_gamma1"])
    for s in (0, 1):
        if layout.has(f"log_lambda{s}"):
            u = p[f"log_lambda{s}"]
            total += float(np.sum(math.log(2.0) + 2.0 * u)) + _scalar(p[f"log_alpha_lambda{s}"])
    for name in ("logit_theta_region", "logit_theta_contiguity"):
        if layout.has(name):
            u = p[name]
            total += float(np.sum(-np.logaddexp(0.0, -u) - np.logaddexp(0.0, u)))
    if layout.has("alr_omega"):
        total += float(np.log(alr_inverse(p["alr_omega"])).sum())
    return total


def log_prior_unconstrained(vec: np.ndarray, layout: ParameterLayout) -> Tuple[float, np.ndarray]:
    """
    Log prior plus log Jacobian on the unconstrained vector, with its gradient.

    Args:
        vec: Flat unconstrained vector
        layout: Parameter layout

    Returns:
        Tuple of (value, gradient)
    """
    p = layout.unpack(vec)
    priors = layout.config.priors
    grad = {name: np.zeros(layout.entry(name).shape) for name in layout.block_names()}
    total = 0.0

    for name in STANDARD_NORMAL_BLOCKS:
        if layout.has(name):
            x = p[name]
            total += -0.5 * float(np.sum(x * x)) - 0.5 * x.size * LOG_2PI
            grad[name] = -x

    a, b = priors.a_delta, priors.b_delta
    u = p["log_delta"]
    delta = np.exp(u)
    total += float(np.sum(a * math.log(b) - special.gammaln(a) + a * u - b * delta))
    grad["log_delta"] = a - b * delta

    scale = priors.sigma2_zeta * layout.config.rho
    for s in (0, 1):
        name = f"log_lambda{s}"
        if not layout.has(name):
            continue
        u = p[name]
        w = _scalar(p[f"log_alpha_lambda{s}"])
        alpha = math.exp(w)
        rate = alpha / scale
        lam2 = np.exp(2.0 * u)
        total += float(np.sum(alpha * math.log(rate) - special.gammaln(alpha) + 2.0 * alpha * u
                              - rate * lam2 + math.log(2.0)))
        grad[name] = 2.0 * alpha - 2.0 * rate * lam2
        d_alpha = float(np.sum(math.log(rate) + 1.0 - special.digamma(alpha) + 2.0 * u - lam2 / scale))
        # Exponential(1) on alpha with its log Jacobian
        total += -alpha + w
        grad[f"log_alpha_lambda{s}"] = np.asarray(alpha * d_alpha + 1.0 - alpha)

    ba, bb = priors.beta_a, priors.beta_b
    for name in ("logit_theta_region", "logit_theta_contiguity"):
        if not layout.has(name):
            continue
        u = p[name]
        theta = special.expit(u)
        log_theta = -np.logaddexp(0.0, -u)
        log_one_minus = -np.logaddexp(0.0, u)
        total += float(np.sum(-special.betaln(ba, bb) + ba * log_theta + bb * log_one_minus))
        grad[name] = np.asarray(ba * (1.0 - theta) - bb * theta)

    if layout.has("alr_omega"):
        y = p["alr_omega"]
        k = layout.num_active_kernels
        a_w = priors.a_omega
        omega = alr_inverse(y)
        groups = omega.size // k
        total += groups * float(special.gammaln(k * a_w) - k * special.gammaln(a_w))
        total += a_w * float(np.log(omega).sum())
        grad["alr_omega"] = a_w - omega[..., :-1] * (k * a_w)

    s = priors.gamma1_scale
    u = _scalar(p["log_gamma1"])
    g = math.exp(u)
    total += math.log(2.0) - 0.5 * math.log(2.0 * math.pi * s * s) - g * g / (2.0 * s * s) + u
    grad["log_gamma1"] = np.asarray(1.0 - g * g / (s * s))

    return float(total), layout.pack(grad)


def sample_prior(layout: ParameterLayout, seed: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None) -> ParameterState:
    """
    Draw a complete constrained state from the prior, seeds and epsilon included.

    Args:
        layout: Parameter layout (carries the model configuration)
        seed: Root seed for a fresh PCG64 stream
        rng: Existing generator, used instead of seed when given

    Returns:
        ParameterState inside the support
    """
    if rng is None:
        rng = make_rng(layout.config.seed if seed is None else seed)
    priors = layout.config.priors
    n_d, n_p, r, n_l = layout.num_diseases, layout.num_predictors, layout.rank, layout.num_locations
    state = ParameterState.zeros(layout)

    state.phi = rng.standard_normal((n_d, r))
    state.psi = rng.standard_normal((r, n_p))
    state.delta = np.maximum(rng.gamma(priors.a_delta, 1.0 / priors.b_delta, size=r), TINY)

    if layout.has("log_lambda0"):
        state.alpha_lambda0 = max(float(rng.exponential(1.0)), TINY)
        rate = _lambda_rate(state.alpha_lambda0, layout)
        state.lambda0 = np.sqrt(np.maximum(rng.gamma(state.alpha_lambda0, 1.0 / rate, size=(n_d, n_p)), TINY))
        state.z0 = rng.standard_normal((n_d, n_p, n_l))
    if layout.has("log_lambda1"):
        state.alpha_lambda1 = max(float(rng.exponential(1.0)), TINY)
        rate = _lambda_rate(state.alpha_lambda1, layout)
        state.lambda1 = np.sqrt(np.maximum(rng.gamma(state.alpha_lambda1, 1.0 / rate, size=(n_d, n_p)), TINY))
        state.z1 = rng.standard_normal(layout.z1_shape)
    if layout.has("logit_theta_region"):
        state.theta_region = _open_unit(rng.beta(priors.beta_a, priors.beta_b, size=layout.num_regions))
    if layout.has("logit_theta_contiguity"):
        state.theta_contiguity = float(_open_unit(rng.beta(priors.beta_a, priors.beta_b)))
    if layout.num_active_kernels > 1:
        k = layout.num_active_kernels
        draws = rng.dirichlet(np.full(k, priors.a_omega), size=(n_d, layout.omega_levels))
        draws = np.maximum(draws, TINY)
        state.omega = draws / draws.sum(axis=-1, keepdims=True)

    gamma = rng.standard_normal(n_d)
    gamma[0] = max(abs(gamma[0]) * priors.gamma1_scale, TINY)
    state.gamma = gamma
    state.epsilon = rng.standard_normal(layout.num_respondents)
    return state


def _open_unit(x):
    eps = np.finfo(float).eps
    return np.clip(x, eps, 1.0 - eps)
