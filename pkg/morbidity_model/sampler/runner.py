"""Multi-chain NUTS runs."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from ..config import SamplerConfig
from ..errors import AllChainsDiverged, InitializationFailed
from ..schemas import MetricKind
from ..utils.rng import spawn_rngs
from .adaptation import WindowedAdaptation
from .diagnostics import Diagnostics, diagnostics
from .nuts import evaluate, find_reasonable_step_size, nuts_transition

logger = logging.getLogger(__name__)

MAX_INIT_ATTEMPTS = 100


@dataclass
class ChainResult:
    """Retained draws and per-iteration statistics of one chain."""

    chain: int
    draws: np.ndarray
    pointwise: Optional[np.ndarray]
    accept_stat: np.ndarray
    divergent: np.ndarray
    tree_depth: np.ndarray
    n_leapfrog: np.ndarray
    energy: np.ndarray
    step_size: float
    inv_metric: np.ndarray
    warmup_divergences: int
    seconds: float

    @property
    def divergence_fraction(self) -> float:
        return float(self.divergent.mean()) if self.divergent.size else 0.0


@dataclass
class DrawMatrix:
    """Draws of every chain plus diagnostics."""

    chains: List[ChainResult]
    names: List[str] = field(default_factory=list)
    diagnostics: Optional[Diagnostics] = None

    @property
    def num_chains(self) -> int:
        return len(self.chains)

    @property
    def draws(self) -> np.ndarray:
        """(chains, draws, dim)"""
        return np.stack([c.draws for c in self.chains])

    def flat_draws(self) -> np.ndarray:
        """(chains * draws, dim) in chain order."""
        return np.concatenate([c.draws for c in self.chains])

    def flat_pointwise(self) -> Optional[np.ndarray]:
        if any(c.pointwise is None for c in self.chains):
            return None
        return np.concatenate([c.pointwise for c in self.chains])

    def divergence_counts(self) -> List[int]:
        return [int(c.divergent.sum()) for c in self.chains]


def _initial_point(target, dim: int, radius: float, rng: np.random.Generator, chain: int):
    for _ in range(MAX_INIT_ATTEMPTS):
        x = rng.uniform(-radius, radius, size=dim)
        logp, grad = evaluate(target, x)
        if np.isfinite(logp):
            return x, (logp, grad)
    raise InitializationFailed(chain, MAX_INIT_ATTEMPTS)


def run_chain(target, config: SamplerConfig, chain: int, rng: np.random.Generator) -> ChainResult:
    """
    Warm up and sample one chain.

    Args:
        target: Callable returning (log density, gradient) with a ``dim`` attribute;
            an optional ``pointwise(vec)`` method supplies per-point log likelihoods
        config: Sampler settings
        chain: Chain index (for messages and progress bars)
        rng: Chain-owned random generator

    Returns:
        ChainResult
    """
    start_time = time.perf_counter()
    dim = target.dim
    position, current = _initial_point(target, dim, config.init_radius, rng, chain)

    inv_metric = np.ones(dim)
    step_size = find_reasonable_step_size(position, current[0], current[1], inv_metric, target, rng,
                                          config.initial_step_size)
    adaptation = WindowedAdaptation(config.warmup, dim, step_size, config.target_accept,
                                    adapt_metric=config.metric == MetricKind.DIAG)

    total = config.warmup + config.sampling
    iterations = range(total)
    if config.progress:
        iterations = tqdm(iterations, desc=f"chain {chain}", position=chain, leave=False)

    has_pointwise = hasattr(target, "pointwise")
    draws = np.empty((config.sampling, dim))
    pointwise = [] if has_pointwise else None
    accept = np.empty(config.sampling)
    divergent = np.zeros(config.sampling, dtype=bool)
    depth = np.empty(config.sampling, dtype=int)
    n_leapfrog = np.empty(config.sampling, dtype=int)
    energy = np.empty(config.sampling)
    warmup_divergences = 0

    for it in iterations:
        position, stats = nuts_transition(position, rng, step_size, inv_metric, target,
                                          max_depth=config.max_depth,
                                          max_energy_error=config.max_energy_error, current=current)
        current = (stats.logp, stats.grad)
        if it < config.warmup:
            warmup_divergences += int(stats.divergent)
            if adaptation.learn(it, position, stats.accept_stat):
                inv_metric = adaptation.inv_metric
                step_size = find_reasonable_step_size(position, current[0], current[1], inv_metric, target,
                                                      rng, step_size)
                adaptation.dual.restart(step_size)
            else:
                step_size = adaptation.step_size
            if it == config.warmup - 1:
                step_size = adaptation.finalize()
                logger.debug(f"Chain {chain}: warmup done, step size {step_size:.4g}")
            continue
        s = it - config.warmup
        draws[s] = position
        accept[s] = stats.accept_stat
        divergent[s] = stats.divergent
        depth[s] = stats.tree_depth
        n_leapfrog[s] = stats.n_leapfrog
        energy[s] = stats.energy
        if has_pointwise:
            pointwise.append(target.pointwise(position))

    result = ChainResult(
        chain=chain,
        draws=draws,
        pointwise=np.asarray(pointwise) if has_pointwise else None,
        accept_stat=accept,
        divergent=divergent,
        tree_depth=depth,
        n_leapfrog=n_leapfrog,
        energy=energy,
        step_size=float(step_size),
        inv_metric=np.asarray(inv_metric),
        warmup_divergences=warmup_divergences,
        seconds=time.perf_counter() - start_time,
    )
    if divergent.any():
        logger.warning(f"Chain {chain}: {int(divergent.sum())} divergent transitions after warmup")
    return result


def _run_chain_job(args):
    target, config, chain, rng = args
    return run_chain(target, config, chain, rng)


def run(target, config: SamplerConfig, names: Optional[List[str]] = None) -> DrawMatrix:
    """
    Run every chain and attach diagnostics.

    Chains get independent PCG64 streams spawned from ``config.seed``; results
    are merged in chain order, so output does not depend on ``workers``.

    Raises:
        AllChainsDiverged: If more than half the retained iterations diverged in every chain
    """
    rngs = spawn_rngs(config.seed, config.chains)
    jobs = [(target, config, c, rngs[c]) for c in range(config.chains)]
    logger.info(f"Sampling {config.chains} chains x ({config.warmup} warmup + {config.sampling} draws), "
                f"dimension {target.dim}")
    if config.workers > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, config.chains)) as pool:
            chains = list(pool.map(_run_chain_job, jobs))
    else:
        chains = [_run_chain_job(job) for job in jobs]

    fractions = [c.divergence_fraction for c in chains]
    if all(f > 0.5 for f in fractions):
        raise AllChainsDiverged(fractions)

    result = DrawMatrix(chains=chains, names=list(names or []))
    if config.sampling // 2 >= 4:
        result.diagnostics = diagnostics(result.draws)
        worst = result.diagnostics.max_rhat()
        if np.isfinite(worst) and worst > 1.01:
            logger.warning(f"Max R-hat {worst:.3f} exceeds 1.01")
    return result
