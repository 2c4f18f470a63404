"""No-U-Turn sampler with multinomial trajectory sampling and a diagonal metric."""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ..errors import NonFiniteDensity, NumericalError

LogDensity = Callable[[np.ndarray], Tuple[float, np.ndarray]]


@dataclass
class Point:
    """Position, momentum, log density and gradient at one leapfrog state."""

    theta: np.ndarray
    r: np.ndarray
    logp: float
    grad: np.ndarray


@dataclass
class Subtree:
    """
    A contiguous stretch of the trajectory.

    ``minus`` is the earliest state in fictitious time, ``plus`` the latest.
    ``rho`` is the momentum sum over every state in the stretch.
    """

    minus: Point
    plus: Point
    sample: Point
    log_weight: float
    rho: np.ndarray
    turning: bool
    divergent: bool
    sum_accept: float
    n_leapfrog: int

    @property
    def valid(self) -> bool:
        return not (self.turning or self.divergent)


@dataclass
class TransitionStats:
    """Per-iteration sampler statistics."""

    accept_stat: float
    n_leapfrog: int
    tree_depth: int
    divergent: bool
    energy: float
    logp: float
    step_size: float
    grad: Optional[np.ndarray] = None


def kinetic_energy(r: np.ndarray, inv_metric: np.ndarray) -> float:
    return 0.5 * float(np.dot(r, inv_metric * r))


def evaluate(target: LogDensity, theta: np.ndarray) -> Tuple[float, np.ndarray]:
    """Log density and gradient; -inf for any numerical failure."""
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            logp, grad = target(theta)
    except (NumericalError, FloatingPointError, ValueError):
        return -np.inf, np.zeros_like(theta)
    if not np.isfinite(logp) or not np.all(np.isfinite(grad)):
        return -np.inf, np.zeros_like(theta)
    return float(logp), grad


def leapfrog(point: Point, step_size: float, inv_metric: np.ndarray, target: LogDensity) -> Point:
    """One leapfrog step; a negative step integrates backwards."""
    r = point.r + 0.5 * step_size * point.grad
    theta = point.theta + step_size * inv_metric * r
    logp, grad = evaluate(target, theta)
    r = r + 0.5 * step_size * grad
    return Point(theta=theta, r=r, logp=logp, grad=grad)


def _no_uturn(rho: np.ndarray, p_sharp_minus: np.ndarray, p_sharp_plus: np.ndarray) -> bool:
    return float(np.dot(p_sharp_minus, rho)) > 0 and float(np.dot(p_sharp_plus, rho)) > 0


def _merge_turning(left: Subtree, right: Subtree, inv_metric: np.ndarray) -> bool:
    """U-turn test over the joined stretch plus the two cross-subtree checks (left precedes right)."""
    sharp = lambda p: inv_metric * p.r
    rho = left.rho + right.rho
    ok = _no_uturn(rho, sharp(left.minus), sharp(right.plus))
    ok = ok and _no_uturn(left.rho + right.minus.r, sharp(left.minus), sharp(right.minus))
    ok = ok and _no_uturn(right.rho + left.plus.r, sharp(left.plus), sharp(right.plus))
    return not ok


def _ordered(first: Subtree, second: Subtree, direction: int) -> Tuple[Subtree, Subtree]:
    return (first, second) if direction > 0 else (second, first)


def build_tree(start: Point, depth: int, direction: int, step_size: float, inv_metric: np.ndarray,
               target: LogDensity, joint0: float, max_energy_error: float,
               rng: np.random.Generator) -> Subtree:
    """
    Build a subtree of 2**depth leapfrog steps starting next to ``start``.

    Within a subtree the sample is drawn progressively with uniform weights.
    """
    if depth == 0:
        point = leapfrog(start, direction * step_size, inv_metric, target)
        joint = point.logp - kinetic_energy(point.r, inv_metric)
        delta = joint - joint0 if np.isfinite(joint) else -np.inf
        divergent = bool(-delta > max_energy_error)
        accept = float(np.exp(min(0.0, delta))) if np.isfinite(delta) else 0.0
        return Subtree(minus=point, plus=point, sample=point, log_weight=delta, rho=point.r.copy(),
                       turning=False, divergent=divergent, sum_accept=accept, n_leapfrog=1)

    first = build_tree(start, depth - 1, direction, step_size, inv_metric, target, joint0,
                       max_energy_error, rng)
    if not first.valid:
        return first
    edge = first.plus if direction > 0 else first.minus
    second = build_tree(edge, depth - 1, direction, step_size, inv_metric, target, joint0,
                        max_energy_error, rng)

    left, right = _ordered(first, second, direction)
    merged = Subtree(
        minus=left.minus,
        plus=right.plus,
        sample=first.sample,
        log_weight=float(np.logaddexp(first.log_weight, second.log_weight)),
        rho=left.rho + right.rho,
        turning=second.turning,
        divergent=second.divergent,
        sum_accept=first.sum_accept + second.sum_accept,
        n_leapfrog=first.n_leapfrog + second.n_leapfrog,
    )
    if not second.valid:
        return merged
    if np.log(rng.uniform()) < second.log_weight - merged.log_weight:
        merged.sample = second.sample
    merged.turning = _merge_turning(left, right, inv_metric)
    return merged


def nuts_transition(position: np.ndarray, rng: np.random.Generator, step_size: float,
                    inv_metric: np.ndarray, target: LogDensity, max_depth: int = 10,
                    max_energy_error: float = 1000.0,
                    current: Optional[Tuple[float, np.ndarray]] = None) -> Tuple[np.ndarray, TransitionStats]:
    """
    One NUTS transition.

    Args:
        position: Current unconstrained position
        rng: Random generator owned by the chain
        step_size: Leapfrog step size
        inv_metric: Diagonal of the inverse mass matrix
        target: Callable returning (log density, gradient)
        max_depth: Maximum tree depth
        max_energy_error: Energy error beyond which a step is divergent
        current: Cached (log density, gradient) at ``position``

    Returns:
        Tuple of (new position, TransitionStats)

    Raises:
        NonFiniteDensity: If the log density at ``position`` is not finite
    """
    if current is None:
        current = evaluate(target, position)
    logp, grad = current
    if not np.isfinite(logp):
        raise NonFiniteDensity(logp)

    r0 = rng.standard_normal(position.size) / np.sqrt(inv_metric)
    start = Point(theta=position, r=r0, logp=logp, grad=grad)
    joint0 = logp - kinetic_energy(r0, inv_metric)
    tree = Subtree(minus=start, plus=start, sample=start, log_weight=0.0, rho=r0.copy(), turning=False,
                   divergent=False, sum_accept=0.0, n_leapfrog=0)

    depth = 0
    divergent = False
    while depth < max_depth:
        direction = 1 if rng.uniform() < 0.5 else -1
        edge = tree.plus if direction > 0 else tree.minus
        sub = build_tree(edge, depth, direction, step_size, inv_metric, target, joint0, max_energy_error, rng)
        tree.sum_accept += sub.sum_accept
        tree.n_leapfrog += sub.n_leapfrog
        depth += 1
        if sub.divergent:
            divergent = True
            break
        if sub.turning:
            break
        # Biased progressive sampling favours the new subtree
        if np.log(rng.uniform()) < sub.log_weight - tree.log_weight:
            tree.sample = sub.sample
        tree.log_weight = float(np.logaddexp(tree.log_weight, sub.log_weight))
        left, right = _ordered(tree, sub, direction)
        turning = _merge_turning(left, right, inv_metric)
        tree.minus, tree.plus = left.minus, right.plus
        tree.rho = left.rho + right.rho
        if turning:
            break

    sample = tree.sample
    stats = TransitionStats(
        accept_stat=tree.sum_accept / max(tree.n_leapfrog, 1),
        n_leapfrog=tree.n_leapfrog,
        tree_depth=depth,
        divergent=divergent,
        energy=-(sample.logp - kinetic_energy(sample.r, inv_metric)),
        logp=sample.logp,
        step_size=step_size,
        grad=sample.grad,
    )
    return sample.theta, stats


def find_reasonable_step_size(position: np.ndarray, logp: float, grad: np.ndarray, inv_metric: np.ndarray,
                              target: LogDensity, rng: np.random.Generator, step_size: float = 1.0) -> float:
    """Double or halve the step until one-step acceptance crosses 0.5."""
    r = rng.standard_normal(position.size) / np.sqrt(inv_metric)
    start = Point(theta=position, r=r, logp=logp, grad=grad)
    joint0 = logp - kinetic_energy(r, inv_metric)

    def log_accept(eps):
        point = leapfrog(start, eps, inv_metric, target)
        joint = point.logp - kinetic_energy(point.r, inv_metric)
        return joint - joint0 if np.isfinite(joint) else -np.inf

    delta = log_accept(step_size)
    direction = 1 if delta > np.log(0.5) else -1
    for _ in range(100):
        if direction > 0 and not delta > np.log(0.5):
            break
        if direction < 0 and not delta < np.log(0.5):
            break
        step_size = step_size * (2.0 ** direction)
        delta = log_accept(step_size)
    if direction > 0:
        step_size /= 2.0
    return float(min(max(step_size, 1e-10), 1e3))
