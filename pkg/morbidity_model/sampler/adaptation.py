"""Warmup adaptation: dual-averaging step size and windowed diagonal metric."""

import logging
from typing import List

import numpy as np

logger = logging.getLogger(__name__)

INIT_BUFFER = 75
TERM_BUFFER = 50
BASE_WINDOW = 25
MIN_WINDOWED_WARMUP = INIT_BUFFER + BASE_WINDOW + TERM_BUFFER


class DualAveraging:
    """Nesterov dual averaging of log step size towards a target acceptance statistic."""

    def __init__(self, step_size: float, target_accept: float, gamma: float = 0.05, t0: float = 10.0,
                 kappa: float = 0.75):
        self.target_accept = target_accept
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.restart(step_size)

    def restart(self, step_size: float) -> None:
        self.mu = np.log(10.0 * step_size)
        self.counter = 0
        self.s_bar = 0.0
        self.x_bar = 0.0
        self.step_size = step_size

    def update(self, accept_stat: float) -> float:
        self.counter += 1
        accept_stat = min(1.0, max(0.0, accept_stat))
        eta = 1.0 / (self.counter + self.t0)
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target_accept - accept_stat)
        x = self.mu - np.sqrt(self.counter) / self.gamma * self.s_bar
        weight = self.counter ** (-self.kappa)
        self.x_bar = weight * x + (1.0 - weight) * self.x_bar
        self.step_size = float(np.exp(x))
        return self.step_size

    @property
    def final_step_size(self) -> float:
        return float(np.exp(self.x_bar))


class RunningVariance:
    """Welford accumulator of per-coordinate variance."""

    def __init__(self, dim: int):
        self.dim = dim
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros(self.dim)

    def add(self, x: np.ndarray) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def variance(self) -> np.ndarray:
        return self.m2 / max(self.n - 1, 1)


def window_ends(num_warmup: int) -> List[int]:
    """
    Last iteration index of each metric window.

    Windows start after the initial buffer at 25 iterations and double,
    the final one stretching to the terminal buffer.
    """
    if num_warmup < MIN_WINDOWED_WARMUP:
        return []
    ends = []
    start = INIT_BUFFER
    size = BASE_WINDOW
    last = num_warmup - TERM_BUFFER
    while start < last:
        end = start + size
        if end + 2 * size > last:
            end = last
        ends.append(end - 1)
        start = end
        size *= 2
    return ends


class WindowedAdaptation:
    """
    Warmup schedule: step size adapts throughout, the diagonal metric is
    re-estimated at the end of each window. Short warmups adapt the step
    size only.
    """

    def __init__(self, num_warmup: int, dim: int, step_size: float, target_accept: float, adapt_metric: bool):
        self.num_warmup = num_warmup
        self.dual = DualAveraging(step_size, target_accept)
        self.ends = window_ends(num_warmup) if adapt_metric else []
        self.windowed = bool(self.ends)
        self.variance = RunningVariance(dim)
        self.inv_metric = np.ones(dim)
        if adapt_metric and not self.windowed and num_warmup > 0:
            logger.info(f"Warmup of {num_warmup} is below {MIN_WINDOWED_WARMUP}; adapting step size only")

    def in_window(self, iteration: int) -> bool:
        return self.windowed and INIT_BUFFER <= iteration <= self.ends[-1]

    def learn(self, iteration: int, position: np.ndarray, accept_stat: float) -> bool:
        """
        Record one warmup iteration.

        Returns:
            True when the metric changed and the step size should be re-initialized
        """
        self.dual.update(accept_stat)
        if not self.in_window(iteration):
            return False
        self.variance.add(position)
        if iteration not in self.ends:
            return False
        n = self.variance.n
        self.inv_metric = (n / (n + 5.0)) * self.variance.variance() + 1e-3 * (5.0 / (n + 5.0))
        self.variance.reset()
        logger.debug(f"Metric window ending at iteration {iteration} closed with {n} draws")
        return True

    @property
    def step_size(self) -> float:
        return self.dual.step_size

    def finalize(self) -> float:
        return self.dual.final_step_size
