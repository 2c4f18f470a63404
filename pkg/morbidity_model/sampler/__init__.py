"""No-U-Turn sampling, warmup adaptation and convergence diagnostics."""

from .adaptation import DualAveraging, WindowedAdaptation, window_ends
from .diagnostics import Diagnostics, diagnostics, ess_bulk, split_rhat
from .nuts import TransitionStats, leapfrog, nuts_transition
from .runner import ChainResult, DrawMatrix, run, run_chain

__all__ = [
    "nuts_transition",
    "leapfrog",
    "TransitionStats",
    "DualAveraging",
    "WindowedAdaptation",
    "window_ends",
    "run",
    "run_chain",
    "ChainResult",
    "DrawMatrix",
    "diagnostics",
    "Diagnostics",
    "split_rhat",
    "ess_bulk",
]
