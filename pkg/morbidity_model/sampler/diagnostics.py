"""Convergence diagnostics: rank-normalized split R-hat and bulk effective sample size."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import InsufficientDraws


@dataclass
class Diagnostics:
    """Per-parameter R-hat and bulk ESS; R-hat is NaN where ``rhat_defined`` is False."""

    rhat: np.ndarray
    ess_bulk: np.ndarray
    rhat_defined: np.ndarray

    def max_rhat(self) -> float:
        values = self.rhat[self.rhat_defined]
        return float(values.max()) if values.size else float("nan")

    def min_ess(self) -> float:
        values = self.ess_bulk[np.isfinite(self.ess_bulk)]
        return float(values.min()) if values.size else float("nan")


def _split_chains(ary: np.ndarray) -> np.ndarray:
    """(chains, draws) -> (2 * chains, draws // 2), dropping the middle draw when odd."""
    half = ary.shape[1] // 2
    return np.vstack((ary[:, :half], ary[:, -half:]))


def _z_scale(ary: np.ndarray) -> np.ndarray:
    rank = stats.rankdata(ary, method="average").reshape(ary.shape)
    return stats.norm.ppf((rank - 0.5) / ary.size)


def _rhat(ary: np.ndarray) -> float:
    _, n = ary.shape
    chain_mean = ary.mean(axis=1)
    within = ary.var(axis=1, ddof=1).mean()
    between = n * chain_mean.var(ddof=1)
    return float(np.sqrt(((n - 1.0) / n * within + between / n) / within))


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.size
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    centered = x - x.mean()
    spectrum = np.fft.rfft(centered, n=size)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n]
    return acov / n


def _ess(ary: np.ndarray) -> float:
    """ESS with Geyer's initial positive then initial monotone sequence."""
    n_chain, n_draw = ary.shape
    acov = np.asarray([_autocov(chain) for chain in ary])
    chain_mean = ary.mean(axis=1)
    mean_var = acov[:, 0].mean() * n_draw / (n_draw - 1.0)
    var_plus = mean_var * (n_draw - 1.0) / n_draw
    if n_chain > 1:
        var_plus += chain_mean.var(ddof=1)

    rho = np.zeros(n_draw)
    rho_even = 1.0
    rho[0] = rho_even
    rho_odd = 1.0 - (mean_var - acov[:, 1].mean()) / var_plus
    rho[1] = rho_odd

    t = 1
    while t < n_draw - 2 and rho_even + rho_odd >= 0.0:
        rho_even = 1.0 - (mean_var - acov[:, t + 1].mean()) / var_plus
        rho_odd = 1.0 - (mean_var - acov[:, t + 2].mean()) / var_plus
        rho[t + 1] = rho_even
        if rho_even + rho_odd >= 0:
            rho[t + 2] = rho_odd
        t += 2
    max_t = t

    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0
            rho[t + 2] = rho[t + 1]
        t += 2

    tau = -1.0 + 2.0 * rho[:max_t].sum() + rho[max_t + 1:max_t + 2].sum()
    tau = max(tau, 1.0 / np.log10(n_chain * n_draw))
    return float(n_chain * n_draw / tau)


def split_rhat(draws: np.ndarray) -> float:
    """Rank-normalized split R-hat of one parameter, draws shaped (chains, draws)."""
    split = _split_chains(draws)
    bulk = _rhat(_z_scale(split))
    folded = np.abs(draws - np.median(draws))
    tail = _rhat(_z_scale(_split_chains(folded)))
    return max(bulk, tail)


def ess_bulk(draws: np.ndarray) -> float:
    return _ess(_z_scale(_split_chains(draws)))


def diagnostics(draws: np.ndarray) -> Diagnostics:
    """
    R-hat and bulk ESS for every parameter.

    Args:
        draws: Array shaped (chains, draws, parameters)

    Returns:
        Diagnostics; R-hat is undefined for a single chain or a constant parameter

    Raises:
        InsufficientDraws: If a split chain would hold fewer than 4 draws
    """
    draws = np.asarray(draws, dtype=float)
    n_chain, n_draw, dim = draws.shape
    if n_draw // 2 < 4:
        raise InsufficientDraws(n_draw // 2)
    rhat = np.full(dim, np.nan)
    ess = np.full(dim, np.nan)
    defined = np.zeros(dim, dtype=bool)
    for k in range(dim):
        column = draws[:, :, k]
        if not np.all(np.isfinite(column)) or np.ptp(column) == 0:
            continue
        ess[k] = ess_bulk(column)
        if n_chain >= 2:
            with np.errstate(divide="ignore", invalid="ignore"):
                value = split_rhat(column)
            if np.isfinite(value):
                rhat[k] = value
                defined[k] = True
    return Diagnostics(rhat=rhat, ess_bulk=ess, rhat_defined=defined)
