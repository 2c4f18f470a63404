"""Predictive accuracy metrics: WAIC, Pareto-smoothed importance sampling LOO and paired comparison."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from ..errors import DegenerateDraws, MismatchedPoints, TailTooSmall

logger = logging.getLogger(__name__)

MIN_TAIL = 5
K_WARN = 0.5
K_BAD = 0.7
GPD_METHOD = "profile posterior over a fixed shape grid (30 + sqrt(M) points), weakly informative prior on k"


@dataclass
class ElpdReport:
    """
    Expected log pointwise predictive density with its per-point terms.

    ``per_point`` sums to ``elpd``. ``pareto_k`` is only set for PSIS-LOO.
    The information-criterion scale is -2 * elpd.
    """

    kind: str
    elpd: float
    p_eff: float
    se: float
    per_point: np.ndarray
    p_eff_per_point: np.ndarray
    num_draws: int
    pareto_k: Optional[np.ndarray] = None
    dataset_digest: Optional[str] = None

    @property
    def num_points(self) -> int:
        return int(self.per_point.size)

    @property
    def ic(self) -> float:
        return -2.0 * self.elpd

    @property
    def se_ic(self) -> float:
        return 2.0 * self.se

    def k_counts(self) -> Dict[str, int]:
        if self.pareto_k is None:
            return {}
        return {f"k>{K_WARN}": int(np.sum(self.pareto_k > K_WARN)),
                f"k>{K_BAD}": int(np.sum(self.pareto_k > K_BAD))}

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "kind": self.kind,
            "elpd": self.elpd,
            "p_eff": self.p_eff,
            "se": self.se,
            "ic": self.ic,
            "se_ic": self.se_ic,
            "num_points": self.num_points,
            "num_draws": self.num_draws,
            "dataset_digest": self.dataset_digest,
            "per_point": self.per_point.tolist(),
            "p_eff_per_point": self.p_eff_per_point.tolist(),
        }
        if self.pareto_k is not None:
            out["pareto_k"] = self.pareto_k.tolist()
            out["k_counts"] = self.k_counts()
            out["gpd_method"] = GPD_METHOD
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ElpdReport":
        k = data.get("pareto_k")
        return cls(
            kind=data["kind"],
            elpd=float(data["elpd"]),
            p_eff=float(data["p_eff"]),
            se=float(data["se"]),
            per_point=np.asarray(data["per_point"], dtype=float),
            p_eff_per_point=np.asarray(data["p_eff_per_point"], dtype=float),
            num_draws=int(data["num_draws"]),
            pareto_k=None if k is None else np.asarray(k, dtype=float),
            dataset_digest=data.get("dataset_digest"),
        )


def _as_loglik(ll) -> np.ndarray:
    ll = np.asarray(ll, dtype=float)
    if ll.ndim == 1:
        ll = ll[:, None]
    if ll.ndim != 2 or ll.shape[1] < 1:
        raise ValueError(f"log-likelihood matrix must be (draws, points), got shape {ll.shape}")
    if not np.all(np.isfinite(ll)):
        raise ValueError("log-likelihood matrix has non-finite entries")
    return ll


def _standard_error(per_point: np.ndarray) -> float:
    n = per_point.size
    if n < 2:
        return 0.0
    return float(np.sqrt(n * np.var(per_point, ddof=1)))


def waic(ll, dataset_digest: Optional[str] = None) -> ElpdReport:
    """
    Widely applicable information criterion on the elpd scale.

    Args:
        ll: Pointwise log likelihood shaped (draws, points)
        dataset_digest: Identity of the evaluated dataset, checked by ``compare``

    Returns:
        ElpdReport with the per-point variance penalty as ``p_eff_per_point``

    Raises:
        DegenerateDraws: If fewer than two draws are given
    """
    ll = _as_loglik(ll)
    num_draws = ll.shape[0]
    if num_draws < 2:
        raise DegenerateDraws()
    lppd = logsumexp(ll, axis=0) - np.log(num_draws)
    # centred on the first draw so constant columns give exactly zero
    penalty = np.var(ll - ll[:1], axis=0, ddof=1)
    per_point = lppd - penalty
    return ElpdReport(kind="waic", elpd=float(per_point.sum()), p_eff=float(penalty.sum()),
                      se=_standard_error(per_point), per_point=per_point, p_eff_per_point=penalty,
                      num_draws=num_draws, dataset_digest=dataset_digest)


def tail_length(num_draws: int, r_eff: float = 1.0) -> int:
    return int(min(np.ceil(0.2 * num_draws), np.ceil(3.0 * np.sqrt(num_draws / r_eff))))


def _gpdfit(x: np.ndarray) -> Tuple[float, float]:
    """
    Generalized Pareto fit to sorted positive exceedances.

    Returns:
        Tuple of (shape k, scale sigma)
    """
    prior_bs = 3
    prior_k = 10
    n = x.size
    m_est = 30 + int(n ** 0.5)

    b_ary = 1 - np.sqrt(m_est / (np.arange(1, m_est + 1) - 0.5))
    b_ary /= prior_bs * x[int(n / 4 + 0.5) - 1]
    b_ary += 1 / x[-1]

    k_ary = np.mean(np.log1p(-b_ary[:, None] * x), axis=1)
    len_scale = n * (np.log(-b_ary / k_ary) - k_ary - 1)
    with np.errstate(over="ignore"):
        weights = 1 / np.sum(np.exp(len_scale - len_scale[:, None]), axis=1)

    keep = weights >= 10 * np.finfo(float).eps
    weights = weights[keep] / np.sum(weights[keep])
    b_post = np.sum(b_ary[keep] * weights)
    k_post = np.mean(np.log1p(-b_post * x))
    sigma = -k_post / b_post
    k_post = (n * k_post + prior_k * 0.5) / (n + prior_k)
    return float(k_post), float(sigma)


def _gpinv(probs: np.ndarray, k: float, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return np.full_like(probs, np.nan)
    if abs(k) < np.finfo(float).eps:
        return -np.log1p(-probs) * sigma
    return np.expm1(-k * np.log1p(-probs)) / k * sigma


def _smooth_column(log_ratios: np.ndarray, tail: int) -> Tuple[np.ndarray, float]:
    x = log_ratios - log_ratios.max()
    num_draws = x.size
    order = np.argsort(x, kind="stable")
    cutoff = max(x[order[-tail - 1]], np.log(np.finfo(float).tiny))
    tail_ids = np.flatnonzero(x > cutoff)
    k_hat = 0.0

    # Ties at the cutoff can leave too few exceedances; those columns keep raw ratios
    if tail_ids.size > 4:
        x_tail = x[tail_ids]
        tail_order = np.argsort(x_tail, kind="stable")
        exp_cutoff = np.exp(cutoff)
        exceedances = np.exp(x_tail[tail_order]) - exp_cutoff
        if np.ptp(exceedances) > 0:
            k_hat, sigma = _gpdfit(exceedances)
            if np.isfinite(k_hat) and sigma > 0:
                probs = np.arange(0.5, tail_ids.size) / tail_ids.size
                smoothed = np.log(_gpinv(probs, k_hat, sigma) + exp_cutoff)
                smoothed = np.minimum(smoothed, 0.0)
                x_tail[tail_order] = smoothed
                x[tail_ids] = x_tail
            else:
                k_hat = float("inf")

    cap = 0.75 * np.log(num_draws) + logsumexp(x) - np.log(num_draws)
    x = np.minimum(x, cap)
    return x - logsumexp(x), k_hat


def psis_smooth(log_ratios, r_eff: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pareto-smooth importance log ratios column by column.

    Args:
        log_ratios: Array shaped (draws, points)
        r_eff: Relative efficiency of the draws

    Returns:
        Tuple of (normalized log weights, Pareto k per point)

    Raises:
        TailTooSmall: If the tail would hold fewer than 5 draws
    """
    log_ratios = np.asarray(log_ratios, dtype=float)
    num_draws, num_points = log_ratios.shape
    tail = tail_length(num_draws, r_eff)
    if tail < MIN_TAIL:
        raise TailTooSmall(num_draws, tail)
    log_weights = np.empty_like(log_ratios)
    k_hat = np.empty(num_points)
    for i in range(num_points):
        log_weights[:, i], k_hat[i] = _smooth_column(log_ratios[:, i], tail)
    return log_weights, k_hat


def psis_loo(ll, r_eff: float = 1.0, dataset_digest: Optional[str] = None) -> ElpdReport:
    """
    Leave-one-out elpd by Pareto-smoothed importance sampling.

    Args:
        ll: Pointwise log likelihood shaped (draws, points)
        r_eff: Relative efficiency of the draws
        dataset_digest: Identity of the evaluated dataset, checked by ``compare``

    Returns:
        ElpdReport with per-point Pareto k

    Raises:
        TailTooSmall: If there are too few draws to fit the tail
    """
    ll = _as_loglik(ll)
    num_draws = ll.shape[0]
    log_weights, k_hat = psis_smooth(-ll, r_eff)
    per_point = logsumexp(log_weights + ll, axis=0)
    lppd = logsumexp(ll, axis=0) - np.log(num_draws)
    p_loo = lppd - per_point

    warn = int(np.sum(k_hat > K_WARN))
    bad = int(np.sum(k_hat > K_BAD))
    if bad:
        logger.warning(f"Pareto k above {K_BAD} for {bad} of {k_hat.size} points "
                       f"({warn} above {K_WARN}); PSIS-LOO estimates may be unreliable")
    elif warn:
        logger.info(f"Pareto k above {K_WARN} for {warn} of {k_hat.size} points")

    return ElpdReport(kind="psis_loo", elpd=float(per_point.sum()), p_eff=float(p_loo.sum()),
                      se=_standard_error(per_point), per_point=per_point, p_eff_per_point=p_loo,
                      num_draws=num_draws, pareto_k=k_hat, dataset_digest=dataset_digest)


@dataclass
class CompareRow:
    """One model in a ranked comparison; deltas are relative to the best model."""

    name: str
    elpd: float
    se: float
    p_eff: float
    delta_elpd: float
    se_delta: float

    @property
    def ic(self) -> float:
        return -2.0 * self.elpd

    @property
    def delta_ic(self) -> float:
        return 2.0 * self.delta_elpd

    @property
    def se_delta_ic(self) -> float:
        return 2.0 * self.se_delta


def _check_same_points(reports: Sequence[ElpdReport]) -> None:
    sizes = {r.num_points for r in reports}
    if len(sizes) > 1:
        raise MismatchedPoints(f"reports cover different numbers of points {sorted(sizes)}")
    digests = {r.dataset_digest for r in reports if r.dataset_digest is not None}
    if len(digests) > 1:
        raise MismatchedPoints("reports were computed on different datasets")


def paired_difference(a: ElpdReport, b: ElpdReport) -> Tuple[float, float]:
    """elpd(a) - elpd(b) with the standard error of the per-point differences."""
    _check_same_points([a, b])
    diff = a.per_point - b.per_point
    return float(a.elpd - b.elpd), _standard_error(diff)


def compare(reports: Sequence[ElpdReport], names: Optional[Sequence[str]] = None) -> List[CompareRow]:
    """
    Rank models by elpd, best first.

    Args:
        reports: Reports over the same points
        names: Model labels, defaulting to their positions

    Returns:
        Rows sorted by descending elpd with paired differences to the best model

    Raises:
        MismatchedPoints: If the reports do not cover the same points
    """
    if not reports:
        return []
    names = list(names) if names is not None else [str(i) for i in range(len(reports))]
    if len(names) != len(reports):
        raise ValueError("one name per report is required")
    _check_same_points(reports)

    ranking = sorted(range(len(reports)), key=lambda i: -reports[i].elpd)
    best = reports[ranking[0]]
    rows = []
    for i in ranking:
        delta, se = paired_difference(best, reports[i])
        rows.append(CompareRow(name=names[i], elpd=reports[i].elpd, se=reports[i].se,
                               p_eff=reports[i].p_eff, delta_elpd=delta, se_delta=se))
    return rows


def comparison_table(loo_reports: Sequence[ElpdReport], waic_reports: Sequence[ElpdReport],
                     names: Sequence[str]) -> List[Dict[str, Any]]:
    """
    Rows ranked by LOO with LOO and WAIC differences on both scales.

    WAIC differences are taken against the LOO-best model so both columns share
    one reference. The IC columns use -2 * elpd, so a positive delta means worse.
    """
    names = list(names)
    if len(waic_reports) != len(names):
        raise ValueError("one WAIC report per model is required")
    rows = compare(loo_reports, names)
    reference = waic_reports[names.index(rows[0].name)] if rows else None
    table = []
    for row in rows:
        report = waic_reports[names.index(row.name)]
        delta_waic, se_waic = paired_difference(reference, report)
        table.append({
            "model": row.name,
            "elpd_loo": row.elpd,
            "se_loo": row.se,
            "p_loo": row.p_eff,
            "delta_elpd_loo": row.delta_elpd,
            "se_delta_elpd_loo": row.se_delta,
            "delta_looic": row.delta_ic,
            "se_delta_looic": row.se_delta_ic,
            "elpd_waic": report.elpd,
            "p_waic": report.p_eff,
            "delta_elpd_waic": delta_waic,
            "se_delta_elpd_waic": se_waic,
            "delta_waic": 2.0 * delta_waic,
            "se_delta_waic": 2.0 * se_waic,
        })
    return table


COMPARE_COLUMNS = ["model", "elpd_loo", "se_loo", "p_loo", "delta_elpd_loo", "se_delta_elpd_loo",
                   "delta_looic", "se_delta_looic", "elpd_waic", "p_waic", "delta_elpd_waic",
                   "se_delta_elpd_waic", "delta_waic", "se_delta_waic"]
