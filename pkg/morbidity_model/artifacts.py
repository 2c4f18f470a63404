"""Run directories: draws, pointwise log likelihoods, config snapshots and manifests."""

import hashlib
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import ConfigError, DataValidationError
from .ingest.loader import load_data_dir
from .model.posterior import PosteriorTarget
from .sampler.runner import DrawMatrix
from .schemas import LayoutEntry, RunManifest
from .utils.io import (
    directory_digests,
    file_digest,
    load_json,
    load_matrix_csv,
    save_json,
    save_matrix_csv,
    save_records_csv,
)
from .utils.rng import RNG_ALGORITHM

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"
DIAGNOSTICS_FILE = "diagnostics.csv"
CHAIN_STATS_FILE = "chain_stats.csv"
ELPD_REPORT_FILE = "elpd_report.json"
COMPARE_FILE = "compare.csv"
PPC_FILE = "ppc.csv"


def draws_file(chain: int) -> str:
    return f"draws_chain{chain}.csv"


def pointwise_file(chain: int) -> str:
    return f"pointwise_chain{chain}.csv"


def sampler_stats_file(chain: int) -> str:
    return f"sampler_stats_chain{chain}.csv"


def predict_file(quantity: str) -> str:
    return f"predict_{quantity.replace('-', '_')}.csv"


def dataset_digest(data_dir: str) -> str:
    """SHA-256 over the sorted per-file digests of a data directory."""
    digests = directory_digests(data_dir, "*.csv")
    if not digests:
        raise DataValidationError(f"no CSV files in data directory {data_dir}")
    payload = "".join(f"{name}:{digest}\n" for name, digest in sorted(digests.items()))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_manifest(out_dir: str, command: str, config: RunConfig, started: float, seed: int,
                   inputs: Optional[Dict[str, str]] = None, layout: Optional[Sequence[LayoutEntry]] = None,
                   data_digest: Optional[str] = None, variant: Optional[str] = None,
                   warnings: Optional[List[str]] = None, extra: Optional[Dict] = None) -> RunManifest:
    """
    Record provenance of every file in ``out_dir``.

    Input digests are taken from ``inputs`` (name -> path); output digests
    cover every other file already written to the directory.
    """
    outputs = {name: digest for name, digest in directory_digests(out_dir).items() if name != MANIFEST_FILE}
    manifest = RunManifest(
        command=command,
        config_hash=config.config_hash(),
        seed=seed,
        engine_version=__version__,
        rng_algorithm=RNG_ALGORITHM,
        variant=variant,
        parameter_layout=list(layout or []),
        input_digests={name: file_digest(path) for name, path in sorted((inputs or {}).items())},
        output_digests=outputs,
        dataset_digest=data_digest,
        timing_seconds=time.perf_counter() - started,
        warnings=list(warnings or []),
        extra=dict(extra or {}),
    )
    save_json(manifest.model_dump(mode="json"), str(Path(out_dir) / MANIFEST_FILE))
    return manifest


def load_manifest(run_dir: str) -> RunManifest:
    path = Path(run_dir) / MANIFEST_FILE
    if not path.exists():
        raise DataValidationError(f"{run_dir} has no {MANIFEST_FILE}")
    return RunManifest.model_validate(load_json(str(path)))


def write_fit(out_dir: str, fit: DrawMatrix, target: PosteriorTarget, config: RunConfig) -> List[str]:
    """Write the config snapshot, per-chain draws, pointwise log likelihoods and diagnostics."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    save_json(config.model_dump(mode="json"), str(root / CONFIG_FILE))
    ids = [r.id for r in target.records]
    warnings = []
    stats_rows = []
    for chain in fit.chains:
        save_matrix_csv(chain.draws, fit.names, str(root / draws_file(chain.chain)))
        if chain.pointwise is not None:
            save_matrix_csv(chain.pointwise, ids, str(root / pointwise_file(chain.chain)))
        per_iteration = np.column_stack([chain.accept_stat, chain.divergent, chain.tree_depth,
                                         chain.n_leapfrog, chain.energy])
        save_matrix_csv(per_iteration, ["accept_stat", "divergent", "tree_depth", "n_leapfrog", "energy"],
                        str(root / sampler_stats_file(chain.chain)))
        divergences = int(chain.divergent.sum())
        stats_rows.append({"chain": chain.chain, "step_size": chain.step_size, "divergences": divergences,
                           "warmup_divergences": chain.warmup_divergences,
                           "mean_accept_stat": float(chain.accept_stat.mean()),
                           "mean_tree_depth": float(chain.tree_depth.mean())})
        if divergences:
            warnings.append(f"chain {chain.chain}: {divergences} divergent transitions")
    save_records_csv(stats_rows, ["chain", "step_size", "divergences", "warmup_divergences",
                                  "mean_accept_stat", "mean_tree_depth"], str(root / CHAIN_STATS_FILE))

    if fit.diagnostics is not None:
        diag = fit.diagnostics
        rows = [{"parameter": name, "rhat": float(diag.rhat[k]), "ess_bulk": float(diag.ess_bulk[k])}
                for k, name in enumerate(fit.names)]
        save_records_csv(rows, ["parameter", "rhat", "ess_bulk"], str(root / DIAGNOSTICS_FILE))
        worst = diag.max_rhat()
        if np.isfinite(worst) and worst > 1.01:
            warnings.append(f"max R-hat {worst:.4f} exceeds 1.01")
    return warnings


@dataclass
class FitRun:
    """A fitted run directory loaded back into memory."""

    run_dir: str
    config: RunConfig
    manifest: RunManifest
    target: PosteriorTarget
    draws: np.ndarray
    pointwise: Optional[np.ndarray]

    @property
    def name(self) -> str:
        return self.manifest.variant or Path(self.run_dir).name


def _chain_files(root: Path, name_of) -> List[Path]:
    files = []
    chain = 0
    while (root / name_of(chain)).exists():
        files.append(root / name_of(chain))
        chain += 1
    return files


def load_pointwise(run_dir: str) -> np.ndarray:
    """Pointwise log likelihood of every chain, stacked in chain order."""
    files = _chain_files(Path(run_dir), pointwise_file)
    if not files:
        raise DataValidationError(f"{run_dir} has no pointwise log-likelihood files")
    return np.concatenate([load_matrix_csv(str(f))[1] for f in files])


def load_fit(run_dir: str, data_dir: Optional[str] = None) -> FitRun:
    """
    Rebuild the posterior target and draws of a fit.

    Args:
        run_dir: Directory written by ``fit``
        data_dir: Data directory, defaulting to the one recorded in the manifest

    Raises:
        DataValidationError: If the data no longer matches the fit
    """
    root = Path(run_dir)
    manifest = load_manifest(run_dir)
    config = RunConfig.from_dict(load_json(str(root / CONFIG_FILE)))
    data_dir = data_dir or manifest.extra.get("data_dir")
    if not data_dir:
        raise ConfigError(f"{run_dir} does not record its data directory", key="data_dir")
    digest = dataset_digest(data_dir)
    if manifest.dataset_digest and digest != manifest.dataset_digest:
        raise DataValidationError(f"data in {data_dir} differs from the data {run_dir} was fitted on")

    records, table = load_data_dir(data_dir, config.model)
    target = PosteriorTarget(records, table, config.model)
    chains = []
    for path in _chain_files(root, draws_file):
        header, draws = load_matrix_csv(str(path))
        if header != target.layout.coordinate_names():
            raise DataValidationError(f"{path} does not match the parameter layout")
        chains.append(draws)
    if not chains:
        raise DataValidationError(f"{run_dir} has no draw files")
    pointwise = load_pointwise(run_dir) if (root / pointwise_file(0)).exists() else None
    return FitRun(run_dir=run_dir, config=config, manifest=manifest, target=target,
                  draws=np.concatenate(chains), pointwise=pointwise)
