"""Command-line interface for the morbidity model engine."""

import functools
import logging
import os
import sys
import time
from pathlib import Path
from typing import Dict, Tuple

import click
import numpy as np

from . import __version__
from .artifacts import (
    COMPARE_FILE,
    ELPD_REPORT_FILE,
    PPC_FILE,
    dataset_digest,
    load_fit,
    load_manifest,
    load_pointwise,
    pointwise_file,
    predict_file,
    write_fit,
    write_manifest,
)
from .config import SimConfig, load_run_config, toy_model_config
from .errors import (
    ConfigError,
    DataValidationError,
    EvaluationError,
    MorbidityModelError,
    NumericalError,
    SamplerError,
    SimulationError,
)
from .eval import (
    COMPARE_COLUMNS,
    PPC_COLUMNS,
    QUANTITIES,
    comparison_table,
    derived_summaries,
    posterior_predictive_prevalence,
    psis_loo,
    waic,
)
from .ingest import RESPONDENTS_FILE, load_data_dir, write_dataset, write_locations
from .model import PosteriorTarget, check_gradients
from .sampler import run
from .schemas import ModelVariant
from .simulate import bias_demo, drift_matrix, gen_dataset, gen_locations, write_truth
from .utils.io import save_json, save_records_csv
from .utils.log import init_logging
from .utils.rng import make_rng

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_SAMPLER = 3
EXIT_DATA = 4

VARIANT_NAMES = [v.value.replace("_", "-") for v in ModelVariant]

# Derived stream keys under the sampler seed
PPC_STREAM = 10
GRADIENT_STREAM = 11


def exit_code(error: MorbidityModelError) -> int:
    if isinstance(error, (ConfigError, SimulationError)):
        return EXIT_CONFIG
    if isinstance(error, (SamplerError, NumericalError)):
        return EXIT_SAMPLER
    if isinstance(error, (DataValidationError, EvaluationError)):
        return EXIT_DATA
    return 1


def reports_errors(command):
    """Turn engine errors into a one-line message and the documented exit code."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except MorbidityModelError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(exit_code(e))
    return wrapper


def _inputs(ctx) -> Dict[str, str]:
    path = ctx.obj.get("config_path")
    return {"config": path} if path else {}


def _thin(draws: np.ndarray, max_draws: int) -> np.ndarray:
    if max_draws <= 0 or draws.shape[0] <= max_draws:
        return draws
    return draws[np.linspace(0, draws.shape[0] - 1, max_draws).round().astype(int)]


def _parse_profile(pairs: Tuple[str, ...]) -> Dict[str, str]:
    profile = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise click.BadParameter(f"expected key=value, got '{pair}'", param_hint="--profile")
        profile[key.strip()] = value.strip()
    return profile


@click.group()
@click.option('--config', '-c', 'config_path', type=click.Path(exists=True, dir_okay=False),
              help='Configuration file path (INI with [model], [priors], [sampler], [simulation])')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.version_option(__version__)
@click.pass_context
def cli(ctx, config_path, verbose):
    """Morbidity Model - spatio-temporal multi-disease logistic regression for pseudo-panel surveys."""
    init_logging(logging.DEBUG if verbose else logging.INFO)
    ctx.ensure_object(dict)
    try:
        ctx.obj['config'] = load_run_config(config_path)
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    ctx.obj['config_path'] = config_path


@cli.command()
@click.argument('out_dir', type=click.Path(file_okay=False))
@click.pass_context
@reports_errors
def simulate(ctx, out_dir):
    """Generate a synthetic dataset and its truth from the [simulation] settings."""
    started = time.perf_counter()
    config = ctx.obj['config']
    sim = config.simulation

    locations = gen_locations(sim)
    dataset = gen_dataset(sim, config.model, locations.table)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    write_dataset(dataset.records, str(Path(out_dir) / RESPONDENTS_FILE), config.model)
    write_locations(locations.table, out_dir)
    write_truth(dataset, out_dir)

    inputs = _inputs(ctx)
    if sim.parameter_source != "prior":
        inputs["parameters"] = sim.parameter_source
    write_manifest(out_dir, "simulate", config, started, seed=sim.seed, inputs=inputs,
                   layout=dataset.layout.entries, data_digest=dataset_digest(out_dir),
                   variant=config.model.variant.value,
                   extra={"num_respondents": len(dataset.records),
                          "num_locations": locations.table.num_locations})
    click.echo(f"Wrote {len(dataset.records)} respondents over {locations.table.num_locations} locations "
               f"to {out_dir}")


@cli.command()
@click.argument('data_dir', type=click.Path(exists=True, file_okay=False))
@click.argument('out_dir', type=click.Path(file_okay=False))
@click.option('--model', 'model_name', type=click.Choice(VARIANT_NAMES), default=None,
              help='Model variant (overrides [model] variant)')
@click.pass_context
@reports_errors
def fit(ctx, data_dir, out_dir, model_name):
    """Sample the posterior of one model variant."""
    started = time.perf_counter()
    config = ctx.obj['config']
    if model_name:
        model = config.model.model_copy(update={"variant": ModelVariant.parse(model_name)})
        config = config.model_copy(update={"model": model})

    records, table = load_data_dir(data_dir, config.model)
    target = PosteriorTarget(records, table, config.model)
    variant = config.model.variant.value
    click.echo(f"Fitting {variant} to {len(records)} respondents ({target.dim} parameters)")

    result = run(target, config.sampler, names=target.layout.coordinate_names())
    warnings = write_fit(out_dir, result, target, config)
    if target.num_jittered:
        warnings.append(f"{target.num_jittered} of {target.num_evaluations} evaluations needed Cholesky jitter")
    write_manifest(out_dir, "fit", config, started, seed=config.sampler.seed, inputs=_inputs(ctx),
                   layout=target.layout.entries, data_digest=dataset_digest(data_dir), variant=variant,
                   warnings=warnings, extra={"data_dir": os.path.abspath(data_dir)})

    if result.diagnostics is not None:
        click.echo(f"Max R-hat {result.diagnostics.max_rhat():.4f}, min bulk ESS {result.diagnostics.min_ess():.0f}")
    click.echo(f"Divergences per chain: {result.divergence_counts()}")
    click.echo(f"Saved draws to {out_dir}")


def _elpd_command(ctx, run_dir, out_dir, kind):
    started = time.perf_counter()
    manifest = load_manifest(run_dir)
    ll = load_pointwise(run_dir)
    report = psis_loo(ll, dataset_digest=manifest.dataset_digest) if kind == "loo" else \
        waic(ll, dataset_digest=manifest.dataset_digest)
    out_dir = out_dir or str(Path(run_dir) / kind)
    save_json(report.to_dict(), str(Path(out_dir) / ELPD_REPORT_FILE))

    warnings = []
    counts = report.k_counts()
    if counts.get("k>0.7"):
        warnings.append(f"{counts['k>0.7']} points with Pareto k > 0.7")
    write_manifest(out_dir, kind, ctx.obj['config'], started, seed=manifest.seed,
                   inputs={"pointwise": str(Path(run_dir) / pointwise_file(0))},
                   data_digest=manifest.dataset_digest, variant=manifest.variant, warnings=warnings)

    label = "LOO" if kind == "loo" else "WAIC"
    click.echo(f"elpd_{kind} = {report.elpd:.2f} (se {report.se:.2f}), p_{kind} = {report.p_eff:.2f}, "
               f"{label}-IC = {report.ic:.2f} (se {report.se_ic:.2f})")
    if counts:
        click.echo(f"Pareto k: {counts['k>0.5']} above 0.5, {counts['k>0.7']} above 0.7")
    click.echo(f"Saved report to {out_dir}")


@cli.command()
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--out-dir', '-o', type=click.Path(file_okay=False), help='Output directory (default RUN_DIR/loo)')
@click.pass_context
@reports_errors
def loo(ctx, run_dir, out_dir):
    """PSIS leave-one-out elpd of a fit."""
    _elpd_command(ctx, run_dir, out_dir, "loo")


@cli.command(name="waic")
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--out-dir', '-o', type=click.Path(file_okay=False), help='Output directory (default RUN_DIR/waic)')
@click.pass_context
@reports_errors
def waic_cmd(ctx, run_dir, out_dir):
    """WAIC of a fit."""
    _elpd_command(ctx, run_dir, out_dir, "waic")


@cli.command()
@click.argument('run_dirs', nargs=-1, required=True, type=click.Path(exists=True, file_okay=False))
@click.option('--out-dir', '-o', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.pass_context
@reports_errors
def compare(ctx, run_dirs, out_dir):
    """Rank fits of the same dataset by LOO-IC, with WAIC alongside."""
    started = time.perf_counter()
    names, loo_reports, waic_reports, digests = [], [], [], set()
    for run_dir in run_dirs:
        manifest = load_manifest(run_dir)
        ll = load_pointwise(run_dir)
        name = manifest.variant or Path(run_dir).name
        if name in names:
            name = f"{name}:{Path(run_dir).name}"
        names.append(name)
        loo_reports.append(psis_loo(ll, dataset_digest=manifest.dataset_digest))
        waic_reports.append(waic(ll, dataset_digest=manifest.dataset_digest))
        digests.add(manifest.dataset_digest)

    table = comparison_table(loo_reports, waic_reports, names)
    save_records_csv(table, COMPARE_COLUMNS, str(Path(out_dir) / COMPARE_FILE))
    write_manifest(out_dir, "compare", ctx.obj['config'], started, seed=0,
                   data_digest=next(iter(digests)), extra={"runs": [os.path.abspath(d) for d in run_dirs]})

    click.echo(f"{'model':<16}{'dLOO-IC':>12}{'(se)':>10}{'dWAIC':>12}{'(se)':>10}")
    for row in table:
        click.echo(f"{row['model']:<16}{row['delta_looic']:>12.2f}{row['se_delta_looic']:>10.2f}"
                   f"{row['delta_waic']:>12.2f}{row['se_delta_waic']:>10.2f}")
    click.echo(f"Saved comparison to {out_dir}")


@cli.command()
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--out-dir', '-o', type=click.Path(file_okay=False), help='Output directory (default RUN_DIR/ppc)')
@click.option('--same-individuals', is_flag=True, help='Keep sampled respondent effects instead of redrawing them')
@click.option('--max-draws', default=200, show_default=True, help='Evenly thinned draws to replicate (0 = all)')
@click.pass_context
@reports_errors
def ppc(ctx, run_dir, out_dir, same_individuals, max_draws):
    """Posterior predictive check of per-location prevalence."""
    started = time.perf_counter()
    fitted = load_fit(run_dir)
    rng = make_rng(fitted.config.sampler.seed, spawn_key=(PPC_STREAM,))
    check = posterior_predictive_prevalence(fitted.target, _thin(fitted.draws, max_draws), rng,
                                            resample_epsilon=not same_individuals)
    out_dir = out_dir or str(Path(run_dir) / "ppc")
    save_records_csv(check.rows(), PPC_COLUMNS, str(Path(out_dir) / PPC_FILE))
    write_manifest(out_dir, "ppc", fitted.config, started, seed=fitted.config.sampler.seed,
                   data_digest=fitted.manifest.dataset_digest, variant=fitted.manifest.variant,
                   extra={"same_individuals": same_individuals, "max_draws": max_draws})
    click.echo(f"{check.calibrated_fraction():.1%} of {check.p_values.size} Bayesian p-values in (0.05, 0.95)")
    click.echo(f"Saved check to {out_dir}")


@cli.command()
@click.argument('run_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--quantity', type=click.Choice(QUANTITIES), default='curve', show_default=True)
@click.option('--profile', multiple=True, help='key=value over the reference profile (sex, edu, eco, smoke, '
                                               'age, location, cohort)')
@click.option('--disease', default=0, show_default=True, help='Disease index for odds ratios')
@click.option('--predictor', default='eco', show_default=True, help='Covariate for odds ratios')
@click.option('--conditional', is_flag=True, help='Morbidity curves at eps = 0 instead of averaging over eps')
@click.option('--max-draws', default=0, show_default=True, help='Evenly thinned draws to use (0 = all)')
@click.option('--out-dir', '-o', type=click.Path(file_okay=False), help='Output directory (default RUN_DIR/predict)')
@click.pass_context
@reports_errors
def predict(ctx, run_dir, quantity, profile, disease, predictor, conditional, max_draws, out_dir):
    """Plot-ready posterior summaries: curves, odds ratios, comorbidity, theta."""
    started = time.perf_counter()
    fitted = load_fit(run_dir)
    pairs = _parse_profile(profile)
    table = derived_summaries(fitted.target, _thin(fitted.draws, max_draws), quantity, profile=pairs,
                              disease=disease, predictor=predictor, conditional=conditional)
    out_dir = out_dir or str(Path(run_dir) / "predict")
    save_records_csv(table.rows, table.columns, str(Path(out_dir) / predict_file(quantity)))
    write_manifest(out_dir, "predict", fitted.config, started, seed=fitted.config.sampler.seed,
                   data_digest=fitted.manifest.dataset_digest, variant=fitted.manifest.variant,
                   extra={"quantity": quantity, "profile": pairs, "disease": disease, "predictor": predictor,
                          "conditional": conditional})
    click.echo(f"Saved {len(table.rows)} {quantity} rows to {out_dir}")


@cli.command(name="check-gradients")
@click.option('--data-dir', type=click.Path(exists=True, file_okay=False),
              help='Dataset to check on (default: simulated toy data)')
@click.option('--model', 'model_names', multiple=True, type=click.Choice(VARIANT_NAMES),
              help='Variants to check (default: all)')
@click.option('--points', default=20, show_default=True)
@click.option('--step', default=1e-5, show_default=True)
@click.option('--floor', default=1e-8, show_default=True,
              help='Gradient magnitude below which absolute error is scored')
@click.option('--tolerance', default=1e-5, show_default=True)
@click.option('--out-dir', '-o', type=click.Path(file_okay=False), help='Write gradient_check.csv here')
@click.pass_context
@reports_errors
def check_gradients_cmd(ctx, data_dir, model_names, points, step, floor, tolerance, out_dir):
    """Compare analytic gradients with central finite differences."""
    started = time.perf_counter()
    config = ctx.obj['config']
    if data_dir:
        model = config.model
        records, table = load_data_dir(data_dir, model)
    else:
        model = toy_model_config()
        sim = SimConfig(num_locations=16, num_regions=4, num_cohorts=model.num_cohorts, respondents_per_cell=3,
                        num_distance_kernels=1, seed=config.simulation.seed)
        table = gen_locations(sim).table
        records = gen_dataset(sim, model, table).records

    variants = [ModelVariant.parse(n) for n in model_names] or list(ModelVariant)
    rows = []
    worst = 0.0
    for i, variant in enumerate(variants):
        target = PosteriorTarget(records, table, model.model_copy(update={"variant": variant}))
        report = check_gradients(target, points=points, step=step, floor=floor,
                                 rng=make_rng(config.sampler.seed, spawn_key=(GRADIENT_STREAM, i)))
        worst = max(worst, report.max_relative_error)
        rows.append({"variant": variant.value, "dim": target.dim, "max_relative_error": report.max_relative_error,
                     "worst_coordinate": report.worst_coordinate})
        click.echo(f"{variant.value:<10} dim {target.dim:<6} max relative error {report.max_relative_error:.3e} "
                   f"at {report.worst_coordinate}")

    if out_dir:
        save_records_csv(rows, ["variant", "dim", "max_relative_error", "worst_coordinate"],
                         str(Path(out_dir) / "gradient_check.csv"))
        write_manifest(out_dir, "check-gradients", config, started, seed=config.sampler.seed,
                       inputs=_inputs(ctx), extra={"points": points, "step": step, "floor": floor})
    if worst >= tolerance:
        click.echo(f"Error: max relative error {worst:.3e} is not below {tolerance:g}", err=True)
        sys.exit(EXIT_SAMPLER)
    click.echo(f"All gradients within {tolerance:g}")


@cli.command(name="bias-demo")
@click.option('--drift', type=float, default=None,
              help='Intercept logit shift per cohort step for disease 0 (negative = later cohorts healthier)')
@click.option('--out-dir', '-o', type=click.Path(file_okay=False), help='Write bias.json here')
@click.pass_context
@reports_errors
def bias_demo_cmd(ctx, drift, out_dir):
    """Age slopes pooled by survey year versus by birth cohort."""
    started = time.perf_counter()
    config = ctx.obj['config']
    sim = config.simulation
    if drift is not None:
        sim = sim.model_copy(update={"cohort_drift": drift_matrix(config.model, drift)})
    result = bias_demo(sim, config.model)
    click.echo(f"Age slope by survey year: {result.by_survey_year.slope:.3f} ({result.by_survey_year.se:.3f})")
    click.echo(f"Age slope by cohort:      {result.by_cohort.slope:.3f} ({result.by_cohort.se:.3f})")
    click.echo(f"Difference:               {result.difference:.3f} ({result.combined_se:.3f})")
    if out_dir:
        save_json({"by_survey_year": vars(result.by_survey_year), "by_cohort": vars(result.by_cohort),
                   "difference": result.difference, "combined_se": result.combined_se,
                   "num_respondents": result.num_respondents, "num_survey_years": result.num_survey_years},
                  str(Path(out_dir) / "bias.json"))
        write_manifest(out_dir, "bias-demo", config, started, seed=sim.seed, inputs=_inputs(ctx),
                       extra={"cohort_drift": sim.cohort_drift})


if __name__ == '__main__':
    cli()
