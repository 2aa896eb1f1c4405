"""CLI commands for sunnpest."""

import json
import logging
import os
import sys
from pathlib import Path

import click

from sunnpest import __version__
from sunnpest.core.errors import InputError
from sunnpest.settings import Config, config_path, load_config, save_config

logger = logging.getLogger('sunnpest')

MODEL_IDS = ('m1', 'm2', 'm3')
REPORT_FORMATS = ('table', 'records')


class _ErrorBoundary(click.Group):
    """Map every failure to one exit status: 1 for bad input, 2 for internal errors."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = rv if isinstance(rv, int) else 0
        except click.exceptions.Exit as e:
            code = e.exit_code
        except click.Abort:
            click.echo('Aborted!', err=True)
            code = 1
        except click.ClickException as e:
            e.show()
            code = 1
        except (InputError, ValueError, OSError) as e:
            click.echo(f'Error: {e}', err=True)
            code = 1
        except Exception as e:
            logger.exception('[CLI] internal error')
            click.echo(f'Internal error: {type(e).__name__}: {e}', err=True)
            code = 2
        if standalone_mode:
            sys.exit(code)
        return code


def _config(ctx: click.Context) -> Config:
    return ctx.obj['config']


def _seed(ctx: click.Context, seed: int | None) -> int:
    return _config(ctx).seed if seed is None else seed


def _corpus(ctx: click.Context, climate, labels=(), cycle_start: int | None = None, max_gap: int | None = None):
    from sunnpest.core.pipeline import load_corpus

    config = _config(ctx)
    return load_corpus(
        climate,
        labels,
        clock=config.clock(cycle_start),
        max_gap=config.pipeline.max_gap if max_gap is None else max_gap,
        stations=config.station_metas(),
    )


def _reporter(report_format: str, stream=None):
    from sunnpest.frontends import REPORTERS

    return REPORTERS.create(report_format, stream)


# Options shared by the commands that read climate files
_climate_option = click.option(
    '--climate', 'climate', multiple=True, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path), help='Climate CSV (repeatable)'
)
_labels_option = click.option(
    '--labels', 'labels', multiple=True, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path), help='Label CSV (repeatable)'
)
_seed_option = click.option('--seed', type=click.IntRange(0, 2**64 - 1), default=None, help='RNG seed (default: config seed)')
_cycle_option = click.option('--cycle-start', type=click.IntRange(1, 366), default=None, help='Day-of-year on which accumulation restarts')
_gap_option = click.option('--max-gap', type=click.IntRange(0), default=None, help='Longest interior gap (days) to interpolate')
_format_option = click.option('--report-format', type=click.Choice(REPORT_FORMATS), default='table', show_default=True, help='Output format')


@click.group(cls=_ErrorBoundary, invoke_without_command=True)
@click.option('--version', '-V', is_flag=True, help='Show version')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.option('--config', 'config_file', type=click.Path(dir_okay=False, path_type=Path), default=None, help='Config file path')
@click.pass_context
def main(ctx: click.Context, version: bool, verbose: bool, config_file: Path | None) -> None:
    """sunnpest - Sunn Pest phase and nymphal-stage forecasting.

    \b
    Typical session:
      sunnpest synth --out data/
      sunnpest train --climate data/climate_KIR-WF1.csv --labels data/labels.csv --out model.json
      sunnpest predict --bundle model.json --climate data/climate_KIR-WF1.csv

    \b
    Options (flags or environment):
      -v, --verbose / SUNNPEST_VERBOSE=1   Enable debug logging
      --config / SUNNPEST_CONFIG=<path>    Config file (default ~/.config/sunnpest/config.toml)
    """
    # CLI flags override env vars
    verbose = verbose or os.environ.get('SUNNPEST_VERBOSE') == '1'
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    if version:
        click.echo(f'sunnpest {__version__}')
        return
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        return

    ctx.obj = {'config': load_config(config_file), 'config_path': config_path(config_file)}


@main.command()
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False, path_type=Path), help='Output directory')
@click.option('--years', type=click.IntRange(1), default=4, show_default=True)
@click.option('--stations', type=click.IntRange(1), default=2, show_default=True)
@click.option('--first-year', type=int, default=2014, show_default=True)
@click.option('--missing-rate', type=click.FloatRange(0.0, 0.2), default=0.01, show_default=True)
@_seed_option
@_format_option
@click.pass_context
def synth(ctx, out_dir: Path, years: int, stations: int, first_year: int, missing_rate: float, seed: int | None, report_format: str) -> None:
    """Generate a labeled synthetic corpus (climate_<station>.csv + labels.csv)."""
    from sunnpest.core.synthetic import SynthConfig, generate_seasons

    cfg = SynthConfig(years=years, stations=stations, rng_seed=_seed(ctx, seed), first_year=first_year, missing_rate=missing_rate)
    season = generate_seasons(cfg)
    _reporter(report_format).synthesis(season, season.write(out_dir))


@main.command()
@_climate_option
@_labels_option
@click.option('--model', 'model_id', type=click.Choice(MODEL_IDS, case_sensitive=False), default='m2', show_default=True)
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False, path_type=Path), help='Bundle file to write')
@click.option('--n-trees', type=click.IntRange(1), default=None, help='Trees per stage forest')
@_seed_option
@_cycle_option
@_gap_option
@_format_option
@click.pass_context
def train(ctx, climate, labels, model_id, out_path, n_trees, seed, cycle_start, max_gap, report_format) -> None:
    """Train the phase tree and the five stage forests into a model bundle."""
    from sunnpest.core.bundle import save_bundle, train_bundle
    from sunnpest.core.pipeline import corpus_dataset

    config = _config(ctx)
    seed = _seed(ctx, seed)
    corpus = _corpus(ctx, climate, labels, cycle_start, max_gap)
    dataset = corpus_dataset(corpus, model_id)
    bundle = train_bundle(dataset, corpus.clock, config.tree_params(seed), config.forest_params(seed, n_trees))
    save_bundle(bundle, out_path)
    reporter = _reporter(report_format)
    reporter.diagnostics([*dataset.diagnostics, *corpus.all_diagnostics()])
    reporter.training_summary(bundle, out_path)


@main.command()
@_climate_option
@_labels_option
@click.option('--model', 'model_id', type=click.Choice((*MODEL_IDS, 'all'), case_sensitive=False), default='m2', show_default=True)
@click.option('--target', type=click.Choice(('phase', 'ratios', 'both')), default='both', show_default=True)
@click.option('--folds', type=int, default=None, help='Number of CV folds (default: config, 10)')
@click.option('--level', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=None, help='Confidence level')
@click.option('--n-trees', type=click.IntRange(1), default=None, help='Trees per stage forest')
@click.option('--report-out', type=click.Path(dir_okay=False, path_type=Path), default=None, help='Write the reports as JSON')
@click.option('--pairs-out', type=click.Path(dir_okay=False, path_type=Path), default=None, help='Write out-of-fold stage,predicted,actual CSV')
@_seed_option
@_cycle_option
@_gap_option
@_format_option
@click.pass_context
def evaluate(ctx, climate, labels, model_id, target, folds, level, n_trees, report_out, pairs_out, seed, cycle_start, max_gap, report_format) -> None:
    """Cross-validate phase classification and stage-ratio regression."""
    from sunnpest.core.evaluation import cross_validate_classifier, cross_validate_regressor
    from sunnpest.core.pipeline import corpus_dataset

    config = _config(ctx)
    seed = _seed(ctx, seed)
    folds = config.evaluation.folds if folds is None else folds
    level = config.evaluation.level if level is None else level
    corpus = _corpus(ctx, climate, labels, cycle_start, max_gap)

    model_ids = MODEL_IDS if model_id.lower() == 'all' else (model_id.lower(),)
    reports = {}
    diagnostics: dict = {}
    for mid in model_ids:
        dataset = corpus_dataset(corpus, mid)
        # m2 and m3 drop the same labeled days
        diagnostics.update(dict.fromkeys(dataset.diagnostics))
        model_reports = []
        if target in ('phase', 'both'):
            model_reports.append(cross_validate_classifier(dataset, config.tree_params(seed), folds, seed, level))
        if target in ('ratios', 'both'):
            model_reports.append(cross_validate_regressor(dataset, config.forest_params(seed, n_trees), folds, seed, level))
        reports[mid] = model_reports

    reporter = _reporter(report_format)
    reporter.diagnostics([*diagnostics, *corpus.all_diagnostics()])
    if len(reports) == 1:
        for report in reports[model_ids[0]]:
            reporter.evaluation(report)
    else:
        reporter.comparison(reports)

    if report_out is not None:
        document = {'reports': [report.to_dict() for model_reports in reports.values() for report in model_reports]}
        report_out.write_text(json.dumps(document, indent=2) + '\n', encoding='utf-8')
    if pairs_out is not None:
        _write_pairs(pairs_out, reports)


def _write_pairs(path: Path, reports: dict) -> None:
    import pandas as pd

    rows = [
        {'model': mid, 'stage': stage, 'predicted': p, 'actual': a}
        for mid, model_reports in reports.items()
        for report in model_reports
        if report.kind == 'regression'
        for stage, pairs in report.pairs.items()
        for p, a in pairs
    ]
    if not rows:
        raise InputError('--pairs-out needs a regression evaluation (--target ratios or both)')
    frame = pd.DataFrame(rows, columns=['model', 'stage', 'predicted', 'actual'])
    if frame['model'].nunique() == 1:
        frame = frame.drop(columns='model')
    frame.to_csv(path, index=False, lineterminator='\n')


def _stages(ctx, param, value: str | None):
    if value is None:
        return None
    try:
        return frozenset(int(part) for part in value.split(',') if part.strip())
    except ValueError:
        raise click.BadParameter(f'expected comma-separated stage numbers, got {value!r}') from None


@main.command()
@click.option('--bundle', 'bundle_path', required=True, type=click.Path(dir_okay=False, path_type=Path), help='Model bundle')
@_climate_option
@click.option('--from', 'date_from', type=click.DateTime(['%Y-%m-%d']), default=None, help='First day (inclusive)')
@click.option('--to', 'date_to', type=click.DateTime(['%Y-%m-%d']), default=None, help='Last day (inclusive)')
@click.option('--warn-stages', callback=_stages, default=None, help='Watched stages, e.g. 2,3')
@click.option('--warn-threshold', type=float, default=None, help='Watched-stage share that opens the spray window')
@click.option('--require-phase3/--no-require-phase3', default=None, help='Only warn once the pest is in the fields')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False, path_type=Path), default=None, help='Also write records to this file')
@_gap_option
@_format_option
@click.pass_context
def predict(ctx, bundle_path, climate, date_from, date_to, warn_stages, warn_threshold, require_phase3, out_path, max_gap, report_format) -> None:
    """Forecast phase, stage ratios and the spray warning for every station-day."""
    from sunnpest.core.bundle import load_bundle
    from sunnpest.core.forecast import forecast_corpus

    bundle = load_bundle(bundle_path)
    rule = _config(ctx).warning_rule(warn_stages, warn_threshold, require_phase3)
    corpus = _corpus(ctx, climate, (), bundle.clock.cycle_start, max_gap)
    start = date_from.date() if date_from else None
    end = date_to.date() if date_to else None
    forecasts = forecast_corpus(corpus.stations, bundle, rule, start, end)

    reporter = _reporter(report_format)
    reporter.diagnostics(corpus.all_diagnostics())
    reporter.forecasts(forecasts)
    if out_path is not None:
        with open(out_path, 'w', encoding='utf-8') as f:
            _reporter('records', f).forecasts(forecasts)


@main.command('export-dot')
@click.option('--bundle', 'bundle_path', required=True, type=click.Path(dir_okay=False, path_type=Path), help='Model bundle')
@click.option('--which', default='phase', show_default=True, help='phase, or stage:<1-5> for a stage forest')
@click.option('--tree', 'tree_index', type=click.IntRange(0), default=0, show_default=True, help='Tree index within a stage forest')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False, path_type=Path), default=None, help='DOT file (default: stdout)')
def export_dot_cmd(bundle_path: Path, which: str, tree_index: int, out_path: Path | None) -> None:
    """Write a trained tree as a Graphviz DOT digraph."""
    from sunnpest.core.bundle import load_bundle
    from sunnpest.frontends.dot import export_dot

    source = export_dot(load_bundle(bundle_path), which, tree_index)
    if out_path is None:
        click.echo(source, nl=False)
    else:
        out_path.write_text(source, encoding='utf-8')


@main.group()
def config() -> None:
    """Show or initialise the configuration file."""


@config.command('show')
@click.pass_context
def config_show(ctx) -> None:
    """Print the effective configuration as TOML."""
    import tomli_w

    click.echo(f'# {ctx.obj["config_path"]}')
    click.echo(tomli_w.dumps(_config(ctx).to_dict()), nl=False)


@config.command('init')
@click.option('--force', is_flag=True, help='Overwrite an existing file')
@click.pass_context
def config_init(ctx, force: bool) -> None:
    """Write the default configuration."""
    path = ctx.obj['config_path']
    if path.exists() and not force:
        raise InputError(f'{path} already exists (use --force to overwrite)')
    click.echo(f'Wrote {save_config(Config(), path)}')
