"""Human-readable plain-text tables."""

from collections import Counter
from pathlib import Path

from sunnpest.core.bundle import ModelBundle
from sunnpest.core.diagnostics import Diagnostic
from sunnpest.core.evaluation import EvalReport, Interval
from sunnpest.core.forecast import DailyForecast
from sunnpest.core.synthetic import SynthSeason

from .base import Reporter

DIAGNOSTIC_LINES = 20


def format_interval(interval: Interval) -> str:
    return f'[{interval.lower:.4f}, {interval.upper:.4f}] at {interval.confidence_level:.0%} ({interval.method})'


def _r(value: float | None) -> str:
    return 'n/a' if value is None else f'{value:.4f}'


class TableReporter(Reporter):
    def training_summary(self, bundle: ModelBundle, path: Path) -> None:
        meta = bundle.metadata
        self.emit(f'Trained {bundle.spec.model_id} ({len(bundle.spec.fields)} features) -> {path}')
        self.emit(f'  instances           {meta.instances}')
        self.emit(f'  with nymph counts   {meta.regression_instances}')
        self.emit(f'  dropped labels      {meta.dropped}')
        self.emit(f'  stations            {", ".join(meta.stations)}')
        self.emit(f'  period              {meta.first_date.isoformat()} .. {meta.last_date.isoformat()}')
        self.emit(f'  phase tree          {bundle.classifier.node_count} nodes, depth {bundle.classifier.depth()}')
        forest_nodes = sum(tree.node_count for forest in bundle.ratios.forests for tree in forest.trees)
        self.emit(f'  stage forests       5 x {meta.forest_params.n_trees} trees, {forest_nodes} nodes')

    def evaluation(self, report: EvalReport) -> None:
        target = 'phase classifier' if report.kind == 'classification' else 'stage ratio forests'
        self.emit(f'Model {report.model_id} - {target}, {report.folds}-fold CV (seed {report.seed})')
        self.emit(f'  instances       {report.n}')
        if report.kind == 'classification':
            assert report.confusion is not None and report.accuracy is not None
            self.emit(f'  accuracy        {report.accuracy:.6f} ({report.accuracy:.4%})')
            self.emit(f'  error interval  {format_interval(report.error_interval)}')
            self.emit('  confusion (rows actual, columns predicted)')
            classes = report.confusion.classes
            self.emit('        ' + ''.join(f'{f"P{c}":>8}' for c in classes))
            for c, row in zip(classes, report.confusion.counts):
                self.emit(f'    {f"P{c}":<4}' + ''.join(f'{int(v):>8}' for v in row))
        else:
            self.emit(f'  mean abs error  {format_interval(report.error_interval)}')
            self.emit(f'  {"stage":<7}{"r":>8}{"mae":>9}  interval')
            for s in sorted(report.pearson):
                self.emit(f'  {s:<7}{_r(report.pearson[s]):>8}{report.mae[s]:>9.4f}  {format_interval(report.stage_intervals[s])}')
        for flag in report.flags:
            self.emit(f'  ! {flag}')
        self.emit()

    def comparison(self, reports: dict[str, list[EvalReport]]) -> None:
        for model_reports in reports.values():
            for report in model_reports:
                self.evaluation(report)
        self.emit('Summary')
        self.emit(f'  {"model":<7}{"accuracy":>10}  {"stage r (1..5)"}')
        for model_id, model_reports in reports.items():
            accuracy = next((r.accuracy for r in model_reports if r.kind == 'classification'), None)
            pearson = next((r.pearson for r in model_reports if r.kind == 'regression'), {})
            shown = '-' if accuracy is None else f'{accuracy:.4%}'
            self.emit(f'  {model_id:<7}{shown:>10}  {" ".join(_r(pearson[s]) for s in sorted(pearson)) or "-"}')

    def forecasts(self, items: list[DailyForecast]) -> None:
        self.emit(f'{"station":<10}{"date":<12}{"phase":>6}  {"stage %  1/2/3/4/5":<30}{"warning"}')
        for item in items:
            ratios = '/'.join(f'{p:.0f}' for p in item.ratios.as_percentages())
            self.emit(f'{item.station_id:<10}{item.date.isoformat():<12}{int(item.phase):>6}  {ratios:<30}{item.warning}')

    def synthesis(self, season: SynthSeason, written: list[Path]) -> None:
        cfg = season.config
        self.emit(f'Generated {cfg.stations} station(s) x {cfg.years} year(s), seed {cfg.rng_seed}')
        self.emit(f'  labeled days       {len(season.truth)}')
        self.emit(f'  with nymph counts  {int(season.truth["r1"].notna().sum())}')
        self.emit(f'  injected gaps      {len(season.gaps)}')
        for path in written:
            self.emit(f'  wrote {path}')

    def diagnostics(self, items: list[Diagnostic]) -> None:
        if not items:
            return
        counts = Counter(item.kind for item in items)
        self.emit(f'Diagnostics ({len(items)}): ' + ', '.join(f'{kind} {n}' for kind, n in sorted(counts.items())))
        for item in items[:DIAGNOSTIC_LINES]:
            self.emit(f'  {item.describe()}')
        if len(items) > DIAGNOSTIC_LINES:
            self.emit(f'  ... {len(items) - DIAGNOSTIC_LINES} more (--report-format records lists all)')
        self.emit()
