"""Line-delimited JSON output, one record per line."""

import json
from pathlib import Path

from sunnpest.core.bundle import ModelBundle
from sunnpest.core.diagnostics import Diagnostic
from sunnpest.core.evaluation import EvalReport
from sunnpest.core.forecast import DailyForecast
from sunnpest.core.synthetic import SynthSeason

from .base import Reporter


def to_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(',', ':'))


class RecordsReporter(Reporter):
    def training_summary(self, bundle: ModelBundle, path: Path) -> None:
        self.emit(
            to_line(
                {
                    'record': 'training',
                    'bundle': str(path),
                    'model_id': bundle.spec.model_id,
                    'features': list(bundle.spec.fields),
                    'phase_tree_nodes': bundle.classifier.node_count,
                    **bundle.metadata.to_dict(),
                }
            )
        )

    def evaluation(self, report: EvalReport) -> None:
        self.emit(to_line({'record': 'evaluation', **report.to_dict()}))

    def comparison(self, reports: dict[str, list[EvalReport]]) -> None:
        for model_reports in reports.values():
            for report in model_reports:
                self.evaluation(report)

    def forecasts(self, items: list[DailyForecast]) -> None:
        for item in items:
            self.emit(to_line(item.to_record()))

    def synthesis(self, season: SynthSeason, written: list[Path]) -> None:
        for path in written:
            self.emit(to_line({'record': 'synthetic_file', 'path': str(path)}))

    def diagnostics(self, items: list[Diagnostic]) -> None:
        for item in items:
            record = {
                'record': 'diagnostic',
                'kind': item.kind,
                'station_id': item.station_id,
                'date': item.date.isoformat() if item.date else None,
                'line': item.line,
                'message': item.describe(),
            }
            self.emit(to_line(record))
