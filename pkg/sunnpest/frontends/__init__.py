"""Output frontends for sunnpest."""

from .base import Reporter, ReporterRegistry
from .dot import export_dot, tree_to_dot
from .records import RecordsReporter
from .table import TableReporter

REPORTERS = ReporterRegistry()
REPORTERS.register('table', TableReporter)
REPORTERS.register('records', RecordsReporter)

__all__ = ['REPORTERS', 'Reporter', 'ReporterRegistry', 'RecordsReporter', 'TableReporter', 'export_dot', 'tree_to_dot']
